// Optimistic local copy of the server's scene. Mutations we sent but that
// the server has not acked yet are replayed on top of the last authoritative
// document; an ack folds them in, an error drops them (automatic rollback).

import type { MutationOp, SceneDocument } from "./protocol";

function applyOp(doc: SceneDocument, op: MutationOp): void {
  switch (op.op) {
    case "move_emitter": {
      const e = doc.emitters.find((it) => it.id === op.id);
      if (e) {
        e.x = op.x;
        e.y = op.y;
      }
      break;
    }
    case "move_receptor":
      doc.receptor.x = op.x;
      doc.receptor.y = op.y;
      break;
    case "add_emitter":
      doc.emitters.push({
        id: op.id ?? `e-local-${doc.emitters.length}`,
        x: op.x,
        y: op.y,
        track: op.track ?? "",
        gain: op.gain ?? 1.0,
        loop: op.loop ?? true,
        start_offset: op.start_offset ?? 0.0,
      });
      break;
    case "remove_emitter":
      doc.emitters = doc.emitters.filter((it) => it.id !== op.id);
      break;
    case "set_emitter": {
      const e = doc.emitters.find((it) => it.id === op.id);
      if (e) {
        if (op.gain !== undefined) e.gain = op.gain;
        if (op.track !== undefined) e.track = op.track;
        if (op.loop !== undefined) e.loop = op.loop;
        if (op.start_offset !== undefined) e.start_offset = op.start_offset;
      }
      break;
    }
    case "add_wall":
      doc.walls.push({
        id: op.id ?? `w-local-${doc.walls.length}`,
        material_id: op.material_id,
        vertices: op.vertices.map((v) => [v[0], v[1]]),
      });
      break;
    case "remove_wall":
      doc.walls = doc.walls.filter((it) => it.id !== op.id);
      break;
    case "move_wall": {
      const w = doc.walls.find((it) => it.id === op.id);
      if (w) w.vertices = w.vertices.map((v) => [v[0] + op.dx, v[1] + op.dy]);
      break;
    }
    case "set_wall_material": {
      const w = doc.walls.find((it) => it.id === op.id);
      if (w) w.material_id = op.material_id;
      break;
    }
    case "set_constants":
      if (op.c !== undefined) doc.c = op.c;
      if (op.d !== undefined) doc.d = op.d;
      if (op.max_segment_length !== undefined) doc.max_segment_length = op.max_segment_length;
      break;
  }
}

interface PendingEntry { seq: number; ops: MutationOp[] }

export class SceneMirror {
  private base: SceneDocument | null = null;
  private pending: PendingEntry[] = [];
  revision = 0;

  get connected(): boolean {
    return this.base !== null;
  }

  // Authoritative state replaces everything, including unacked optimism.
  setSceneState(doc: SceneDocument, revision: number): void {
    this.base = structuredClone(doc);
    this.revision = revision;
    this.pending = [];
  }

  optimistic(seq: number, ops: MutationOp[]): void {
    this.pending.push({ seq, ops: structuredClone(ops) });
  }

  ack(seq: number): void {
    const idx = this.pending.findIndex((p) => p.seq === seq);
    if (idx < 0 || this.base === null) return;
    // server applied it: fold into the base in order
    for (const entry of this.pending.splice(0, idx + 1)) {
      for (const op of entry.ops) applyOp(this.base, op);
    }
  }

  reject(seq: number): void {
    this.pending = this.pending.filter((p) => p.seq !== seq);
  }

  pendingCount(): number {
    return this.pending.length;
  }

  view(): SceneDocument | null {
    if (this.base === null) return null;
    const doc = structuredClone(this.base);
    for (const entry of this.pending) {
      for (const op of entry.ops) applyOp(doc, op);
    }
    return doc;
  }
}
