// Shared test plumbing: an in-memory socket pair and a fake server that
// speaks the live-session protocol well enough to drive the real client.

import type {
  ControlMessage,
  EmitterMix,
  MutationOp,
  SceneDocument,
  ServerMessage,
  Snapshot,
} from "../src/protocol";
import type { SocketLike } from "../src/socket";

// distributes over the union so each variant loses only server_seq
type Unsequenced<T> = T extends { server_seq: number } ? Omit<T, "server_seq"> : never;

export class FakeSocket implements SocketLike {
  peer: FakeSocket | null = null;
  onopen: (() => void) | null = null;
  onmessage: ((ev: { data: string | ArrayBuffer }) => void) | null = null;
  onclose: (() => void) | null = null;
  readonly sent: (string | ArrayBuffer)[] = [];
  closed = false;

  send(data: string | ArrayBuffer): void {
    this.sent.push(data);
    // synchronous delivery keeps tests deterministic
    this.peer?.onmessage?.({ data });
  }

  close(): void {
    this.closed = true;
    this.onclose?.();
    this.peer?.onclose?.();
  }

  open(): void {
    this.onopen?.();
    this.peer?.onopen?.();
  }

  static pair(): [FakeSocket, FakeSocket] {
    const a = new FakeSocket();
    const b = new FakeSocket();
    a.peer = b;
    b.peer = a;
    return [a, b];
  }
}

export function packFrame(seq: number, samples: ArrayLike<number>): ArrayBuffer {
  const buf = new ArrayBuffer(8 + 4 * samples.length);
  const view = new DataView(buf);
  view.setUint32(0, seq >>> 0, true);
  view.setUint32(4, samples.length, true);
  for (let i = 0; i < samples.length; i++) view.setFloat32(8 + 4 * i, samples[i], true);
  return buf;
}

export function sceneDoc(overrides: Partial<SceneDocument> = {}): SceneDocument {
  return {
    format_version: 1,
    c: 0.5,
    d: 1.0,
    max_segment_length: 0.25,
    receptor: { x: 1.0, y: 1.0 },
    emitters: [
      { id: "e1", x: 1.0, y: 2.0, track: "tone", gain: 1.0, loop: true, start_offset: 0.0 },
    ],
    materials: [
      {
        id: "m1",
        r_filter: { kind: "Gain", params: { g: 1.0 } },
        t_filter: { kind: "Gain", params: { g: 1.0 } },
      },
    ],
    walls: [],
    assets: {},
    ...overrides,
  };
}

function dist(ax: number, ay: number, bx: number, by: number): number {
  return Math.max(Math.hypot(ax - bx, ay - by), 0.1);
}

// Mix numbers here only have to move the way the real engine's would (drag
// changes d_mix, adding a wall turns wet mixes on); exact values are the
// backend's business and are pinned by its own suite.
export function fakeSnapshot(doc: SceneDocument, revision: number): Snapshot {
  const hasWalls = doc.walls.length > 0;
  const per_emitter: EmitterMix[] = doc.emitters.map((e) => ({
    emitter_id: e.id,
    d_mix: 1 / dist(e.x, e.y, doc.receptor.x, doc.receptor.y),
    r_mix: hasWalls ? 0.3 : 0,
    t_mix: 0,
    r_total: hasWalls ? 0.5 : 0,
    t_total: 0,
    materials: doc.materials.map((m, i) => ({
      material_id: m.id,
      r_mix: hasWalls && i === 0 ? 1 : 0,
      t_mix: 0,
    })),
  }));
  return { revision, per_emitter };
}

function applyServerOp(doc: SceneDocument, op: MutationOp): void {
  switch (op.op) {
    case "move_emitter": {
      const e = doc.emitters.find((it) => it.id === op.id);
      if (e === undefined) throw new Error("unknown id");
      e.x = op.x;
      e.y = op.y;
      break;
    }
    case "move_receptor":
      doc.receptor.x = op.x;
      doc.receptor.y = op.y;
      break;
    case "add_wall":
      if (op.vertices.length < 2) throw new Error("wall needs at least 2 vertices");
      doc.walls.push({
        id: op.id ?? `w${doc.walls.length + 1}`,
        material_id: op.material_id,
        vertices: op.vertices.map((v) => [v[0], v[1]]),
      });
      break;
    case "add_emitter":
      doc.emitters.push({
        id: op.id ?? `e${doc.emitters.length + 1}`,
        x: op.x,
        y: op.y,
        track: op.track ?? "",
        gain: op.gain ?? 1,
        loop: op.loop ?? true,
        start_offset: op.start_offset ?? 0,
      });
      break;
    case "set_constants":
      if (op.c !== undefined) doc.c = op.c;
      if (op.d !== undefined) doc.d = op.d;
      break;
    default:
      throw new Error(`fake server does not implement ${op.op}`);
  }
}

export class FakeServer {
  readonly socket: FakeSocket;
  doc: SceneDocument;
  revision = 0;
  serverSeq = 0;
  audioSeq = 0;
  readOnly: boolean;
  readonly received: ControlMessage[] = [];

  constructor(socket: FakeSocket, doc: SceneDocument, readOnly = false) {
    this.socket = socket;
    this.doc = doc;
    this.readOnly = readOnly;
    socket.onmessage = (ev) => {
      if (typeof ev.data !== "string") throw new Error("client sent binary");
      this.handle(JSON.parse(ev.data) as ControlMessage);
    };
  }

  sendMessage(msg: Unsequenced<ServerMessage>): void {
    this.serverSeq += 1;
    this.socket.send(JSON.stringify({ ...msg, server_seq: this.serverSeq }));
  }

  sendSnapshot(): void {
    this.sendMessage({ type: "snapshot", snapshot: fakeSnapshot(this.doc, this.revision) });
  }

  sendAudio(value: number, blockSize = 512): void {
    const samples = new Float32Array(blockSize).fill(value);
    this.socket.send(packFrame(this.audioSeq++, samples));
  }

  private handle(msg: ControlMessage): void {
    this.received.push(msg);
    switch (msg.type) {
      case "hello":
        this.sendMessage({ type: "ack", client_seq: msg.client_seq });
        this.sendMessage({
          type: "scene_state",
          document: this.doc,
          revision: this.revision,
          read_only: this.readOnly,
          transport: { state: "playing", position: 0 },
        });
        this.sendSnapshot();
        break;
      case "mutate": {
        if (this.readOnly) {
          this.sendMessage({ type: "error", client_seq: msg.client_seq, reason: "read_only" });
          return;
        }
        const before = structuredClone(this.doc);
        try {
          for (const op of msg.ops) applyServerOp(this.doc, op);
        } catch (err) {
          this.doc = before;
          this.sendMessage({
            type: "error",
            client_seq: msg.client_seq,
            reason: (err as Error).message,
          });
          return;
        }
        this.revision += 1;
        this.sendMessage({ type: "ack", client_seq: msg.client_seq });
        this.sendSnapshot();
        break;
      }
      case "set_transport":
      case "set_constants":
      case "load_scene":
      case "ping":
        this.sendMessage({ type: "ack", client_seq: msg.client_seq });
        break;
    }
  }
}
