// Session controller: owns the socket, the optimistic scene mirror, the
// selected tool, drags, wall drawing, and the incoming audio stream. All
// interaction rules live here so they are testable without a DOM.

import { JitterBuffer } from "./jitter";
import { SceneMirror } from "./mirror";
import { buildOverlay, type OverlayModel } from "./overlay";
import {
  serializeControl,
  unpackAudioFrame,
  type ControlMessage,
  type MutationOp,
  type SceneDocument,
  type Snapshot,
  type StatsMessage,
  type Transport,
  type TransportState,
} from "./protocol";
import type { SocketLike } from "./socket";
import { screenToWorld, type Camera, type Point, type Tool } from "./transform";

const DRAG_SENDS_PER_SECOND = 30;

export type ConnectionState = "connecting" | "open" | "closed";

export interface PendingWall { materialId: string; vertices: Point[] }

export interface ControllerEvents {
  onOverlay?: (overlay: OverlayModel) => void;
  onSceneChanged?: () => void;
  onNotice?: (text: string) => void;
  onConnection?: (state: ConnectionState) => void;
  onStats?: (stats: StatsMessage) => void;
}

interface DragState {
  kind: "emitter" | "receptor";
  id: string | null;
  pos: Point;        // latest optimistic position (world)
  lastSentAt: number; // ms
  dirty: boolean;    // a position newer than the last send exists
}

export class SessionController {
  readonly mirror = new SceneMirror();
  readonly jitter: JitterBuffer;
  camera: Camera = { x: -6, y: 5, zoom: 60 };

  private socket: SocketLike;
  private readonly events: ControllerEvents;
  private readonly now: () => number;
  private clientSeq = 0;
  private readonly pendingKinds = new Map<number, string>();
  private drag: DragState | null = null;

  tool: Tool = "select";
  activeMaterialId: string | null = null;
  selectedEmitterId: string | null = null;
  pendingWall: PendingWall | null = null;
  readOnly = false;
  connection: ConnectionState = "connecting";
  transport: Transport = { state: "playing", position: 0 };
  snapshot: Snapshot | null = null;
  lastStats: StatsMessage | null = null;
  notice: string | null = null;

  constructor(
    socket: SocketLike,
    events: ControllerEvents = {},
    opts: { now?: () => number; blockSize?: number } = {},
  ) {
    this.socket = socket;
    this.events = events;
    this.now = opts.now ?? (() => performance.now());
    this.jitter = new JitterBuffer(opts.blockSize ?? 512);
    socket.onopen = () => {
      this.connection = "open";
      this.send({ type: "hello", client_seq: 0, name: "editor" });
      this.events.onConnection?.("open");
    };
    socket.onmessage = (ev) => {
      if (typeof ev.data === "string") this.handleText(ev.data);
      else this.handleBinary(ev.data);
    };
    socket.onclose = () => {
      this.connection = "closed";
      this.jitter.reset();
      this.events.onConnection?.("closed");
    };
  }

  // ---- outgoing ----

  // bookkeeping happens before the write: a same-tick ack must find it
  private send(msg: ControlMessage, beforeSend?: (seq: number) => void): number {
    this.clientSeq += 1;
    const seq = this.clientSeq;
    this.pendingKinds.set(seq, msg.type);
    beforeSend?.(seq);
    this.socket.send(serializeControl({ ...msg, client_seq: seq }));
    return seq;
  }

  private sendMutate(ops: MutationOp[]): void {
    this.send({ type: "mutate", client_seq: 0, ops }, (seq) => {
      this.mirror.optimistic(seq, ops);
    });
    this.emitScene();
  }

  setTransport(state: TransportState, position?: number): void {
    this.send({ type: "set_transport", client_seq: 0, state, position });
  }

  setConstants(values: { c?: number; d?: number; max_segment_length?: number }): void {
    if (this.readOnly) {
      this.showNotice("read-only session");
      return;
    }
    this.sendMutate([{ op: "set_constants", ...values }]);
  }

  // ---- incoming ----

  private handleText(text: string): void {
    const msg = (() => {
      try {
        return JSON.parse(text) as { type?: string } & Record<string, unknown>;
      } catch {
        return null;
      }
    })();
    if (msg === null || typeof msg.type !== "string") return;
    switch (msg.type) {
      case "ack": {
        const m = msg as unknown as { client_seq: number };
        this.pendingKinds.delete(m.client_seq);
        this.mirror.ack(m.client_seq);
        this.emitScene();
        break;
      }
      case "error": {
        const m = msg as unknown as { client_seq: number | null; reason: string };
        if (m.client_seq !== null) {
          const kind = this.pendingKinds.get(m.client_seq);
          this.pendingKinds.delete(m.client_seq);
          if (kind === "mutate") this.mirror.reject(m.client_seq); // roll back
        }
        if (m.reason === "read_only") {
          this.readOnly = true;
          this.showNotice("read-only session: edits rejected");
        } else {
          this.showNotice(m.reason);
        }
        this.emitScene();
        break;
      }
      case "scene_state": {
        const m = msg as unknown as {
          document: SceneDocument;
          revision: number;
          read_only: boolean;
          transport: Transport;
        };
        this.mirror.setSceneState(m.document, m.revision);
        const wasReadOnly = this.readOnly;
        this.readOnly = m.read_only;
        this.transport = m.transport;
        if (this.selectedEmitterId === null) {
          this.selectedEmitterId = m.document.emitters[0]?.id ?? null;
        }
        if (this.activeMaterialId === null) {
          this.activeMaterialId = m.document.materials[0]?.id ?? null;
        }
        if (wasReadOnly && !m.read_only) this.showNotice("you are the editor now");
        this.emitScene();
        this.emitOverlay();
        break;
      }
      case "snapshot": {
        const m = msg as unknown as { snapshot: Snapshot };
        // stale revisions can arrive around a load_scene; never go backwards
        if (this.snapshot !== null && m.snapshot.revision < this.snapshot.revision) break;
        this.snapshot = m.snapshot;
        this.emitOverlay();
        break;
      }
      case "stats": {
        const m = msg as unknown as StatsMessage;
        this.lastStats = m;
        this.transport = m.transport;
        this.events.onStats?.(m);
        break;
      }
    }
  }

  private handleBinary(buf: ArrayBuffer): void {
    try {
      const frame = unpackAudioFrame(buf);
      this.jitter.push(frame.seq, frame.samples);
    } catch {
      // a malformed frame poisons nothing but itself
    }
  }

  // ---- view plumbing ----

  viewDocument(): SceneDocument | null {
    const doc = this.mirror.view();
    if (doc === null) return null;
    if (this.drag !== null) {
      if (this.drag.kind === "emitter" && this.drag.id !== null) {
        const e = doc.emitters.find((it) => it.id === this.drag!.id);
        if (e) {
          e.x = this.drag.pos.x;
          e.y = this.drag.pos.y;
        }
      } else if (this.drag.kind === "receptor") {
        doc.receptor.x = this.drag.pos.x;
        doc.receptor.y = this.drag.pos.y;
      }
    }
    return doc;
  }

  currentOverlay(): OverlayModel | null {
    const doc = this.viewDocument();
    if (doc === null) return null;
    return buildOverlay(doc, this.snapshot, this.selectedEmitterId);
  }

  private emitOverlay(): void {
    const overlay = this.currentOverlay();
    if (overlay !== null) this.events.onOverlay?.(overlay);
  }

  private emitScene(): void {
    this.events.onSceneChanged?.();
  }

  private showNotice(text: string): void {
    this.notice = text;
    this.events.onNotice?.(text);
  }

  // ---- tools ----

  setTool(tool: Tool): void {
    this.tool = tool;
    this.pendingWall = null; // pending vertices never survive a tool change
    this.emitScene();
  }

  setActiveMaterial(id: string): void {
    this.activeMaterialId = id;
  }

  selectEmitter(id: string): void {
    this.selectedEmitterId = id;
    this.emitOverlay(); // overlay re-keys to the newly selected emitter
  }

  // ---- dragging ----

  beginDrag(kind: "emitter" | "receptor", id: string | null, screen: Point): void {
    if (this.tool !== "move" && this.tool !== "select") return;
    const pos = screenToWorld(screen, this.camera);
    this.drag = { kind, id, pos, lastSentAt: -Infinity, dirty: true };
    if (kind === "emitter" && id !== null) this.selectEmitter(id);
  }

  dragTo(screen: Point): void {
    if (this.drag === null) return;
    this.drag.pos = screenToWorld(screen, this.camera);
    this.drag.dirty = true;
    this.emitScene();
    if (this.readOnly) return; // ghost moves locally, nothing is sent
    const minInterval = 1000 / DRAG_SENDS_PER_SECOND;
    if (this.now() - this.drag.lastSentAt >= minInterval) {
      this.flushDrag();
    }
  }

  endDrag(): void {
    const drag = this.drag;
    if (drag === null) return;
    if (this.readOnly) {
      this.drag = null; // snap back to the authoritative position
      this.showNotice("read-only session: position not saved");
      this.emitScene();
      return;
    }
    if (drag.dirty) this.flushDrag(); // the final position always commits
    this.drag = null;
    this.emitScene();
  }

  private flushDrag(): void {
    const drag = this.drag;
    if (drag === null || !drag.dirty) return;
    const op: MutationOp =
      drag.kind === "emitter" && drag.id !== null
        ? { op: "move_emitter", id: drag.id, x: drag.pos.x, y: drag.pos.y }
        : { op: "move_receptor", x: drag.pos.x, y: drag.pos.y };
    this.sendMutate([op]);
    drag.lastSentAt = this.now();
    drag.dirty = false;
  }

  // ---- wall drawing ----

  wallClick(screen: Point): void {
    if (this.tool !== "draw_wall" || this.activeMaterialId === null) return;
    const world = screenToWorld(screen, this.camera);
    if (this.pendingWall === null) {
      // material is captured at the first vertex and kept for the whole wall
      this.pendingWall = { materialId: this.activeMaterialId, vertices: [world] };
    } else {
      this.pendingWall.vertices.push(world);
    }
    this.emitScene();
  }

  commitWall(): void {
    const pending = this.pendingWall;
    this.pendingWall = null;
    if (pending === null || pending.vertices.length < 2) {
      this.emitScene(); // fewer than 2 vertices: nothing to add
      return;
    }
    if (this.readOnly) {
      this.showNotice("read-only session: wall not saved");
      this.emitScene();
      return;
    }
    this.sendMutate([
      {
        op: "add_wall",
        material_id: pending.materialId,
        vertices: pending.vertices.map((v) => [v.x, v.y] as [number, number]),
        id: `w-${Math.random().toString(36).slice(2, 10)}`,
      },
    ]);
  }

  // ---- emitter placement ----

  placeEmitter(screen: Point, track = ""): void {
    if (this.tool !== "place_emitter") return;
    if (this.readOnly) {
      this.showNotice("read-only session");
      return;
    }
    const world = screenToWorld(screen, this.camera);
    const id = `e-${Math.random().toString(36).slice(2, 10)}`;
    this.sendMutate([{ op: "add_emitter", x: world.x, y: world.y, track, id }]);
    this.selectedEmitterId = id;
  }

  close(): void {
    this.socket.close();
  }
}
