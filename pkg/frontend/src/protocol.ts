// Wire types for the editing session. Field names match the JSON exactly;
// keep snake_case here so messages serialize without any mapping layer.

export interface MoveEmitterOp { op: "move_emitter"; id: string; x: number; y: number }
export interface MoveReceptorOp { op: "move_receptor"; x: number; y: number }
export interface AddEmitterOp {
  op: "add_emitter";
  x: number;
  y: number;
  track?: string;
  gain?: number;
  loop?: boolean;
  start_offset?: number;
  id?: string;
}
export interface RemoveEmitterOp { op: "remove_emitter"; id: string }
export interface SetEmitterOp {
  op: "set_emitter";
  id: string;
  gain?: number;
  track?: string;
  loop?: boolean;
  start_offset?: number;
}
export interface AddWallOp {
  op: "add_wall";
  vertices: [number, number][];
  material_id: string;
  id?: string;
}
export interface RemoveWallOp { op: "remove_wall"; id: string }
export interface MoveWallOp { op: "move_wall"; id: string; dx: number; dy: number }
export interface SetWallMaterialOp { op: "set_wall_material"; id: string; material_id: string }
export interface SetConstantsOp {
  op: "set_constants";
  c?: number;
  d?: number;
  max_segment_length?: number;
}

export type MutationOp =
  | MoveEmitterOp
  | MoveReceptorOp
  | AddEmitterOp
  | RemoveEmitterOp
  | SetEmitterOp
  | AddWallOp
  | RemoveWallOp
  | MoveWallOp
  | SetWallMaterialOp
  | SetConstantsOp;

export type TransportState = "playing" | "stopped";

export interface ControlBase { client_seq: number }
export interface HelloMessage extends ControlBase { type: "hello"; name?: string }
export interface LoadSceneMessage extends ControlBase { type: "load_scene"; document: SceneDocument }
export interface MutateMessage extends ControlBase { type: "mutate"; ops: MutationOp[] }
export interface SetTransportMessage extends ControlBase {
  type: "set_transport";
  state: TransportState;
  position?: number;
}
export interface SetConstantsMessage extends ControlBase {
  type: "set_constants";
  c?: number;
  d?: number;
  max_segment_length?: number;
}
export interface PingMessage extends ControlBase { type: "ping" }

export type ControlMessage =
  | HelloMessage
  | LoadSceneMessage
  | MutateMessage
  | SetTransportMessage
  | SetConstantsMessage
  | PingMessage;

export interface EmitterDoc {
  id: string;
  x: number;
  y: number;
  track: string;
  gain: number;
  loop: boolean;
  start_offset: number;
}
export interface WallDoc { id: string; material_id: string; vertices: [number, number][] }
export interface EffectDoc { kind: string; params: Record<string, number> }
export interface MaterialDoc {
  id: string;
  r_filter: EffectDoc;
  t_filter: EffectDoc;
  param_map?: unknown;
}
export interface SceneDocument {
  format_version: number;
  c: number;
  d: number;
  max_segment_length: number;
  receptor: { x: number; y: number };
  emitters: EmitterDoc[];
  materials: MaterialDoc[];
  walls: WallDoc[];
  assets?: Record<string, string>;
}

export interface MaterialMix { material_id: string; r_mix: number; t_mix: number }
export interface EmitterMix {
  emitter_id: string;
  d_mix: number;
  r_mix: number;
  t_mix: number;
  r_total: number;
  t_total: number;
  materials: MaterialMix[];
}
export interface Snapshot { revision: number; per_emitter: EmitterMix[] }
export interface Transport { state: TransportState; position: number }

export interface AckMessage { type: "ack"; server_seq: number; client_seq: number }
export interface ErrorMessage {
  type: "error";
  server_seq: number;
  client_seq: number | null;
  reason: string;
}
export interface SnapshotMessage { type: "snapshot"; server_seq: number; snapshot: Snapshot }
export interface SceneStateMessage {
  type: "scene_state";
  server_seq: number;
  document: SceneDocument;
  revision: number;
  read_only: boolean;
  transport: Transport;
}
export interface StatsMessage {
  type: "stats";
  server_seq: number;
  blocks_rendered: number;
  clipped_samples: number;
  realtime_factor: number;
  audio_frames_dropped: number;
  connected_clients: number;
  transport: Transport;
}

export type ServerMessage =
  | AckMessage
  | ErrorMessage
  | SnapshotMessage
  | SceneStateMessage
  | StatsMessage;

const SERVER_TYPES = new Set(["ack", "error", "snapshot", "scene_state", "stats"]);

export function parseServerMessage(text: string): ServerMessage {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    throw new Error("server sent invalid JSON");
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new Error("server message is not an object");
  }
  const type = (raw as { type?: unknown }).type;
  if (typeof type !== "string" || !SERVER_TYPES.has(type)) {
    throw new Error(`unknown server message type ${JSON.stringify(type)}`);
  }
  return raw as ServerMessage;
}

export function serializeControl(msg: ControlMessage): string {
  return JSON.stringify(msg);
}

export interface AudioFrame { seq: number; samples: Float32Array }

// 8-byte header (two LE uint32s: sequence, sample count) + count float32s.
export function unpackAudioFrame(buf: ArrayBuffer): AudioFrame {
  if (buf.byteLength < 8) throw new Error("audio frame too short");
  const view = new DataView(buf);
  const seq = view.getUint32(0, true);
  const count = view.getUint32(4, true);
  if (buf.byteLength !== 8 + 4 * count) throw new Error("audio frame size mismatch");
  // copy: the source buffer may be reused by the socket
  const samples = new Float32Array(count);
  for (let i = 0; i < count; i++) samples[i] = view.getFloat32(8 + 4 * i, true);
  return { seq, samples };
}
