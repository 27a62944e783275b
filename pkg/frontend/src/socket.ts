// Minimal socket surface the controller needs; real WebSocket satisfies it
// (with binaryType = "arraybuffer"), tests plug in an in-memory pair.

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((ev: { data: string | ArrayBuffer }) => void) | null;
  onclose: (() => void) | null;
}

export function connectWebSocket(url: string): SocketLike {
  const ws = new WebSocket(url);
  ws.binaryType = "arraybuffer";
  return ws as unknown as SocketLike;
}
