import { describe, expect, it } from "vitest";

import { SessionController } from "../src/controller";
import type { MutateMessage } from "../src/protocol";
import { worldToScreen, type Point } from "../src/transform";
import { FakeServer, FakeSocket, sceneDoc } from "./helpers";

let clock = 0;
const now = () => clock;

function setup(opts: { readOnly?: boolean } = {}) {
  clock = 0;
  const [client, serverSide] = FakeSocket.pair();
  const server = new FakeServer(serverSide, sceneDoc(), opts.readOnly ?? false);
  const notices: string[] = [];
  const controller = new SessionController(
    client,
    { onNotice: (t) => notices.push(t) },
    { now },
  );
  client.open();
  return { controller, server, notices };
}

function mutates(server: FakeServer): MutateMessage[] {
  return server.received.filter((m): m is MutateMessage => m.type === "mutate");
}

function screenOf(controller: SessionController, world: Point): Point {
  return worldToScreen(world, controller.camera);
}

describe("handshake", () => {
  it("says hello and adopts the server scene", () => {
    const { controller, server } = setup();
    expect(server.received[0]).toMatchObject({ type: "hello", client_seq: 1 });
    expect(controller.mirror.view()!.emitters[0].id).toBe("e1");
    expect(controller.selectedEmitterId).toBe("e1");
    expect(controller.activeMaterialId).toBe("m1");
    expect(controller.readOnly).toBe(false);
    expect(controller.snapshot!.revision).toBe(0);
  });
});

describe("dragging", () => {
  it("throttles moves to 30/s and always commits the release position", () => {
    const { controller, server } = setup();
    controller.setTool("move");
    controller.beginDrag("emitter", "e1", screenOf(controller, { x: 1, y: 2 }));
    for (let i = 1; i <= 10; i++) {
      clock = i * 10;
      controller.dragTo(screenOf(controller, { x: 1 + i * 0.1, y: 2 }));
    }
    clock = 100;
    controller.endDrag();
    const sent = mutates(server);
    // 100 ms of dragging: at most ceil(100 / 33.3) sends plus the release
    expect(sent.length).toBeLessThanOrEqual(4);
    expect(sent.length).toBeGreaterThanOrEqual(2);
    const last = sent[sent.length - 1].ops[0];
    expect(last).toMatchObject({ op: "move_emitter", id: "e1" });
    expect((last as { x: number }).x).toBeCloseTo(2.0, 6);
    // server applied them all; the mirror converged
    expect(controller.mirror.pendingCount()).toBe(0);
    expect(controller.mirror.view()!.emitters[0].x).toBeCloseTo(2.0, 6);
  });

  it("renders the drag optimistically between throttled sends", () => {
    const { controller } = setup();
    controller.setTool("move");
    controller.beginDrag("emitter", "e1", screenOf(controller, { x: 1, y: 2 }));
    clock = 5;
    controller.dragTo(screenOf(controller, { x: 3, y: 4 }));
    clock = 6; // throttle window still open, nothing sent since
    controller.dragTo(screenOf(controller, { x: 5, y: 6 }));
    const e = controller.viewDocument()!.emitters[0];
    expect(e.x).toBeCloseTo(5, 6);
    expect(e.y).toBeCloseTo(6, 6);
  });

  it("read-only drags move a local ghost, then snap back with a notice", () => {
    const { controller, server, notices } = setup({ readOnly: true });
    expect(controller.readOnly).toBe(true);
    controller.setTool("move");
    controller.beginDrag("emitter", "e1", screenOf(controller, { x: 1, y: 2 }));
    clock = 50;
    controller.dragTo(screenOf(controller, { x: 8, y: 8 }));
    expect(controller.viewDocument()!.emitters[0].x).toBeCloseTo(8, 6);
    controller.endDrag();
    expect(mutates(server)).toEqual([]);
    expect(controller.viewDocument()!.emitters[0]).toMatchObject({ x: 1, y: 2 });
    expect(notices.some((n) => n.includes("read-only"))).toBe(true);
  });

  it("a server rejection rolls the move back and surfaces the reason", () => {
    const { controller, notices } = setup();
    controller.setTool("move");
    controller.beginDrag("emitter", "ghost", screenOf(controller, { x: 0, y: 0 }));
    clock = 40;
    controller.dragTo(screenOf(controller, { x: 9, y: 9 }));
    controller.endDrag();
    expect(notices).toContain("unknown id");
    expect(controller.mirror.pendingCount()).toBe(0);
    expect(controller.viewDocument()!.emitters[0]).toMatchObject({ x: 1, y: 2 });
  });
});

describe("wall drawing", () => {
  it("accumulates clicks and commits a polyline with the starting material", () => {
    const { controller, server } = setup();
    controller.setTool("draw_wall");
    controller.wallClick(screenOf(controller, { x: 0, y: 0 }));
    controller.setActiveMaterial("m2"); // mid-draw switch must not recolor
    controller.wallClick(screenOf(controller, { x: 1, y: 0 }));
    controller.wallClick(screenOf(controller, { x: 1, y: 1 }));
    expect(controller.pendingWall!.vertices.length).toBe(3);
    controller.commitWall();
    const sent = mutates(server);
    expect(sent.length).toBe(1);
    const op = sent[0].ops[0];
    expect(op).toMatchObject({ op: "add_wall", material_id: "m1" });
    expect((op as { vertices: [number, number][] }).vertices.length).toBe(3);
    expect(controller.pendingWall).toBeNull();
    expect(controller.viewDocument()!.walls.length).toBe(1);
  });

  it("fewer than two vertices commits nothing", () => {
    const { controller, server } = setup();
    controller.setTool("draw_wall");
    controller.wallClick({ x: 10, y: 10 });
    controller.commitWall();
    expect(mutates(server)).toEqual([]);
    expect(controller.viewDocument()!.walls).toEqual([]);
  });

  it("switching tools clears pending vertices", () => {
    const { controller } = setup();
    controller.setTool("draw_wall");
    controller.wallClick({ x: 10, y: 10 });
    controller.wallClick({ x: 20, y: 10 });
    controller.setTool("select");
    expect(controller.pendingWall).toBeNull();
  });
});

describe("snapshots and audio", () => {
  it("ignores snapshots older than the one on screen", () => {
    const { controller, server } = setup();
    server.revision = 5;
    server.sendSnapshot();
    expect(controller.snapshot!.revision).toBe(5);
    server.revision = 2;
    server.sendSnapshot();
    expect(controller.snapshot!.revision).toBe(5);
  });

  it("feeds binary frames into the jitter buffer", () => {
    const { controller, server } = setup();
    for (let i = 0; i < 4; i++) server.sendAudio(0.25);
    expect(controller.jitter.pull()[0]).toBeCloseTo(0.25, 6);
    expect(controller.jitter.stats().glitches).toBe(0);
  });

  it("placing an emitter sends add_emitter at the clicked world point", () => {
    const { controller, server } = setup();
    controller.setTool("place_emitter");
    controller.placeEmitter(screenOf(controller, { x: 4, y: -1 }));
    const op = mutates(server)[0].ops[0] as { op: string; x: number; y: number };
    expect(op.op).toBe("add_emitter");
    expect(op.x).toBeCloseTo(4, 6);
    expect(op.y).toBeCloseTo(-1, 6);
    expect(controller.viewDocument()!.emitters.length).toBe(2);
  });

  it("reports a closed connection and clears the audio queue", () => {
    const states: string[] = [];
    const [client, serverSide] = FakeSocket.pair();
    new FakeServer(serverSide, sceneDoc());
    const controller = new SessionController(client, { onConnection: (s) => states.push(s) });
    client.open();
    client.close();
    expect(states).toEqual(["open", "closed"]);
    expect(controller.connection).toBe("closed");
  });
});
