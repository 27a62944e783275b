import { describe, expect, it } from "vitest";

import { SceneMirror } from "../src/mirror";
import type { MutationOp } from "../src/protocol";
import { sceneDoc } from "./helpers";

describe("scene mirror", () => {
  it("shows optimistic mutations before the ack", () => {
    const mirror = new SceneMirror();
    mirror.setSceneState(sceneDoc(), 0);
    mirror.optimistic(1, [{ op: "move_emitter", id: "e1", x: 4, y: 5 }]);
    const view = mirror.view()!;
    expect(view.emitters[0]).toMatchObject({ x: 4, y: 5 });
    expect(mirror.pendingCount()).toBe(1);
  });

  it("converges to the acked state with no pending ops left", () => {
    const mirror = new SceneMirror();
    mirror.setSceneState(sceneDoc(), 0);
    const ops: MutationOp[][] = [
      [{ op: "move_emitter", id: "e1", x: 2, y: 2 }],
      [{ op: "add_wall", material_id: "m1", vertices: [[0, 0], [1, 0]], id: "w9" }],
      [{ op: "set_constants", c: 1.25 }],
    ];
    ops.forEach((o, i) => mirror.optimistic(i + 1, o));
    const optimistic = mirror.view()!;
    for (let seq = 1; seq <= 3; seq++) mirror.ack(seq);
    expect(mirror.pendingCount()).toBe(0);
    expect(mirror.view()).toEqual(optimistic); // acks fold, the view holds still
    expect(mirror.view()!.walls.map((w) => w.id)).toContain("w9");
    expect(mirror.view()!.c).toBe(1.25);
  });

  it("rolls an error back without touching later pending ops", () => {
    const mirror = new SceneMirror();
    mirror.setSceneState(sceneDoc(), 0);
    mirror.optimistic(1, [{ op: "move_emitter", id: "e1", x: 9, y: 9 }]);
    mirror.optimistic(2, [{ op: "set_constants", d: 0.5 }]);
    mirror.reject(1);
    const view = mirror.view()!;
    expect(view.emitters[0]).toMatchObject({ x: 1, y: 2 }); // back to base
    expect(view.d).toBe(0.5); // seq 2 still pending
  });

  it("authoritative scene_state clears pending optimism", () => {
    const mirror = new SceneMirror();
    mirror.setSceneState(sceneDoc(), 0);
    mirror.optimistic(1, [{ op: "move_receptor", x: 7, y: 7 }]);
    const fresh = sceneDoc({ c: 2.0 });
    mirror.setSceneState(fresh, 5);
    expect(mirror.pendingCount()).toBe(0);
    expect(mirror.view()!.receptor).toEqual({ x: 1, y: 1 });
    expect(mirror.revision).toBe(5);
  });

  it("applies every mutation kind", () => {
    const mirror = new SceneMirror();
    mirror.setSceneState(sceneDoc(), 0);
    const ops: MutationOp[] = [
      { op: "add_emitter", x: 0, y: 0, id: "e2", track: "t" },
      { op: "set_emitter", id: "e2", gain: 0.25, loop: false },
      { op: "add_wall", material_id: "m1", vertices: [[0, 0], [2, 0]], id: "wA" },
      { op: "move_wall", id: "wA", dx: 1, dy: -1 },
      { op: "set_wall_material", id: "wA", material_id: "m1" },
      { op: "move_receptor", x: 3, y: 3 },
      { op: "remove_emitter", id: "e1" },
      { op: "set_constants", c: 0.9, d: 0.8, max_segment_length: 0.5 },
    ];
    mirror.optimistic(1, ops);
    const view = mirror.view()!;
    expect(view.emitters.map((e) => e.id)).toEqual(["e2"]);
    expect(view.emitters[0]).toMatchObject({ gain: 0.25, loop: false });
    expect(view.walls[0].vertices).toEqual([[1, -1], [3, -1]]);
    expect(view.receptor).toEqual({ x: 3, y: 3 });
    expect(view).toMatchObject({ c: 0.9, d: 0.8, max_segment_length: 0.5 });

    mirror.optimistic(2, [{ op: "remove_wall", id: "wA" }]);
    expect(mirror.view()!.walls).toEqual([]);
  });

  it("view is null before the first scene_state", () => {
    const mirror = new SceneMirror();
    expect(mirror.view()).toBeNull();
    expect(mirror.connected).toBe(false);
  });
});
