// Canvas painting. Everything here is presentational; the draw model comes
// from overlay.ts and the controller's view document.

import type { OverlayModel } from "./overlay";
import type { SceneDocument } from "./protocol";
import { worldToScreen, type Camera, type Point } from "./transform";
import type { PendingWall } from "./controller";

export interface DrawState {
  doc: SceneDocument;
  overlay: OverlayModel;
  camera: Camera;
  pendingWall: PendingWall | null;
  cursor: Point | null; // screen coords, for the rubber band
  selectedEmitterId: string | null;
}

function drawGrid(ctx: CanvasRenderingContext2D, w: number, h: number, cam: Camera) {
  ctx.strokeStyle = "rgba(128, 128, 128, 0.15)";
  ctx.lineWidth = 1;
  const step = cam.zoom; // one world unit
  const x0 = ((-cam.x * cam.zoom) % step + step) % step;
  const y0 = ((cam.y * cam.zoom) % step + step) % step;
  ctx.beginPath();
  for (let x = x0; x < w; x += step) {
    ctx.moveTo(x, 0);
    ctx.lineTo(x, h);
  }
  for (let y = y0; y < h; y += step) {
    ctx.moveTo(0, y);
    ctx.lineTo(w, y);
  }
  ctx.stroke();
}

export function draw(ctx: CanvasRenderingContext2D, state: DrawState): void {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#14151a";
  ctx.fillRect(0, 0, width, height);
  drawGrid(ctx, width, height, state.camera);

  for (const wall of state.overlay.walls) {
    if (wall.vertices.length < 2) continue;
    ctx.beginPath();
    const first = worldToScreen({ x: wall.vertices[0][0], y: wall.vertices[0][1] }, state.camera);
    ctx.moveTo(first.x, first.y);
    for (const v of wall.vertices.slice(1)) {
      const p = worldToScreen({ x: v[0], y: v[1] }, state.camera);
      ctx.lineTo(p.x, p.y);
    }
    // reflection share widens the stroke, transmission share fades it
    ctx.strokeStyle = wall.color;
    ctx.globalAlpha = 0.45 + 0.55 * Math.min(1, wall.reflection);
    ctx.lineWidth = 2.5 + 5 * Math.min(1, wall.reflection);
    ctx.lineCap = "round";
    ctx.stroke();
    if (wall.transmission > 0.001) {
      ctx.globalAlpha = Math.min(1, 0.2 + 0.8 * wall.transmission);
      ctx.setLineDash([4, 7]);
      ctx.lineWidth = 1.5;
      ctx.strokeStyle = "#ffffff";
      ctx.stroke();
      ctx.setLineDash([]);
    }
    ctx.globalAlpha = 1;
  }

  if (state.pendingWall !== null && state.pendingWall.vertices.length > 0) {
    ctx.beginPath();
    const first = worldToScreen(state.pendingWall.vertices[0], state.camera);
    ctx.moveTo(first.x, first.y);
    for (const v of state.pendingWall.vertices.slice(1)) {
      const p = worldToScreen(v, state.camera);
      ctx.lineTo(p.x, p.y);
    }
    if (state.cursor !== null) ctx.lineTo(state.cursor.x, state.cursor.y);
    ctx.setLineDash([6, 6]);
    ctx.strokeStyle = "#cccccc";
    ctx.lineWidth = 1.5;
    ctx.stroke();
    ctx.setLineDash([]);
  }

  for (const e of state.doc.emitters) {
    const p = worldToScreen({ x: e.x, y: e.y }, state.camera);
    ctx.beginPath();
    ctx.arc(p.x, p.y, 9, 0, Math.PI * 2);
    ctx.fillStyle = e.id === state.selectedEmitterId ? "#ffd166" : "#f5f5f5";
    ctx.fill();
    ctx.strokeStyle = "#14151a";
    ctx.lineWidth = 2;
    ctx.stroke();
    ctx.fillStyle = "#dddddd";
    ctx.font = "12px system-ui, sans-serif";
    ctx.fillText(e.id, p.x + 12, p.y - 8);
  }

  const r = worldToScreen(state.doc.receptor, state.camera);
  ctx.fillStyle = "#5dd39e";
  ctx.fillRect(r.x - 8, r.y - 8, 16, 16);
  ctx.strokeStyle = "#14151a";
  ctx.strokeRect(r.x - 8, r.y - 8, 16, 16);
  ctx.fillStyle = "#bbbbbb";
  ctx.font = "11px system-ui, sans-serif";
  state.overlay.badges.forEach((badge, i) => {
    ctx.fillText(`${badge.emitterId} dry ${badge.dMix.toFixed(3)}`, r.x + 14, r.y + 4 + i * 13);
  });
}

// nearest draggable node within reach, emitters before the receptor
export function hitTest(
  doc: SceneDocument,
  screen: Point,
  cam: Camera,
  radiusPx = 14,
): { kind: "emitter" | "receptor"; id: string | null } | null {
  let best: { kind: "emitter" | "receptor"; id: string | null } | null = null;
  let bestDist = radiusPx;
  for (const e of doc.emitters) {
    const p = worldToScreen({ x: e.x, y: e.y }, cam);
    const d = Math.hypot(p.x - screen.x, p.y - screen.y);
    if (d <= bestDist) {
      best = { kind: "emitter", id: e.id };
      bestDist = d;
    }
  }
  const rp = worldToScreen(doc.receptor, cam);
  if (Math.hypot(rp.x - screen.x, rp.y - screen.y) <= bestDist) {
    best = { kind: "receptor", id: null };
  }
  return best;
}
