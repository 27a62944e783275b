// Browser entry point: wires the controller to the DOM, the canvas, and
// Web Audio. Everything interesting happens in controller.ts.

import { draw, hitTest } from "./canvas";
import { SessionController } from "./controller";
import { AudioPump } from "./player";
import { connectWebSocket } from "./socket";
import { panBy, zoomAt, type Point, type Tool } from "./transform";

const SAMPLE_RATE = 44100;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing #${id}`);
  return node as T;
}

const canvas = el<HTMLCanvasElement>("stage");
const ctx = canvas.getContext("2d")!;
const banner = el<HTMLDivElement>("banner");
const statsLine = el<HTMLDivElement>("stats");
const noticeLine = el<HTMLDivElement>("notice");
const materialSelect = el<HTMLSelectElement>("material");
const emitterSelect = el<HTMLSelectElement>("emitter");

const proto = location.protocol === "https:" ? "wss" : "ws";
const controller = new SessionController(connectWebSocket(`${proto}://${location.host}/ws`), {
  onConnection: (state) => {
    banner.textContent = state === "closed" ? "disconnected: reload to reconnect" : "";
    banner.style.display = state === "closed" ? "block" : "none";
    if (state === "closed") void audioCtx?.suspend();
  },
  onNotice: (text) => {
    noticeLine.textContent = text;
    noticeLine.style.opacity = "1";
    setTimeout(() => (noticeLine.style.opacity = "0"), 2500);
  },
  onSceneChanged: refreshSelectors,
  onOverlay: refreshSelectors,
});

// ---- audio ----

let audioCtx: AudioContext | null = null;
const pump = new AudioPump(controller.jitter);

function startAudio() {
  if (audioCtx !== null) {
    void audioCtx.resume();
    return;
  }
  audioCtx = new AudioContext({ sampleRate: SAMPLE_RATE });
  const node = audioCtx.createScriptProcessor(1024, 0, 1);
  node.onaudioprocess = (ev) => pump.fill(ev.outputBuffer.getChannelData(0));
  node.connect(audioCtx.destination);
}
document.addEventListener("pointerdown", startAudio, { once: true });

// ---- toolbar ----

for (const tool of ["select", "move", "draw_wall", "place_emitter"] as Tool[]) {
  el<HTMLButtonElement>(`tool-${tool}`).onclick = () => {
    controller.setTool(tool);
    document.querySelectorAll(".tool").forEach((b) => b.classList.remove("active"));
    el(`tool-${tool}`).classList.add("active");
  };
}
el<HTMLButtonElement>("play").onclick = () => controller.setTransport("playing");
el<HTMLButtonElement>("stop").onclick = () => controller.setTransport("stopped");
el<HTMLButtonElement>("commit-wall").onclick = () => controller.commitWall();
materialSelect.onchange = () => controller.setActiveMaterial(materialSelect.value);
emitterSelect.onchange = () => controller.selectEmitter(emitterSelect.value);

function refreshSelectors(): void {
  const doc = controller.viewDocument();
  if (doc === null) return;
  const mats = doc.materials.map((m) => m.id);
  if (materialSelect.options.length !== mats.length) {
    materialSelect.innerHTML = mats.map((id) => `<option value="${id}">${id}</option>`).join("");
  }
  if (controller.activeMaterialId !== null) materialSelect.value = controller.activeMaterialId;
  const ems = doc.emitters.map((e) => e.id);
  if (emitterSelect.options.length !== ems.length) {
    emitterSelect.innerHTML = ems.map((id) => `<option value="${id}">${id}</option>`).join("");
  }
  if (controller.selectedEmitterId !== null) emitterSelect.value = controller.selectedEmitterId;
}

// ---- canvas interaction ----

let cursor: Point | null = null;
let panning: Point | null = null;

function screenPos(ev: MouseEvent): Point {
  const rect = canvas.getBoundingClientRect();
  return { x: ev.clientX - rect.left, y: ev.clientY - rect.top };
}

canvas.addEventListener("pointerdown", (ev) => {
  const pos = screenPos(ev);
  if (ev.button === 1 || ev.shiftKey) {
    panning = pos;
    return;
  }
  const doc = controller.viewDocument();
  if (doc === null) return;
  if (controller.tool === "draw_wall") {
    controller.wallClick(pos);
    return;
  }
  if (controller.tool === "place_emitter") {
    controller.placeEmitter(pos);
    return;
  }
  const hit = hitTest(doc, pos, controller.camera);
  if (hit !== null) {
    canvas.setPointerCapture(ev.pointerId);
    controller.beginDrag(hit.kind, hit.id, pos);
  }
});

canvas.addEventListener("pointermove", (ev) => {
  cursor = screenPos(ev);
  if (panning !== null) {
    controller.camera = panBy(controller.camera, cursor.x - panning.x, cursor.y - panning.y);
    panning = cursor;
    return;
  }
  controller.dragTo(cursor);
});

canvas.addEventListener("pointerup", () => {
  panning = null;
  controller.endDrag();
});

canvas.addEventListener("dblclick", () => controller.commitWall());
document.addEventListener("keydown", (ev) => {
  if (ev.key === "Enter") controller.commitWall();
  if (ev.key === "Escape") controller.setTool("select");
});

canvas.addEventListener("wheel", (ev) => {
  ev.preventDefault();
  controller.camera = zoomAt(controller.camera, screenPos(ev), ev.deltaY < 0 ? 1.15 : 1 / 1.15);
});

// ---- render loop ----

function frame(): void {
  const rect = canvas.getBoundingClientRect();
  if (canvas.width !== rect.width || canvas.height !== rect.height) {
    canvas.width = rect.width;
    canvas.height = rect.height;
  }
  const doc = controller.viewDocument();
  const overlay = controller.currentOverlay();
  if (doc !== null && overlay !== null) {
    draw(ctx, {
      doc,
      overlay,
      camera: controller.camera,
      pendingWall: controller.pendingWall,
      cursor,
      selectedEmitterId: controller.selectedEmitterId,
    });
  }
  const s = controller.lastStats;
  const j = controller.jitter.stats();
  statsLine.textContent =
    `${controller.readOnly ? "viewer" : "editor"} | ` +
    `transport ${controller.transport.state} | ` +
    `buffer ${(controller.jitter.latencySeconds(SAMPLE_RATE) * 1000).toFixed(0)} ms | ` +
    `glitches ${j.glitches}` +
    (s !== null
      ? ` | server ${s.realtime_factor.toFixed(2)}x, clipped ${s.clipped_samples}, ` +
        `drops ${s.audio_frames_dropped}, clients ${s.connected_clients}`
      : "");
  requestAnimationFrame(frame);
}
requestAnimationFrame(frame);
