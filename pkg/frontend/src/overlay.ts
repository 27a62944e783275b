// Turns (scene document, mix snapshot, selected emitter) into a plain
// draw model: per-wall tint strengths and per-emitter receptor badges.
// Pure data in, data out; the canvas layer just renders it.

import type { SceneDocument, Snapshot } from "./protocol";

// fixed palette keyed by material index
export const MATERIAL_PALETTE = [
  "#e4572e",
  "#17bebb",
  "#ffc914",
  "#76b041",
  "#b14aed",
  "#2e86ab",
  "#f25f5c",
  "#50514f",
];

export interface WallOverlay {
  wallId: string;
  materialId: string;
  color: string;
  vertices: [number, number][];
  reflection: number; // selected emitter's mix share for this material
  transmission: number;
}

export interface ReceptorBadge { emitterId: string; dMix: number }

export interface OverlayModel {
  revision: number;
  selectedEmitterId: string | null;
  walls: WallOverlay[];
  badges: ReceptorBadge[];
}

export function materialColor(doc: SceneDocument, materialId: string): string {
  const idx = doc.materials.findIndex((m) => m.id === materialId);
  return MATERIAL_PALETTE[(idx < 0 ? 0 : idx) % MATERIAL_PALETTE.length];
}

export function buildOverlay(
  doc: SceneDocument,
  snapshot: Snapshot | null,
  selectedEmitterId: string | null,
): OverlayModel {
  const perEmitter = snapshot?.per_emitter ?? [];
  const selected =
    perEmitter.find((e) => e.emitter_id === selectedEmitterId) ?? perEmitter[0] ?? null;
  const mixByMaterial = new Map(
    (selected?.materials ?? []).map((m) => [m.material_id, m]),
  );
  return {
    revision: snapshot?.revision ?? -1,
    selectedEmitterId: selected?.emitter_id ?? null,
    walls: doc.walls.map((w) => {
      const mix = mixByMaterial.get(w.material_id);
      return {
        wallId: w.id,
        materialId: w.material_id,
        color: materialColor(doc, w.material_id),
        vertices: w.vertices,
        reflection: mix?.r_mix ?? 0,
        transmission: mix?.t_mix ?? 0,
      };
    }),
    badges: perEmitter.map((e) => ({ emitterId: e.emitter_id, dMix: e.d_mix })),
  };
}
