"""Mix parameterization: barrier intensities folded into per-emitter mixes.

For each emitter, every barrier contributes a total intensity
ti = ei * ri where

    ei = (1 / dist(b, emitter))  * |sin(angle(b, emitter))|
    ri = (1 / dist(b, receptor)) * |sin(angle(b, receptor))|

Same-side barriers feed reflection sums, opposite-side barriers feed
transmission sums (colinear contributes to neither). Sums turn into
per-material mixes (share of the path total), global wet mixes

    rMix = (rTotal / (rTotal + tTotal)) * (rTotal / (rTotal + c))

(tMix with the roles swapped), and a dry mix

    dMix = (1 / dist(emitter, receptor)) * (1 - (rMix + tMix) * d)

clamped at 0. All 0/0 ratios are defined as 0. One pass over the barriers
per emitter, so the whole snapshot is linear in barrier count.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .geometry import EPS_DIST, EPS_SIDE, Side, angle, dist, node_dist, side
from .scene import Barrier, Emitter, Receptor, Scene

__all__ = [
    "Path", "BarrierIntensity", "MaterialMix", "EmitterMix", "ParamSnapshot",
    "barrier_intensity", "accumulate", "material_mixes", "global_mixes",
    "dry_mix", "parameterize",
]


class Path(enum.Enum):
    REFLECTION = "reflection"
    TRANSMISSION = "transmission"
    NONE = "none"


@dataclass(frozen=True)
class BarrierIntensity:
    ei: float
    ri: float
    ti: float
    path: Path


@dataclass(frozen=True)
class MaterialMix:
    material_id: str
    r_mix: float
    t_mix: float


@dataclass(frozen=True)
class EmitterMix:
    emitter_id: str
    d_mix: float
    r_mix: float
    t_mix: float
    material_mixes: tuple[MaterialMix, ...]
    r_total: float
    t_total: float


@dataclass(frozen=True)
class ParamSnapshot:
    revision: int
    per_emitter: tuple[EmitterMix, ...]

    def for_emitter(self, emitter_id: str) -> EmitterMix:
        for em in self.per_emitter:
            if em.emitter_id == emitter_id:
                return em
        raise KeyError(emitter_id)


# ---------------------------------------------------------------------------
# Scalar reference path
# ---------------------------------------------------------------------------


def barrier_intensity(
    b: Barrier, se: Emitter, r: Receptor, weight: float = 1.0
) -> BarrierIntensity:
    """Intensities and path classification for one (barrier, emitter) pair."""
    ei = weight * (1.0 / dist(b, se.pos)) * abs(math.sin(angle(b, se.pos)))
    ri = weight * (1.0 / dist(b, r.pos)) * abs(math.sin(angle(b, r.pos)))
    s_e = side(b, se.pos)
    s_r = side(b, r.pos)
    if s_e is Side.COLINEAR or s_r is Side.COLINEAR:
        path = Path.NONE
    elif s_e is s_r:
        path = Path.REFLECTION
    else:
        path = Path.TRANSMISSION
    return BarrierIntensity(ei=ei, ri=ri, ti=ei * ri, path=path)


# ---------------------------------------------------------------------------
# Vectorized pass
# ---------------------------------------------------------------------------


def _node_pass(scene: Scene, nx: float, ny: float, length_weighted: bool):
    """Per-barrier intensity and side arrays for one node position."""
    f = scene.barrier_field
    vx = nx - f.mx
    vy = ny - f.my
    norm = np.hypot(vx, vy)
    cross_mid = f.ex * vy - f.ey * vx
    # |sin| of the angle between barrier direction and midpoint->node;
    # a node on the midpoint counts as perpendicular
    sin_a = np.ones_like(norm)
    np.divide(np.abs(cross_mid), f.length * norm, out=sin_a, where=norm > 0)
    intensity = sin_a / np.maximum(norm, EPS_DIST)
    if length_weighted and scene.max_segment_length > 0:
        intensity = intensity * (f.length / scene.max_segment_length)
    cross_p0 = f.ex * (ny - f.p0y) - f.ey * (nx - f.p0x)
    sides = np.sign(cross_p0)
    sides[np.abs(cross_p0) <= EPS_SIDE * f.length] = 0.0
    return intensity, sides


def accumulate(
    scene: Scene, se: Emitter, length_weighted: bool = False
) -> tuple[np.ndarray, np.ndarray, float, float]:
    """Per-material reflection/transmission sums and their totals for one emitter."""
    n_mat = len(scene.materials)
    if scene.barrier_field.count == 0:
        zeros = np.zeros(n_mat)
        return zeros, zeros.copy(), 0.0, 0.0
    ri, side_r = _node_pass(scene, scene.receptor.pos.x, scene.receptor.pos.y, length_weighted)
    return _accumulate_against(scene, se, ri, side_r, length_weighted)


def _accumulate_against(
    scene: Scene,
    se: Emitter,
    ri: np.ndarray,
    side_r: np.ndarray,
    length_weighted: bool,
) -> tuple[np.ndarray, np.ndarray, float, float]:
    f = scene.barrier_field
    n_mat = len(scene.materials)
    ei, side_e = _node_pass(scene, se.pos.x, se.pos.y, length_weighted)
    ti = ei * ri
    rel = side_e * side_r
    r_mask = rel > 0
    t_mask = rel < 0
    r_sums = np.bincount(f.mat[r_mask], weights=ti[r_mask], minlength=n_mat)
    t_sums = np.bincount(f.mat[t_mask], weights=ti[t_mask], minlength=n_mat)
    return r_sums, t_sums, float(r_sums.sum()), float(t_sums.sum())


def material_mixes(
    scene: Scene,
    r_sums: np.ndarray,
    t_sums: np.ndarray,
    r_total: float,
    t_total: float,
) -> tuple[MaterialMix, ...]:
    return tuple(
        MaterialMix(
            material_id=m.id,
            r_mix=float(r_sums[i] / r_total) if r_total > 0 else 0.0,
            t_mix=float(t_sums[i] / t_total) if t_total > 0 else 0.0,
        )
        for i, m in enumerate(scene.materials)
    )


def global_mixes(r_total: float, t_total: float, c: float) -> tuple[float, float]:
    wet = r_total + t_total
    if wet == 0.0:
        return 0.0, 0.0
    r_mix = (r_total / wet) * (r_total / (r_total + c))
    t_mix = (t_total / wet) * (t_total / (t_total + c))
    return r_mix, t_mix


def dry_mix(se: Emitter, r: Receptor, r_mix: float, t_mix: float, d: float) -> float:
    value = (1.0 / node_dist(se.pos, r.pos)) * (1.0 - (r_mix + t_mix) * d)
    return max(value, 0.0)


def parameterize(scene: Scene, length_weighted: bool = False) -> ParamSnapshot:
    """Full per-emitter mix snapshot for one scene revision."""
    f = scene.barrier_field
    if f.count > 0:
        ri, side_r = _node_pass(scene, scene.receptor.pos.x, scene.receptor.pos.y, length_weighted)
    per_emitter = []
    n_mat = len(scene.materials)
    for se in scene.emitters:
        if f.count > 0:
            r_sums, t_sums, r_total, t_total = _accumulate_against(
                scene, se, ri, side_r, length_weighted
            )
        else:
            r_sums = np.zeros(n_mat)
            t_sums = np.zeros(n_mat)
            r_total = t_total = 0.0
        r_mix, t_mix = global_mixes(r_total, t_total, scene.c)
        per_emitter.append(
            EmitterMix(
                emitter_id=se.id,
                d_mix=dry_mix(se, scene.receptor, r_mix, t_mix, scene.d),
                r_mix=r_mix,
                t_mix=t_mix,
                material_mixes=material_mixes(scene, r_sums, t_sums, r_total, t_total),
                r_total=r_total,
                t_total=t_total,
            )
        )
    return ParamSnapshot(revision=scene.revision, per_emitter=tuple(per_emitter))
