"""Shared fixtures and the randomized scene generator.

Generated coordinates are rounded to 6 decimals so they are exactly
representable within the 9-significant-digit document format; this keeps
round-trip and oracle comparisons free of serialization noise.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from sonoscene.effects import PARAM_RANGES, EffectSpec, ParamMap
from sonoscene.geometry import Vec2
from sonoscene.scene import Emitter, Material, Receptor, Scene, Wall

GAIN_IDENTITY = EffectSpec("Gain", {"g": 1.0})


def rnd6(x: float) -> float:
    return round(float(x), 6)


def random_effect_spec(rng: np.random.Generator) -> EffectSpec:
    kind = str(rng.choice(list(PARAM_RANGES)))
    params = {}
    for name, (lo, hi, _default) in PARAM_RANGES[kind].items():
        if rng.random() < 0.5:
            params[name] = rnd6(rng.uniform(lo, hi))
    return EffectSpec(kind, params)


def random_param_map(rng: np.random.Generator, r_spec: EffectSpec, t_spec: EffectSpec) -> ParamMap:
    kind = r_spec.kind if rng.random() < 0.5 else t_spec.kind
    target = str(rng.choice(list(PARAM_RANGES[kind])))
    lo_lim, hi_lim, _ = PARAM_RANGES[kind][target]
    a, b = sorted((rnd6(rng.uniform(lo_lim, hi_lim)), rnd6(rng.uniform(lo_lim, hi_lim))))
    source = "material_mix" if rng.random() < 0.5 else "global_mix"
    return ParamMap(target=target, source=source, lo=a, hi=b)


def random_scene(
    rng: np.random.Generator,
    max_emitters: int = 8,
    max_walls: int = 6,
    max_materials: int = 4,
    max_barriers: int = 200,
    with_param_maps: bool = False,
    with_assets: bool = False,
) -> Scene:
    n_mat = int(rng.integers(1, max_materials + 1))
    materials = []
    for i in range(n_mat):
        r_spec = random_effect_spec(rng)
        t_spec = random_effect_spec(rng)
        pmap = None
        if with_param_maps and rng.random() < 0.5:
            pmap = random_param_map(rng, r_spec, t_spec)
        materials.append(Material(f"m{i + 1}", r_spec, t_spec, pmap))

    def coord() -> float:
        return rnd6(rng.uniform(-5.0, 5.0))

    msl = 0.25
    walls = []
    barrier_budget = max_barriers
    for i in range(int(rng.integers(0, max_walls + 1))):
        n_vert = int(rng.integers(2, 4))
        verts = [(coord(), coord())]
        while len(verts) < n_vert:
            heading = rng.uniform(0, 2 * math.pi)
            step = rng.uniform(0.2, 2.0)
            x = rnd6(verts[-1][0] + step * math.cos(heading))
            y = rnd6(verts[-1][1] + step * math.sin(heading))
            if (x, y) == verts[-1]:
                continue
            verts.append((x, y))
        cost = sum(
            math.ceil(math.hypot(b[0] - a[0], b[1] - a[1]) / msl)
            for a, b in zip(verts, verts[1:])
        )
        if cost > barrier_budget:
            break
        barrier_budget -= cost
        mat = materials[int(rng.integers(0, n_mat))]
        walls.append(Wall(f"w{i + 1}", mat.id, tuple(Vec2(x, y) for x, y in verts)))

    emitters = []
    assets = {}
    for i in range(int(rng.integers(1, max_emitters + 1))):
        track = ""
        if with_assets and rng.random() < 0.5:
            track = f"t{i + 1}"
            assets[track] = f"audio/{track}.wav"
        emitters.append(
            Emitter(
                id=f"e{i + 1}",
                pos=Vec2(coord(), coord()),
                track=track,
                gain=rnd6(rng.uniform(0.0, 2.0)),
                loop=bool(rng.random() < 0.7),
                start_offset=rnd6(rng.uniform(0.0, 1.0)),
            )
        )

    return Scene(
        receptor=Receptor(Vec2(coord(), coord())),
        emitters=tuple(emitters),
        walls=tuple(walls),
        materials=tuple(materials),
        c=rnd6(rng.uniform(0.05, 3.0)),
        d=rnd6(rng.uniform(0.0, 1.0)),
        max_segment_length=msl,
        assets=assets,
    )


def single_barrier_scene(c: float = 0.5, d: float = 1.0, track: str = "") -> Scene:
    """Barrier (0,0)-(2,0), emitter (1,2), receptor (1,1): the hand-checked case."""
    mat = Material("m1", GAIN_IDENTITY, GAIN_IDENTITY)
    assets = {track: f"{track}.wav"} if track else {}
    return Scene(
        receptor=Receptor(Vec2(1.0, 1.0)),
        emitters=(Emitter("e1", Vec2(1.0, 2.0), track=track),),
        walls=(Wall("w1", "m1", (Vec2(0.0, 0.0), Vec2(2.0, 0.0))),),
        materials=(mat,),
        c=c,
        d=d,
        max_segment_length=2.0,
        assets=assets,
    )


def long_wall_scene(n_barriers: int, n_emitters: int = 4) -> Scene:
    """One straight wall that tessellates into exactly n_barriers pieces."""
    msl = 0.25
    mat = Material("m1", GAIN_IDENTITY, GAIN_IDENTITY)
    wall = Wall("w1", "m1", (Vec2(0.0, 0.0), Vec2(n_barriers * msl, 0.0)))
    emitters = tuple(
        Emitter(f"e{i + 1}", Vec2(1.0 + i, 2.0)) for i in range(n_emitters)
    )
    return Scene(
        receptor=Receptor(Vec2(0.5, 1.0)),
        emitters=emitters,
        walls=(wall,),
        materials=(mat,),
        max_segment_length=msl,
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
