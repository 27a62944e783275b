"""Scene model: emitters, a receptor, walls of materials, and mutations.

A Scene is an immutable revision. Mutations produce a new revision with the
revision counter bumped; rejected mutations raise SceneError and leave the
input untouched. Walls are open polylines tessellated into short barriers;
tessellation results are carried across revisions for unchanged walls.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from types import MappingProxyType
from typing import Any, Mapping, Union

import numpy as np

from .effects import EffectSpec, ParamMap, EffectError, validate_spec, validate_param_map
from .geometry import Vec2

log = logging.getLogger(__name__)

DEFAULT_C = 0.5
DEFAULT_D = 1.0
DEFAULT_MAX_SEGMENT_LENGTH = 0.25
DEFAULT_ROOM_SIZE = 10.0

FORMAT_VERSION = 1


class SceneError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Emitter:
    """A positioned mono source. ``track`` keys into Scene.assets ("" = silent)."""

    id: str
    pos: Vec2
    track: str = ""
    gain: float = 1.0
    loop: bool = True
    start_offset: float = 0.0


@dataclass(frozen=True)
class Receptor:
    pos: Vec2


@dataclass(frozen=True)
class Material:
    """Reflection and transmission filters, optionally mix-driven parameters."""

    id: str
    r_filter: EffectSpec
    t_filter: EffectSpec
    param_map: ParamMap | None = None


@dataclass(frozen=True)
class Wall:
    """Open polyline with one material; consecutive vertices must differ."""

    id: str
    material_id: str
    vertices: tuple[Vec2, ...]


@dataclass(frozen=True)
class Barrier:
    """One short segment of a tessellated wall."""

    p0: Vec2
    p1: Vec2
    material_id: str
    wall_id: str

    @property
    def midpoint(self) -> Vec2:
        return Vec2((self.p0.x + self.p1.x) / 2.0, (self.p0.y + self.p1.y) / 2.0)

    @property
    def length(self) -> float:
        return math.hypot(self.p1.x - self.p0.x, self.p1.y - self.p0.y)


def tessellate(wall: Wall, max_len: float) -> tuple[Barrier, ...]:
    """Split each polyline edge into ceil(len/max_len) equal pieces, in order.

    Zero-length edges are skipped with a warning.
    """
    if max_len <= 0:
        raise SceneError("max_segment_length must be > 0")
    out: list[Barrier] = []
    for a, b in zip(wall.vertices, wall.vertices[1:]):
        edge_len = math.hypot(b.x - a.x, b.y - a.y)
        if edge_len == 0.0:
            log.warning("wall %r: zero-length edge at (%g, %g) skipped", wall.id, a.x, a.y)
            continue
        n = math.ceil(edge_len / max_len)
        for i in range(n):
            p0 = Vec2(a.x + (b.x - a.x) * (i / n), a.y + (b.y - a.y) * (i / n))
            t1 = (i + 1) / n
            p1 = Vec2(a.x + (b.x - a.x) * t1, a.y + (b.y - a.y) * t1) if i + 1 < n else b
            out.append(Barrier(p0, p1, wall.material_id, wall.id))
    return tuple(out)


# ---------------------------------------------------------------------------
# Scene
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Scene:
    receptor: Receptor
    emitters: tuple[Emitter, ...] = ()
    walls: tuple[Wall, ...] = ()
    materials: tuple[Material, ...] = ()
    c: float = DEFAULT_C
    d: float = DEFAULT_D
    max_segment_length: float = DEFAULT_MAX_SEGMENT_LENGTH
    assets: Mapping[str, str] = field(default_factory=dict)
    extras: Mapping[str, Any] = field(default_factory=dict)
    revision: int = 0
    # per-wall tessellation, carried over by mutate() for unchanged walls
    wall_barriers: Mapping[str, tuple[Barrier, ...]] | None = field(
        default=None, compare=False, repr=False
    )

    def __post_init__(self):
        _validate(self)
        carried = self.wall_barriers or {}
        built = {
            w.id: carried.get(w.id) or tessellate(w, self.max_segment_length)
            for w in self.walls
        }
        object.__setattr__(self, "wall_barriers", MappingProxyType(built))

    @cached_property
    def barriers(self) -> tuple[Barrier, ...]:
        return tuple(b for w in self.walls for b in self.wall_barriers[w.id])

    @cached_property
    def material_index(self) -> Mapping[str, int]:
        return MappingProxyType({m.id: i for i, m in enumerate(self.materials)})

    @cached_property
    def barrier_field(self) -> "BarrierField":
        return BarrierField.build(self.barriers, self.material_index)

    def emitter(self, eid: str) -> Emitter:
        for e in self.emitters:
            if e.id == eid:
                return e
        raise SceneError("unknown id")

    def wall(self, wid: str) -> Wall:
        for w in self.walls:
            if w.id == wid:
                return w
        raise SceneError("unknown id")

    def material(self, mid: str) -> Material:
        for m in self.materials:
            if m.id == mid:
                return m
        raise SceneError("unknown id")


def _validate(s: Scene) -> None:
    if not (isinstance(s.c, (int, float)) and math.isfinite(s.c) and s.c > 0):
        raise SceneError("c must be > 0")
    if not (isinstance(s.d, (int, float)) and math.isfinite(s.d) and 0.0 <= s.d <= 1.0):
        raise SceneError("d must be in [0, 1]")
    if not (math.isfinite(s.max_segment_length) and s.max_segment_length > 0):
        raise SceneError("max_segment_length must be > 0")

    seen: set[str] = set()
    for i, m in enumerate(s.materials):
        if not m.id:
            raise SceneError(f"materials[{i}].id must be a non-empty string")
        if m.id in seen:
            raise SceneError(f"duplicate material id {m.id!r}")
        seen.add(m.id)
        for path_name, spec in (("r_filter", m.r_filter), ("t_filter", m.t_filter)):
            try:
                validate_spec(spec)
            except EffectError as exc:
                raise SceneError(f"materials[{i}].{path_name}: {exc}") from None
        if m.param_map is not None:
            try:
                validate_param_map(m.param_map, m.r_filter, m.t_filter)
            except EffectError as exc:
                raise SceneError(f"materials[{i}].param_map: {exc}") from None

    seen = set()
    for i, e in enumerate(s.emitters):
        if not e.id:
            raise SceneError(f"emitters[{i}].id must be a non-empty string")
        if e.id in seen:
            raise SceneError(f"duplicate emitter id {e.id!r}")
        seen.add(e.id)
        if not (isinstance(e.gain, (int, float)) and math.isfinite(e.gain) and e.gain >= 0):
            raise SceneError(f"emitters[{i}].gain must be a finite number >= 0")
        if not (math.isfinite(e.start_offset) and e.start_offset >= 0):
            raise SceneError(f"emitters[{i}].start_offset must be >= 0")

    seen = set()
    for i, w in enumerate(s.walls):
        if not w.id:
            raise SceneError(f"walls[{i}].id must be a non-empty string")
        if w.id in seen:
            raise SceneError(f"duplicate wall id {w.id!r}")
        seen.add(w.id)
        if len(w.vertices) < 2:
            raise SceneError(f"walls[{i}].vertices must contain at least 2 points")
        for j in range(1, len(w.vertices)):
            if w.vertices[j] == w.vertices[j - 1]:
                raise SceneError(f"walls[{i}].vertices[{j}] equals the previous vertex")
        if all(m.id != w.material_id for m in s.materials):
            raise SceneError(
                f"walls[{i}].material_id references unknown material {w.material_id!r}"
            )


# ---------------------------------------------------------------------------
# Vectorized barrier view
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BarrierField:
    """Struct-of-arrays view of a scene's barriers for numpy passes."""

    p0x: np.ndarray
    p0y: np.ndarray
    mx: np.ndarray  # midpoints
    my: np.ndarray
    ex: np.ndarray  # direction p1 - p0, not normalized
    ey: np.ndarray
    length: np.ndarray
    mat: np.ndarray  # index into scene.materials
    count: int

    @staticmethod
    def build(barriers: tuple[Barrier, ...], material_index: Mapping[str, int]) -> "BarrierField":
        n = len(barriers)
        p0 = np.array([(b.p0.x, b.p0.y) for b in barriers], dtype=np.float64).reshape(n, 2)
        p1 = np.array([(b.p1.x, b.p1.y) for b in barriers], dtype=np.float64).reshape(n, 2)
        d = p1 - p0
        mat = np.array([material_index[b.material_id] for b in barriers], dtype=np.intp)
        mid = (p0 + p1) * 0.5
        return BarrierField(
            p0x=p0[:, 0], p0y=p0[:, 1],
            mx=mid[:, 0], my=mid[:, 1],
            ex=d[:, 0], ey=d[:, 1],
            length=np.hypot(d[:, 0], d[:, 1]), mat=mat, count=n,
        )


# ---------------------------------------------------------------------------
# Mutations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MoveEmitter:
    id: str
    x: float
    y: float


@dataclass(frozen=True)
class MoveReceptor:
    x: float
    y: float


@dataclass(frozen=True)
class AddEmitter:
    x: float
    y: float
    track: str = ""
    gain: float = 1.0
    loop: bool = True
    start_offset: float = 0.0
    id: str | None = None  # auto-assigned when omitted


@dataclass(frozen=True)
class RemoveEmitter:
    id: str


@dataclass(frozen=True)
class SetEmitter:
    """Partial update; None fields keep their current value."""

    id: str
    gain: float | None = None
    track: str | None = None
    loop: bool | None = None
    start_offset: float | None = None


@dataclass(frozen=True)
class AddWall:
    vertices: tuple[tuple[float, float], ...]
    material_id: str
    id: str | None = None


@dataclass(frozen=True)
class RemoveWall:
    id: str


@dataclass(frozen=True)
class MoveWall:
    """Translate a whole wall by (dx, dy)."""

    id: str
    dx: float
    dy: float


@dataclass(frozen=True)
class SetWallMaterial:
    id: str
    material_id: str


@dataclass(frozen=True)
class SetConstants:
    c: float | None = None
    d: float | None = None
    max_segment_length: float | None = None


SceneMutation = Union[
    MoveEmitter, MoveReceptor, AddEmitter, RemoveEmitter, SetEmitter,
    AddWall, RemoveWall, MoveWall, SetWallMaterial, SetConstants,
]


def _fresh_id(prefix: str, taken: set[str]) -> str:
    n = len(taken) + 1
    while f"{prefix}{n}" in taken:
        n += 1
    return f"{prefix}{n}"


def mutate(scene: Scene, op: SceneMutation) -> Scene:
    """Apply one mutation, returning the next revision.

    Raises SceneError (scene unchanged) when the op references an unknown id
    or the result would violate a scene invariant.
    """
    emitters = scene.emitters
    receptor = scene.receptor
    walls = scene.walls
    c, d, msl = scene.c, scene.d, scene.max_segment_length
    changed_walls: set[str] = set()

    if isinstance(op, MoveEmitter):
        scene.emitter(op.id)
        emitters = tuple(replace(x, pos=Vec2(op.x, op.y)) if x.id == op.id else x for x in emitters)
    elif isinstance(op, MoveReceptor):
        receptor = Receptor(Vec2(op.x, op.y))
    elif isinstance(op, AddEmitter):
        taken = {x.id for x in emitters}
        eid = op.id if op.id is not None else _fresh_id("e", taken)
        emitters = emitters + (
            Emitter(eid, Vec2(op.x, op.y), op.track, op.gain, op.loop, op.start_offset),
        )
    elif isinstance(op, RemoveEmitter):
        scene.emitter(op.id)
        emitters = tuple(x for x in emitters if x.id != op.id)
    elif isinstance(op, SetEmitter):
        e = scene.emitter(op.id)
        e = replace(
            e,
            gain=e.gain if op.gain is None else op.gain,
            track=e.track if op.track is None else op.track,
            loop=e.loop if op.loop is None else op.loop,
            start_offset=e.start_offset if op.start_offset is None else op.start_offset,
        )
        emitters = tuple(e if x.id == op.id else x for x in emitters)
    elif isinstance(op, AddWall):
        taken = {x.id for x in walls}
        wid = op.id if op.id is not None else _fresh_id("w", taken)
        verts = tuple(Vec2(x, y) for x, y in op.vertices)
        walls = walls + (Wall(wid, op.material_id, verts),)
        changed_walls.add(wid)
    elif isinstance(op, RemoveWall):
        scene.wall(op.id)
        walls = tuple(x for x in walls if x.id != op.id)
    elif isinstance(op, MoveWall):
        w = scene.wall(op.id)
        verts = tuple(Vec2(v.x + op.dx, v.y + op.dy) for v in w.vertices)
        walls = tuple(replace(x, vertices=verts) if x.id == op.id else x for x in walls)
        changed_walls.add(op.id)
    elif isinstance(op, SetWallMaterial):
        scene.wall(op.id)
        walls = tuple(replace(x, material_id=op.material_id) if x.id == op.id else x for x in walls)
        # material change does not move geometry; barriers only need relabeling,
        # which re-tessellation does cheaply for one wall
        changed_walls.add(op.id)
    elif isinstance(op, SetConstants):
        c = scene.c if op.c is None else op.c
        d = scene.d if op.d is None else op.d
        if op.max_segment_length is not None and op.max_segment_length != msl:
            msl = op.max_segment_length
            changed_walls.update(w.id for w in walls)
    else:
        raise SceneError(f"unknown mutation type {type(op).__name__}")

    carried = {
        w.id: scene.wall_barriers[w.id]
        for w in walls
        if w.id not in changed_walls and w.id in scene.wall_barriers
    }
    new_scene = Scene(
        receptor=receptor,
        emitters=emitters,
        walls=walls,
        materials=scene.materials,
        c=c,
        d=d,
        max_segment_length=msl,
        assets=scene.assets,
        extras=scene.extras,
        revision=scene.revision + 1,
        wall_barriers=carried,
    )
    if walls is scene.walls and msl == scene.max_segment_length:
        # geometry untouched: share the cached barrier views
        for key in ("barriers", "barrier_field"):
            if key in scene.__dict__:
                new_scene.__dict__[key] = scene.__dict__[key]
    return new_scene
