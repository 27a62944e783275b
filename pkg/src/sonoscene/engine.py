"""Block renderer: dry/wet mixing of emitter tracks through material filters.

Per block, for every emitter:

    out += dMix * dry + sum over materials of
           rMix * m.rMix * rFilter(dry) + tMix * m.tMix * tFilter(dry)

with all mix scalars smoothed toward the latest published snapshot by a
one-pole envelope (tau default 20 ms). The sum is hard-clamped to [-1, 1]
with a clip counter. The audio path never parameterizes and never waits on
the control path: it reads one (scene, snapshot) reference published
atomically and owns all filter state exclusively.
"""

from __future__ import annotations

import logging
import math
import threading
import time
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from . import effects
from .effects import EffectSpec, FilterState
from .params import EmitterMix, ParamSnapshot, parameterize
from .scene import Material, Scene

log = logging.getLogger(__name__)

DEFAULT_BLOCK_SIZE = 512
DEFAULT_SAMPLE_RATE = 44100
DEFAULT_SMOOTHING_TAU = 0.02

# scaled material mixes below this are inaudible; their filters are only
# advanced when state already exists (block-split invariance), never created
EFF_SKIP_THRESHOLD = 1e-4


@dataclass(frozen=True)
class EngineConfig:
    block_size: int = DEFAULT_BLOCK_SIZE
    sample_rate: int = DEFAULT_SAMPLE_RATE
    smoothing_tau: float = DEFAULT_SMOOTHING_TAU
    length_weighted: bool = False

    @property
    def block_duration(self) -> float:
        return self.block_size / self.sample_rate


class SmoothedScalar:
    """One-pole envelope: current <- target + (current-target)*exp(-dt/tau).

    Initialized at its first target so static scenes are at steady state
    from the first sample.
    """

    __slots__ = ("current", "target")

    def __init__(self, value: float):
        self.current = value
        self.target = value

    def step(self, k: float) -> float:
        self.current = self.target + (self.current - self.target) * k
        return self.current


@dataclass
class Transport:
    playing: bool = True
    position: int = 0  # samples since start while Playing


@dataclass
class EngineStats:
    blocks_rendered: int = 0
    clipped_samples: int = 0
    render_seconds: float = 0.0

    def realtime_factor(self, config: EngineConfig) -> float:
        if self.blocks_rendered == 0:
            return 0.0
        audio_seconds = self.blocks_rendered * config.block_duration
        return self.render_seconds / audio_seconds


class _EmitterStrip:
    """Per-emitter smoothers plus per-material smoothers and filter states."""

    def __init__(self, mix: EmitterMix):
        self.d = SmoothedScalar(mix.d_mix)
        self.r = SmoothedScalar(mix.r_mix)
        self.t = SmoothedScalar(mix.t_mix)
        self.mat_r: dict[str, SmoothedScalar] = {}
        self.mat_t: dict[str, SmoothedScalar] = {}
        self.states: dict[tuple[str, str], FilterState] = {}  # (material_id, path)
        self.track_warned = False
        for mm in mix.material_mixes:
            self.mat_r[mm.material_id] = SmoothedScalar(mm.r_mix)
            self.mat_t[mm.material_id] = SmoothedScalar(mm.t_mix)

    def retarget(self, mix: EmitterMix):
        self.d.target = mix.d_mix
        self.r.target = mix.r_mix
        self.t.target = mix.t_mix
        for mm in mix.material_mixes:
            if mm.material_id not in self.mat_r:
                self.mat_r[mm.material_id] = SmoothedScalar(mm.r_mix)
                self.mat_t[mm.material_id] = SmoothedScalar(mm.t_mix)
            else:
                self.mat_r[mm.material_id].target = mm.r_mix
                self.mat_t[mm.material_id].target = mm.t_mix


class Engine:
    """Single renderer driving both offline and realtime paths.

    Control side calls publish()/set_transport(); the audio side calls
    render_next_block(). The published (scene, snapshot, tracks) triple is
    swapped by plain reference assignment, so the audio side always sees a
    consistent trio without locking.
    """

    def __init__(
        self,
        scene: Scene,
        tracks: Mapping[str, np.ndarray] | None = None,
        config: EngineConfig = EngineConfig(),
        snapshot: ParamSnapshot | None = None,
    ):
        self.config = config
        snap = snapshot if snapshot is not None else parameterize(scene, config.length_weighted)
        self._published: tuple[Scene, ParamSnapshot, Mapping[str, np.ndarray]] = (
            scene, snap, dict(tracks or {}),
        )
        self.transport = Transport()
        self.stats = EngineStats()
        self._applied_revision: int | None = None
        self._strips: dict[str, _EmitterStrip] = {}
        self._scene: Scene = scene
        self._snapshot: ParamSnapshot = snap
        self._tracks: Mapping[str, np.ndarray] = self._published[2]

    # -- control side -------------------------------------------------------

    def publish(
        self,
        scene: Scene,
        snapshot: ParamSnapshot | None = None,
        tracks: Mapping[str, np.ndarray] | None = None,
    ) -> ParamSnapshot:
        """Publish a new revision (computing its snapshot here, on control time)."""
        if snapshot is None:
            snapshot = parameterize(scene, self.config.length_weighted)
        current_tracks = self._published[2]
        self._published = (scene, snapshot, dict(tracks) if tracks is not None else current_tracks)
        return snapshot

    def set_transport(self, playing: bool, position: int | None = None) -> None:
        if position is not None:
            self.transport.position = max(0, int(position))
        self.transport.playing = playing

    @property
    def snapshot(self) -> ParamSnapshot:
        return self._published[1]

    @property
    def scene(self) -> Scene:
        return self._published[0]

    # -- audio side ---------------------------------------------------------

    def _sync_published(self) -> None:
        scene, snap, tracks = self._published
        self._scene, self._snapshot, self._tracks = scene, snap, tracks
        if self._applied_revision == snap.revision:
            return
        self._applied_revision = snap.revision
        live = set()
        for mix in snap.per_emitter:
            live.add(mix.emitter_id)
            strip = self._strips.get(mix.emitter_id)
            if strip is None:
                self._strips[mix.emitter_id] = _EmitterStrip(mix)
            else:
                strip.retarget(mix)
        for gone in [eid for eid in self._strips if eid not in live]:
            del self._strips[gone]

    def _emitter_block(self, strip: _EmitterStrip, emitter_id: str) -> np.ndarray:
        n = self.config.block_size
        se = None
        for e in self._scene.emitters:
            if e.id == emitter_id:
                se = e
                break
        if se is None or not se.track:
            return np.zeros(n)
        track = self._tracks.get(se.track)
        if track is None:
            if not strip.track_warned:
                strip.track_warned = True
                log.warning("emitter %r: track %r not loaded, rendering silence", se.id, se.track)
            return np.zeros(n)
        length = len(track)
        if length == 0:
            return np.zeros(n)
        idx = (
            self.transport.position
            - int(round(se.start_offset * self.config.sample_rate))
            + np.arange(n)
        )
        if se.loop:
            block = track[np.mod(idx, length)]
            block = np.where(idx >= 0, block, 0.0)
        else:
            valid = (idx >= 0) & (idx < length)
            block = np.zeros(n)
            block[valid] = track[idx[valid]]
        return se.gain * block

    def _material_specs(
        self, mat: Material, strip: _EmitterStrip, sm_r: float, sm_t: float
    ) -> tuple[EffectSpec, EffectSpec]:
        r_spec, t_spec = mat.r_filter, mat.t_filter
        if mat.param_map is not None:
            pm = mat.param_map
            if pm.source == "material_mix":
                r_val = strip.mat_r[mat.id].current
                t_val = strip.mat_t[mat.id].current
            else:
                r_val, t_val = sm_r, sm_t
            r_spec = effects.apply_param_map(r_spec, pm, r_val)
            t_spec = effects.apply_param_map(t_spec, pm, t_val)
        return r_spec, t_spec

    def _run_filter(
        self, strip: _EmitterStrip, mat_id: str, path: str, spec: EffectSpec,
        block: np.ndarray, create: bool,
    ) -> np.ndarray | None:
        key = (mat_id, path)
        state = strip.states.get(key)
        if state is None:
            if not create:
                return None
            state = effects.make_state(spec.kind, self.config.sample_rate)
            strip.states[key] = state
        elif state.kind != spec.kind:
            state = effects.make_state(spec.kind, self.config.sample_rate)
            strip.states[key] = state
        return effects.process(state, spec, block)

    def render_next_block(self) -> np.ndarray:
        """Render one block and advance the transport.

        When stopped, returns silence and freezes all state (the transport
        position, smoothers, and filter memories stay put).
        """
        n = self.config.block_size
        if not self.transport.playing:
            return np.zeros(n)
        t0 = time.perf_counter()
        self._sync_published()
        k = (
            0.0
            if self.config.smoothing_tau <= 0.0
            else math.exp(-self.config.block_duration / self.config.smoothing_tau)
        )
        materials = {m.id: m for m in self._scene.materials}
        out = np.zeros(n)
        for mix in self._snapshot.per_emitter:
            strip = self._strips[mix.emitter_id]
            d = strip.d.step(k)
            r = strip.r.step(k)
            t = strip.t.step(k)
            dry = self._emitter_block(strip, mix.emitter_id)
            out += d * dry
            for mm in mix.material_mixes:
                mat = materials.get(mm.material_id)
                if mat is None:
                    continue
                m_r = strip.mat_r[mm.material_id].step(k)
                m_t = strip.mat_t[mm.material_id].step(k)
                g_r = r * m_r
                g_t = t * m_t
                active = g_r >= EFF_SKIP_THRESHOLD or g_t >= EFF_SKIP_THRESHOLD
                r_spec, t_spec = self._material_specs(mat, strip, r, t)
                r_out = self._run_filter(strip, mat.id, "r", r_spec, dry, create=active)
                t_out = self._run_filter(strip, mat.id, "t", t_spec, dry, create=active)
                if active:
                    out += g_r * r_out + g_t * t_out
        clipped = np.count_nonzero((out < -1.0) | (out > 1.0))
        if clipped:
            self.stats.clipped_samples += int(clipped)
            out = np.clip(out, -1.0, 1.0)
        self.transport.position += n
        self.stats.blocks_rendered += 1
        self.stats.render_seconds += time.perf_counter() - t0
        return out


# ---------------------------------------------------------------------------
# Offline render
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScriptEvent:
    """One scheduled scene change, applied at the block containing `time`."""

    time: float
    apply: Callable[[Scene], Scene]


def render_offline(
    scene: Scene,
    duration: float,
    tracks: Mapping[str, np.ndarray] | None = None,
    config: EngineConfig = EngineConfig(),
    script: list[ScriptEvent] | None = None,
    out_stats: EngineStats | None = None,
) -> np.ndarray:
    """Deterministic render of `duration` seconds (scripted changes optional).

    Script events mutate the scene at the start of the block containing
    their timestamp, exactly as the realtime path applies control messages,
    so a scripted offline render matches a scripted realtime capture.
    Final engine counters are copied into `out_stats` when given.
    """
    if duration <= 0:
        raise ValueError("duration must be > 0")
    engine = Engine(scene, tracks=tracks, config=config)
    total = int(round(duration * config.sample_rate))
    blocks = math.ceil(total / config.block_size)
    events = sorted(script or [], key=lambda ev: ev.time)
    ev_i = 0
    out = np.empty(blocks * config.block_size)
    current = scene
    for b in range(blocks):
        while ev_i < len(events) and _block_of(events[ev_i].time, config) <= b:
            current = events[ev_i].apply(current)
            engine.publish(current)
            ev_i += 1
        out[b * config.block_size : (b + 1) * config.block_size] = engine.render_next_block()
    if out_stats is not None:
        out_stats.blocks_rendered = engine.stats.blocks_rendered
        out_stats.clipped_samples = engine.stats.clipped_samples
        out_stats.render_seconds = engine.stats.render_seconds
    return out[:total]


def _block_of(t: float, config: EngineConfig) -> int:
    return int(t * config.sample_rate) // config.block_size


# ---------------------------------------------------------------------------
# Realtime wrapper
# ---------------------------------------------------------------------------


class RealtimeEngine:
    """Drives an Engine on its own thread, handing blocks to a sink callback.

    paced=True sleeps to track wall-clock audio time (the service's mode);
    paced=False renders flat out (capture/equivalence tests). The optional
    on_block_start hook runs on the render thread right before each block
    with the upcoming block index, which is how scripted runs line up with
    render_offline exactly.
    """

    def __init__(
        self,
        engine: Engine,
        sink: Callable[[int, np.ndarray], None],
        paced: bool = True,
        on_block_start: Callable[[int], None] | None = None,
    ):
        self.engine = engine
        self.sink = sink
        self.paced = paced
        self.on_block_start = on_block_start
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self._block_index = 0

    def start(self) -> None:
        if self._thread is not None:
            raise RuntimeError("already started")
        self._thread = threading.Thread(target=self._run, name="sonoscene-render", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5.0)
            self._thread = None

    def _run(self) -> None:
        cfg = self.engine.config
        t_start = time.perf_counter()
        audio_time = 0.0
        while not self._stop.is_set():
            if not self.engine.transport.playing:
                # stopped: emit nothing, keep sequence numbers gapless
                time.sleep(cfg.block_duration if self.paced else 0.001)
                t_start = time.perf_counter()
                audio_time = 0.0
                continue
            if self.on_block_start is not None:
                self.on_block_start(self._block_index)
            block = self.engine.render_next_block()
            self.sink(self._block_index, block)
            self._block_index += 1
            audio_time += cfg.block_duration
            if self.paced:
                ahead = audio_time - (time.perf_counter() - t_start)
                if ahead > 0:
                    time.sleep(ahead)
