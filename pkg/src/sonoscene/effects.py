"""Stateful block effects behind material reflection/transmission filters.

Four effect kinds with named, range-checked parameters:

    Gain     g: linear [0, 4]
    Delay    time: s [0, 2], feedback: linear [0, 0.95]   (feedback comb)
    Phaser   rate: Hz [0.05, 10], depth: linear [0, 1]    (4 allpass stages)
    LowPass  cutoff: Hz [20, 20000]                       (one pole)

Processing is block-based and deterministic; splitting a stream into blocks
of any size yields bit-identical output as long as state carries over.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.signal import lfilter

log = logging.getLogger(__name__)

# kind -> {param: (lo, hi, default)}
PARAM_RANGES: dict[str, dict[str, tuple[float, float, float]]] = {
    "Gain": {"g": (0.0, 4.0, 1.0)},
    "Delay": {"time": (0.0, 2.0, 0.25), "feedback": (0.0, 0.95, 0.3)},
    "Phaser": {"rate": (0.05, 10.0, 0.5), "depth": (0.0, 1.0, 0.7)},
    "LowPass": {"cutoff": (20.0, 20000.0, 1000.0)},
}

# Delay line capacity in seconds; `time` beyond this is clamped.
DELAY_CAPACITY_S = 2.0

# The phaser LFO coefficient is re-evaluated on this fixed grid of absolute
# stream positions (not block boundaries), which keeps output bit-identical
# under any block split.
PHASER_CONTROL_INTERVAL = 64
PHASER_COEF_BASE = -0.5
PHASER_COEF_SPAN = 0.4
PHASER_STAGES = 4


class EffectError(ValueError):
    pass


@dataclass(frozen=True)
class EffectSpec:
    """An effect kind plus parameter overrides (unset params use defaults)."""

    kind: str
    params: Mapping[str, float] = field(default_factory=dict)

    def with_param(self, name: str, value: float) -> "EffectSpec":
        merged = dict(self.params)
        merged[name] = value
        return EffectSpec(self.kind, merged)

    def full_params(self) -> dict[str, float]:
        """Parameter map with defaults filled in."""
        ranges = PARAM_RANGES[self.kind]
        out = {name: spec[2] for name, spec in ranges.items()}
        out.update(self.params)
        return out


@dataclass(frozen=True)
class ParamMap:
    """Maps a mix scalar onto one named effect parameter.

    ``source`` selects the driving scalar: "material_mix" uses the owning
    material's mix for the filter's path, "global_mix" the emitter's global
    mix for that path. The target parameter sweeps linearly over [lo, hi].
    """

    target: str
    source: str  # "material_mix" | "global_mix"
    lo: float
    hi: float


def identity_spec() -> EffectSpec:
    return EffectSpec("Gain", {"g": 1.0})


def validate_spec(spec: EffectSpec) -> None:
    """Raise EffectError for unknown kinds/params or out-of-range values."""
    ranges = PARAM_RANGES.get(spec.kind)
    if ranges is None:
        raise EffectError(
            f"unknown effect kind {spec.kind!r} (expected one of {sorted(PARAM_RANGES)})"
        )
    for name, value in spec.params.items():
        if name not in ranges:
            raise EffectError(f"unknown parameter {name!r} for effect {spec.kind}")
        lo, hi, _ = ranges[name]
        if not (isinstance(value, (int, float)) and math.isfinite(value)):
            raise EffectError(f"parameter {name!r} of {spec.kind} must be a finite number")
        if not (lo <= value <= hi):
            raise EffectError(
                f"parameter {name!r} of {spec.kind} out of range: {value} not in [{lo}, {hi}]"
            )


def validate_param_map(pmap: ParamMap, r_spec: EffectSpec, t_spec: EffectSpec) -> None:
    if pmap.source not in ("material_mix", "global_mix"):
        raise EffectError(f"param_map source must be material_mix or global_mix, got {pmap.source!r}")
    if pmap.lo > pmap.hi:
        raise EffectError(f"param_map range lo must be <= hi, got [{pmap.lo}, {pmap.hi}]")
    if pmap.target not in PARAM_RANGES[r_spec.kind] and pmap.target not in PARAM_RANGES[t_spec.kind]:
        raise EffectError(
            f"param_map target {pmap.target!r} does not name a parameter of either filter"
        )


def apply_param_map(spec: EffectSpec, pmap: ParamMap, mix_value: float) -> EffectSpec:
    """Return ``spec`` with the mapped parameter set from ``mix_value``.

    The value sweeps lo -> hi as the mix goes 0 -> 1 and is clamped into the
    parameter's legal range. Specs without the target param pass through.
    """
    ranges = PARAM_RANGES[spec.kind]
    if pmap.target not in ranges:
        return spec
    lo, hi, _ = ranges[pmap.target]
    value = pmap.lo + mix_value * (pmap.hi - pmap.lo)
    return spec.with_param(pmap.target, min(max(value, lo), hi))


# ---------------------------------------------------------------------------
# Filter state
# ---------------------------------------------------------------------------


class FilterState:
    """Per-(emitter, material, path) runtime state for one effect kind."""

    kind: str

    def __init__(self, sample_rate: int):
        self.sample_rate = sample_rate
        self.param_error_flagged = False

    def _run(self, params: dict[str, float], block: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class GainState(FilterState):
    kind = "Gain"

    def _run(self, params, block):
        return params["g"] * block


class DelayState(FilterState):
    """Feedback comb y[n] = x[n-D] + fb*y[n-D] with a fixed-capacity line."""

    kind = "Delay"

    def __init__(self, sample_rate: int):
        super().__init__(sample_rate)
        self.cap = int(round(DELAY_CAPACITY_S * sample_rate))
        self._xh = np.zeros(self.cap)
        self._yh = np.zeros(self.cap)

    def _run(self, params, block):
        d = min(int(round(params["time"] * self.sample_rate)), self.cap)
        fb = params["feedback"]
        n = len(block)
        if d == 0:
            # zero lag makes the feedback path an algebraic loop; bypass it
            y = block.copy()
        else:
            xd = np.concatenate([self._xh[self.cap - d :], block])[:n]
            yfull = np.concatenate([self._yh[self.cap - d :], np.zeros(n)])
            i = 0
            while i < n:
                k = min(d, n - i)
                yfull[d + i : d + i + k] = xd[i : i + k] + fb * yfull[i : i + k]
                i += k
            y = yfull[d:]
        self._xh = np.concatenate([self._xh, block])[-self.cap :]
        self._yh = np.concatenate([self._yh, y])[-self.cap :]
        return y


class PhaserState(FilterState):
    """4 cascaded first-order allpasses, coefficient swept by a sine LFO."""

    kind = "Phaser"

    def __init__(self, sample_rate: int):
        super().__init__(sample_rate)
        self._pos = 0  # absolute samples processed since state creation
        self._zi = np.zeros(PHASER_STAGES)

    def _run(self, params, block):
        rate, depth = params["rate"], params["depth"]
        n = len(block)
        y = np.empty_like(block)
        i = 0
        while i < n:
            seg = min(n - i, PHASER_CONTROL_INTERVAL - self._pos % PHASER_CONTROL_INTERVAL)
            anchor = (self._pos // PHASER_CONTROL_INTERVAL) * PHASER_CONTROL_INTERVAL
            lfo = math.sin(2.0 * math.pi * rate * anchor / self.sample_rate)
            a = PHASER_COEF_BASE + PHASER_COEF_SPAN * depth * lfo
            w = block[i : i + seg]
            for s in range(PHASER_STAGES):
                w, zf = lfilter([a, 1.0], [1.0, a], w, zi=self._zi[s : s + 1])
                self._zi[s] = zf[0]
            y[i : i + seg] = 0.5 * block[i : i + seg] + 0.5 * w
            self._pos += seg
            i += seg
        return y


class LowPassState(FilterState):
    """One-pole smoother y[n] = y[n-1] + alpha*(x[n] - y[n-1])."""

    kind = "LowPass"

    def __init__(self, sample_rate: int):
        super().__init__(sample_rate)
        self._zi = np.zeros(1)

    def _run(self, params, block):
        alpha = 1.0 - math.exp(-2.0 * math.pi * params["cutoff"] / self.sample_rate)
        y, self._zi = lfilter([alpha], [1.0, alpha - 1.0], block, zi=self._zi)
        return y


_STATE_TYPES: dict[str, type[FilterState]] = {
    "Gain": GainState,
    "Delay": DelayState,
    "Phaser": PhaserState,
    "LowPass": LowPassState,
}


def make_state(kind: str, sample_rate: int) -> FilterState:
    try:
        return _STATE_TYPES[kind](sample_rate)
    except KeyError:
        raise EffectError(f"unknown effect kind {kind!r}") from None


def process(state: FilterState, spec: EffectSpec, block: np.ndarray) -> np.ndarray:
    """Run one block through the effect; deterministic given (state, spec, in).

    A spec whose parameters are out of range passes the block through
    unmodified; the error is logged once per state.
    """
    if spec.kind != state.kind:
        raise EffectError(f"spec kind {spec.kind!r} does not match state kind {state.kind!r}")
    try:
        validate_spec(spec)
    except EffectError as exc:
        if not state.param_error_flagged:
            state.param_error_flagged = True
            log.warning("effect parameter error, passing audio through: %s", exc)
        return block.copy()
    return state._run(spec.full_params(), block)
