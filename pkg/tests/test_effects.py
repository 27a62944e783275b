"""Effect registry, parameter mapping, and per-kind DSP behavior."""

import logging
import math

import numpy as np
import pytest

from sonoscene.effects import (
    PARAM_RANGES,
    EffectError,
    EffectSpec,
    ParamMap,
    apply_param_map,
    identity_spec,
    make_state,
    process,
    validate_param_map,
    validate_spec,
)

RATE = 44100


def _noise(n, seed=0):
    return np.random.default_rng(seed).uniform(-1, 1, n)


def _run_split(kind, spec, x, sizes):
    state = make_state(kind, RATE)
    out = []
    pos = 0
    for n in sizes:
        out.append(process(state, spec, x[pos : pos + n]))
        pos += n
    assert pos == len(x)
    return np.concatenate(out)


class TestRegistry:
    def test_identity_spec(self):
        spec = identity_spec()
        assert spec.kind == "Gain"
        assert spec.full_params() == {"g": 1.0}

    def test_defaults_inside_ranges(self):
        for kind, ranges in PARAM_RANGES.items():
            for name, (lo, hi, default) in ranges.items():
                assert lo <= default <= hi, (kind, name)
            validate_spec(EffectSpec(kind, {}))

    def test_unknown_kind(self):
        with pytest.raises(EffectError, match="unknown effect kind"):
            validate_spec(EffectSpec("Reverb", {}))

    def test_unknown_param(self):
        with pytest.raises(EffectError, match="unknown parameter"):
            validate_spec(EffectSpec("Gain", {"q": 1.0}))

    def test_out_of_range(self):
        with pytest.raises(EffectError, match="out of range"):
            validate_spec(EffectSpec("Delay", {"time": 3.0}))

    def test_non_finite(self):
        with pytest.raises(EffectError, match="finite"):
            validate_spec(EffectSpec("Gain", {"g": math.nan}))

    def test_full_params_fills_defaults(self):
        spec = EffectSpec("Delay", {"time": 0.5})
        assert spec.full_params() == {"time": 0.5, "feedback": 0.3}

    def test_with_param(self):
        spec = EffectSpec("Gain", {}).with_param("g", 2.0)
        assert spec.params["g"] == 2.0


class TestParamMap:
    R = EffectSpec("Phaser", {})
    T = EffectSpec("LowPass", {})

    def test_valid(self):
        validate_param_map(ParamMap("rate", "material_mix", 0.05, 0.5), self.R, self.T)
        validate_param_map(ParamMap("cutoff", "global_mix", 100, 2000), self.R, self.T)

    def test_bad_source(self):
        with pytest.raises(EffectError, match="source"):
            validate_param_map(ParamMap("rate", "volume", 0, 1), self.R, self.T)

    def test_reversed_range(self):
        with pytest.raises(EffectError, match="lo must be <= hi"):
            validate_param_map(ParamMap("rate", "material_mix", 1, 0), self.R, self.T)

    def test_target_on_neither_filter(self):
        with pytest.raises(EffectError, match="does not name a parameter"):
            validate_param_map(ParamMap("g", "material_mix", 0, 1), self.R, self.T)

    def test_apply_endpoints(self):
        pmap = ParamMap("rate", "material_mix", 0.05, 0.5)
        assert apply_param_map(self.R, pmap, 0.0).params["rate"] == pytest.approx(0.05)
        assert apply_param_map(self.R, pmap, 1.0).params["rate"] == pytest.approx(0.5)
        assert apply_param_map(self.R, pmap, 0.5).params["rate"] == pytest.approx(0.275)

    def test_apply_clamps_to_legal_range(self):
        pmap = ParamMap("cutoff", "material_mix", 0.0, 30000.0)
        assert apply_param_map(self.T, pmap, 0.0).params["cutoff"] == 20.0
        assert apply_param_map(self.T, pmap, 1.0).params["cutoff"] == 20000.0

    def test_apply_skips_filters_without_target(self):
        pmap = ParamMap("cutoff", "material_mix", 100, 200)
        assert apply_param_map(self.R, pmap, 0.5) is self.R


class TestGain:
    def test_identity(self):
        x = _noise(512)
        out = process(make_state("Gain", RATE), identity_spec(), x)
        assert np.array_equal(out, x)

    def test_scaling(self):
        x = _noise(512)
        out = process(make_state("Gain", RATE), EffectSpec("Gain", {"g": 2.0}), x)
        assert np.array_equal(out, x * 2.0)

    def test_mute(self):
        out = process(make_state("Gain", RATE), EffectSpec("Gain", {"g": 0.0}), _noise(64))
        assert not out.any()


class TestDelay:
    def test_zero_time_passthrough(self):
        x = _noise(512)
        out = process(make_state("Delay", RATE), EffectSpec("Delay", {"time": 0.0}), x)
        assert np.array_equal(out, x)

    def test_impulse_taps(self):
        d = 100
        spec = EffectSpec("Delay", {"time": d / RATE, "feedback": 0.5})
        x = np.zeros(512)
        x[0] = 1.0
        out = process(make_state("Delay", RATE), spec, x)
        assert out[d] == 1.0
        assert out[2 * d] == 0.5
        assert out[3 * d] == 0.25
        mask = np.ones(512, bool)
        mask[[d, 2 * d, 3 * d, 4 * d, 5 * d]] = False
        assert not out[mask].any()

    def test_block_split_bit_exact(self):
        spec = EffectSpec("Delay", {"time": 0.003, "feedback": 0.7})
        x = _noise(2048)
        whole = _run_split("Delay", spec, x, [2048])
        split = _run_split("Delay", spec, x, [100, 412, 512, 700, 324])
        assert np.array_equal(whole, split)

    def test_short_delay_inside_one_block(self):
        # delay shorter than the block exercises the chunked feedback path
        d = 7
        spec = EffectSpec("Delay", {"time": d / RATE, "feedback": 0.5})
        x = np.zeros(64)
        x[0] = 1.0
        out = process(make_state("Delay", RATE), spec, x)
        for k in range(1, 9):
            assert out[k * d] == pytest.approx(0.5 ** (k - 1))

    def test_max_time_capacity(self):
        spec = EffectSpec("Delay", {"time": 2.0, "feedback": 0.9})
        state = make_state("Delay", RATE)
        x = _noise(3 * RATE)
        out = []
        for i in range(0, len(x), 4096):
            out.append(process(state, spec, x[i : i + 4096]))
        out = np.concatenate(out)
        assert np.all(np.isfinite(out))
        # the first two seconds are pure history fill
        assert not out[: 2 * RATE].any()


class TestPhaser:
    def test_zero_depth_is_time_invariant(self):
        spec = EffectSpec("Phaser", {"depth": 0.0})
        x = _noise(1024)
        direct = process(make_state("Phaser", RATE), spec, x)
        padded = process(make_state("Phaser", RATE), spec, np.concatenate([np.zeros(128), x]))
        assert not padded[:128].any()
        assert np.array_equal(padded[128:], direct)

    def test_block_split_bit_exact(self):
        # splits that land off the 64-sample control grid must not change
        # which coefficient any sample sees
        spec = EffectSpec("Phaser", {"rate": 2.0, "depth": 0.9})
        x = _noise(2048)
        whole = _run_split("Phaser", spec, x, [2048])
        ragged = _run_split("Phaser", spec, x, [1, 63, 100, 412, 512, 636, 324])
        halves = _run_split("Phaser", spec, x, [1024, 1024])
        assert np.array_equal(whole, ragged)
        assert np.array_equal(whole, halves)

    def test_output_bounded(self):
        spec = EffectSpec("Phaser", {"rate": 10.0, "depth": 1.0})
        t = np.arange(RATE) / RATE
        x = np.sin(2 * np.pi * 440 * t)
        out = process(make_state("Phaser", RATE), spec, x)
        assert np.all(np.isfinite(out))
        assert np.max(np.abs(out)) < 1.5

    def test_depth_changes_output(self):
        x = _noise(4096)
        dry = process(make_state("Phaser", RATE), EffectSpec("Phaser", {"depth": 0.0}), x)
        wet = process(make_state("Phaser", RATE), EffectSpec("Phaser", {"depth": 1.0}), x)
        assert not np.array_equal(dry, wet)


class TestLowPass:
    def test_dc_step_closed_form(self):
        cutoff = 1000.0
        alpha = 1.0 - math.exp(-2.0 * math.pi * cutoff / RATE)
        n = 256
        out = process(make_state("LowPass", RATE), EffectSpec("LowPass", {"cutoff": cutoff}), np.ones(n))
        want = 1.0 - (1.0 - alpha) ** (np.arange(n) + 1.0)
        assert np.allclose(out, want, rtol=0, atol=1e-12)

    def test_attenuates_high_frequency(self):
        t = np.arange(8192) / RATE
        hi = np.sin(2 * np.pi * 15000 * t)
        out = process(make_state("LowPass", RATE), EffectSpec("LowPass", {"cutoff": 200.0}), hi)
        assert np.sqrt(np.mean(out[1024:] ** 2)) < 0.05

    def test_block_split_bit_exact(self):
        spec = EffectSpec("LowPass", {"cutoff": 800.0})
        x = _noise(2048)
        whole = _run_split("LowPass", spec, x, [2048])
        split = _run_split("LowPass", spec, x, [17, 495, 1024, 512])
        assert np.array_equal(whole, split)


class TestProcess:
    def test_kind_mismatch_raises(self):
        with pytest.raises(EffectError, match="does not match"):
            process(make_state("Gain", RATE), EffectSpec("Delay", {}), np.zeros(8))

    def test_make_state_unknown_kind(self):
        with pytest.raises(EffectError, match="unknown effect kind"):
            make_state("Chorus", RATE)

    def test_out_of_range_passes_through_and_flags_once(self, caplog):
        state = make_state("Delay", RATE)
        spec = EffectSpec("Delay", {"time": 3.0})
        x = _noise(256)
        with caplog.at_level(logging.WARNING, logger="sonoscene.effects"):
            out1 = process(state, spec, x)
            out2 = process(state, spec, x)
        assert np.array_equal(out1, x)
        assert out1 is not x
        assert np.array_equal(out2, x)
        warnings = [r for r in caplog.records if "passing audio through" in r.message]
        assert len(warnings) == 1

    def test_determinism_all_kinds(self):
        x = _noise(4096, seed=3)
        specs = {
            "Gain": EffectSpec("Gain", {"g": 1.7}),
            "Delay": EffectSpec("Delay", {"time": 0.01, "feedback": 0.6}),
            "Phaser": EffectSpec("Phaser", {"rate": 1.3, "depth": 0.8}),
            "LowPass": EffectSpec("LowPass", {"cutoff": 500.0}),
        }
        for kind, spec in specs.items():
            a = process(make_state(kind, RATE), spec, x)
            b = process(make_state(kind, RATE), spec, x)
            assert np.array_equal(a, b), kind
