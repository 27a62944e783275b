"""Scene documents (JSON) and WAV audio I/O.

Scene files are UTF-8 JSON with a top-level format_version. Numbers are
written with up to 9 significant digits; unknown top-level fields are kept
and written back on save. WAV support covers RIFF little-endian PCM 16-bit
and IEEE float 32-bit, mono or stereo; files are always loaded down to mono.
"""

from __future__ import annotations

import json
import logging
import math
import struct
from pathlib import Path as FsPath
from typing import Any, Mapping

import numpy as np

from .effects import EffectSpec, ParamMap
from .geometry import Vec2
from .scene import (
    DEFAULT_C,
    DEFAULT_D,
    DEFAULT_MAX_SEGMENT_LENGTH,
    Emitter,
    FORMAT_VERSION,
    Material,
    Receptor,
    Scene,
    SceneError,
    Wall,
)

log = logging.getLogger(__name__)

_KNOWN_TOP_LEVEL = {
    "format_version", "c", "d", "max_segment_length",
    "receptor", "emitters", "materials", "walls", "assets",
}


class SceneIOError(ValueError):
    pass


def _q(x: float) -> float:
    """Quantize to 9 significant decimal digits."""
    return float(f"{x:.9g}")


# ---------------------------------------------------------------------------
# JSON document <-> Scene
# ---------------------------------------------------------------------------


def _num(obj: Mapping[str, Any], key: str, path: str, default=None) -> float:
    if key not in obj:
        if default is not None:
            return default
        raise SceneIOError(f"{path}.{key}: missing required number")
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise SceneIOError(f"{path}.{key}: expected a finite number, got {v!r}")
    return float(v)


def _str(obj: Mapping[str, Any], key: str, path: str, default=None) -> str:
    if key not in obj:
        if default is not None:
            return default
        raise SceneIOError(f"{path}.{key}: missing required string")
    v = obj[key]
    if not isinstance(v, str):
        raise SceneIOError(f"{path}.{key}: expected a string, got {v!r}")
    return v


def _obj(value: Any, path: str) -> Mapping[str, Any]:
    if not isinstance(value, dict):
        raise SceneIOError(f"{path}: expected an object, got {value!r}")
    return value


def _arr(obj: Mapping[str, Any], key: str, path: str) -> list:
    v = obj.get(key, [])
    if not isinstance(v, list):
        raise SceneIOError(f"{path}.{key}: expected an array, got {v!r}")
    return v


def _effect_spec(value: Any, path: str) -> EffectSpec:
    o = _obj(value, path)
    kind = _str(o, "kind", path)
    params = o.get("params", {})
    if not isinstance(params, dict):
        raise SceneIOError(f"{path}.params: expected an object, got {params!r}")
    for name, pv in params.items():
        if isinstance(pv, bool) or not isinstance(pv, (int, float)):
            raise SceneIOError(f"{path}.params.{name}: expected a number, got {pv!r}")
    return EffectSpec(kind, {k: float(v) for k, v in params.items()})


def document_to_scene(doc: Mapping[str, Any]) -> Scene:
    """Build a validated Scene from a parsed scene document."""
    doc = _obj(doc, "document")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise SceneIOError(f"format_version: unsupported value {version!r} (expected {FORMAT_VERSION})")

    ro = _obj(doc.get("receptor"), "receptor")
    receptor = Receptor(Vec2(_num(ro, "x", "receptor"), _num(ro, "y", "receptor")))

    emitters = []
    for i, eo in enumerate(_arr(doc, "emitters", "document")):
        path = f"emitters[{i}]"
        eo = _obj(eo, path)
        emitters.append(
            Emitter(
                id=_str(eo, "id", path),
                pos=Vec2(_num(eo, "x", path), _num(eo, "y", path)),
                track=_str(eo, "track", path, default=""),
                gain=_num(eo, "gain", path, default=1.0),
                loop=bool(eo.get("loop", True)),
                start_offset=_num(eo, "start_offset", path, default=0.0),
            )
        )

    materials = []
    for i, mo in enumerate(_arr(doc, "materials", "document")):
        path = f"materials[{i}]"
        mo = _obj(mo, path)
        pmap = None
        if mo.get("param_map") is not None:
            po = _obj(mo["param_map"], f"{path}.param_map")
            rng = po.get("range")
            if not (isinstance(rng, list) and len(rng) == 2):
                raise SceneIOError(f"{path}.param_map.range: expected [lo, hi], got {rng!r}")
            pmap = ParamMap(
                target=_str(po, "target", f"{path}.param_map"),
                source=_str(po, "source", f"{path}.param_map"),
                lo=float(rng[0]),
                hi=float(rng[1]),
            )
        materials.append(
            Material(
                id=_str(mo, "id", path),
                r_filter=_effect_spec(mo.get("r_filter"), f"{path}.r_filter"),
                t_filter=_effect_spec(mo.get("t_filter"), f"{path}.t_filter"),
                param_map=pmap,
            )
        )

    walls = []
    for i, wo in enumerate(_arr(doc, "walls", "document")):
        path = f"walls[{i}]"
        wo = _obj(wo, path)
        verts = []
        raw = _arr(wo, "vertices", path)
        for j, pt in enumerate(raw):
            if not (isinstance(pt, list) and len(pt) == 2):
                raise SceneIOError(f"{path}.vertices[{j}]: expected [x, y], got {pt!r}")
            x, y = pt
            if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in (x, y)):
                raise SceneIOError(f"{path}.vertices[{j}]: expected numbers, got {pt!r}")
            verts.append(Vec2(float(x), float(y)))
        walls.append(Wall(id=_str(wo, "id", path), material_id=_str(wo, "material_id", path),
                          vertices=tuple(verts)))

    assets_raw = doc.get("assets", {})
    if not isinstance(assets_raw, dict):
        raise SceneIOError(f"assets: expected an object, got {assets_raw!r}")
    for k, v in assets_raw.items():
        if not isinstance(v, str):
            raise SceneIOError(f"assets.{k}: expected a path string, got {v!r}")

    extras = {k: doc[k] for k in doc if k not in _KNOWN_TOP_LEVEL}

    return Scene(
        receptor=receptor,
        emitters=tuple(emitters),
        walls=tuple(walls),
        materials=tuple(materials),
        c=_num(doc, "c", "document", default=DEFAULT_C),
        d=_num(doc, "d", "document", default=DEFAULT_D),
        max_segment_length=_num(doc, "max_segment_length", "document", default=DEFAULT_MAX_SEGMENT_LENGTH),
        assets=dict(assets_raw),
        extras=extras,
    )


def scene_to_document(scene: Scene) -> dict[str, Any]:
    """Serializable document for a scene; extras merge back at top level."""
    doc: dict[str, Any] = dict(scene.extras)
    doc["format_version"] = FORMAT_VERSION
    doc["c"] = _q(scene.c)
    doc["d"] = _q(scene.d)
    doc["max_segment_length"] = _q(scene.max_segment_length)
    doc["receptor"] = {"x": _q(scene.receptor.pos.x), "y": _q(scene.receptor.pos.y)}
    doc["emitters"] = [
        {
            "id": e.id,
            "x": _q(e.pos.x),
            "y": _q(e.pos.y),
            "track": e.track,
            "gain": _q(e.gain),
            "loop": e.loop,
            "start_offset": _q(e.start_offset),
        }
        for e in scene.emitters
    ]
    doc["materials"] = []
    for m in scene.materials:
        mo: dict[str, Any] = {
            "id": m.id,
            "r_filter": {"kind": m.r_filter.kind,
                         "params": {k: _q(v) for k, v in m.r_filter.params.items()}},
            "t_filter": {"kind": m.t_filter.kind,
                         "params": {k: _q(v) for k, v in m.t_filter.params.items()}},
        }
        if m.param_map is not None:
            mo["param_map"] = {
                "target": m.param_map.target,
                "source": m.param_map.source,
                "range": [_q(m.param_map.lo), _q(m.param_map.hi)],
            }
        doc["materials"].append(mo)
    doc["walls"] = [
        {
            "id": w.id,
            "material_id": w.material_id,
            "vertices": [[_q(v.x), _q(v.y)] for v in w.vertices],
        }
        for w in scene.walls
    ]
    doc["assets"] = dict(scene.assets)
    return doc


def load_scene(path: str | FsPath) -> Scene:
    """Read and validate a scene file."""
    text = FsPath(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneIOError(f"parse failure: {exc}") from None
    try:
        return document_to_scene(doc)
    except SceneError as exc:
        # scene-model invariant messages already carry field paths
        raise SceneIOError(str(exc)) from None


def save_scene(scene: Scene, path: str | FsPath) -> None:
    doc = scene_to_document(scene)
    FsPath(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# WAV
# ---------------------------------------------------------------------------

_FMT_PCM = 1
_FMT_FLOAT = 3


class WavError(ValueError):
    pass


def load_wav(path: str | FsPath) -> tuple[np.ndarray, int]:
    """Mono float64 samples plus the file's native sample rate.

    PCM 16-bit scales by 1/32768; float 32-bit loads as-is (no clamping).
    Stereo is downmixed by channel average.
    """
    return parse_wav(FsPath(path).read_bytes(), str(path))


def parse_wav(raw: bytes, label: str = "<bytes>") -> tuple[np.ndarray, int]:
    """load_wav on an in-memory RIFF buffer; `label` names it in errors."""
    path = label
    if len(raw) < 12 or raw[0:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise WavError(f"{path}: not a RIFF/WAVE file")
    pos = 12
    fmt = None
    data = None
    while pos + 8 <= len(raw):
        cid, size = struct.unpack_from("<4sI", raw, pos)
        pos += 8
        body = raw[pos : pos + size]
        if cid == b"fmt ":
            fmt = body
        elif cid == b"data":
            data = body
        pos += size + (size & 1)  # chunks are word-aligned
    if fmt is None or len(fmt) < 16:
        raise WavError(f"{path}: missing fmt chunk")
    if data is None:
        raise WavError(f"{path}: missing data chunk")
    tag, channels, rate, _, _, bits = struct.unpack_from("<HHIIHH", fmt, 0)
    if channels not in (1, 2):
        raise WavError(f"{path}: unsupported channel count {channels} (expected 1 or 2)")
    if tag == _FMT_PCM and bits == 16:
        frames = np.frombuffer(data, dtype="<i2").astype(np.float64) / 32768.0
    elif tag == _FMT_FLOAT and bits == 32:
        frames = np.frombuffer(data, dtype="<f4").astype(np.float64)
    else:
        raise WavError(
            f"{path}: unsupported format tag {tag} at {bits}-bit "
            "(expected PCM 16-bit or IEEE float 32-bit)"
        )
    if channels == 2:
        frames = frames[: len(frames) // 2 * 2]
        frames = (frames[0::2] + frames[1::2]) / 2.0
    return frames, rate


def wav_bytes(samples: np.ndarray, rate: int) -> bytes:
    """Mono 32-bit float WAV as bytes; values are stored as-is, unclamped."""
    payload = np.asarray(samples, dtype="<f4").tobytes()
    n = len(payload) // 4
    out = bytearray()
    out += struct.pack("<4sI4s", b"RIFF", 36 + 12 + len(payload), b"WAVE")
    out += struct.pack("<4sIHHIIHH", b"fmt ", 16, _FMT_FLOAT, 1, rate, rate * 4, 4, 32)
    out += struct.pack("<4sII", b"fact", 4, n)
    out += struct.pack("<4sI", b"data", len(payload))
    out += payload
    return bytes(out)


def save_wav(samples: np.ndarray, path: str | FsPath, rate: int) -> None:
    FsPath(path).write_bytes(wav_bytes(samples, rate))


def resample_linear(samples: np.ndarray, src_rate: int, dst_rate: int) -> np.ndarray:
    """Linear-interpolation resample; identity when the rates match."""
    if src_rate == dst_rate or len(samples) == 0:
        return np.asarray(samples, dtype=np.float64)
    n_out = int(round(len(samples) * dst_rate / src_rate))
    positions = np.arange(n_out) * (src_rate / dst_rate)
    return np.interp(positions, np.arange(len(samples)), np.asarray(samples, dtype=np.float64))


def load_track(path: str | FsPath, rate: int) -> np.ndarray:
    samples, native = load_wav(path)
    return resample_linear(samples, native, rate)


def load_tracks(
    scene: Scene, base_dir: str | FsPath, rate: int, strict: bool = True
) -> dict[str, np.ndarray]:
    """Load every asset track referenced by the scene, keyed by track id.

    strict=True raises FileNotFoundError naming all missing files at once;
    strict=False skips them with a warning (the engine renders silence).
    """
    base = FsPath(base_dir)
    tracks: dict[str, np.ndarray] = {}
    missing: list[str] = []
    for track_id, rel in scene.assets.items():
        p = base / rel
        if not p.is_file():
            missing.append(str(p))
            continue
        tracks[track_id] = load_track(p, rate)
    if missing:
        if strict:
            raise FileNotFoundError("missing audio assets: " + ", ".join(sorted(missing)))
        log.warning("missing audio assets (rendering silence): %s", ", ".join(sorted(missing)))
    return tracks
