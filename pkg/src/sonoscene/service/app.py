"""HTTP/WebSocket application: live session plus stateless batch endpoints.

The WebSocket at /ws speaks the control protocol against one shared session.
/api/render and /api/mixes are stateless: the request carries the whole scene
document (plus base64 WAV assets), so thin clients can render without any
server-side files.
"""

from __future__ import annotations

import base64
import io
import csv
import math
import time
from contextlib import asynccontextmanager
from pathlib import Path
from typing import Any

from fastapi import FastAPI, WebSocket
from fastapi.responses import JSONResponse, PlainTextResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from ..effects import EffectSpec
from ..engine import EngineConfig, EngineStats, ScriptEvent, render_offline
from ..geometry import Vec2
from ..params import parameterize
from ..scene import Material, Receptor, Scene, SceneError, SetConstants, mutate
from ..sceneio import (
    SceneIOError,
    WavError,
    document_to_scene,
    parse_wav,
    resample_linear,
    scene_to_document,
)
from ..sceneio import wav_bytes as to_wav_bytes
from .hub import SessionHub
from .protocol import MutationOp

DEFAULT_PORT = 8765

MIXES_HEADER = "block,emitter_id,dMix,rMix,tMix,material_id,m_rMix,m_tMix,rTotal,tTotal"


def default_scene() -> Scene:
    """Empty room: just a receptor and one material to draw walls with."""
    return Scene(
        receptor=Receptor(Vec2(0.0, 0.0)),
        materials=(
            Material(
                "m1",
                r_filter=EffectSpec("Gain", {"g": 1.0}),
                t_filter=EffectSpec("LowPass", {"cutoff": 1000.0}),
            ),
        ),
    )


class ScriptEntry(BaseModel):
    time: float
    mutation: MutationOp


class RenderRequest(BaseModel):
    document: dict[str, Any]
    duration: float = Field(gt=0)
    script: list[ScriptEntry] = Field(default_factory=list)
    assets: dict[str, str] = Field(default_factory=dict)  # track id -> base64 WAV
    block_size: int = Field(default=512, ge=16, le=65536)
    sample_rate: int = Field(default=44100, ge=8000, le=192000)
    length_weighted: bool = False
    c: float | None = None
    d: float | None = None


class MixesRequest(BaseModel):
    document: dict[str, Any]
    duration: float | None = Field(default=None, gt=0)
    script: list[ScriptEntry] = Field(default_factory=list)
    emitter_id: str | None = None
    block_size: int = Field(default=512, ge=16, le=65536)
    sample_rate: int = Field(default=44100, ge=8000, le=192000)
    length_weighted: bool = False
    c: float | None = None
    d: float | None = None


def _request_scene(document: dict[str, Any], c: float | None, d: float | None) -> Scene:
    scene = document_to_scene(document)
    if c is not None or d is not None:
        scene = mutate(scene, SetConstants(c=c, d=d))
    return scene


def _script_events(entries: list[ScriptEntry]) -> list[ScriptEvent]:
    def make(entry: ScriptEntry) -> ScriptEvent:
        m = entry.mutation.to_mutation()
        return ScriptEvent(time=entry.time, apply=lambda s: mutate(s, m))

    return [make(e) for e in entries]


def _decode_assets(scene: Scene, assets: dict[str, str], rate: int) -> dict[str, Any]:
    tracks = {}
    for track_id, b64 in assets.items():
        try:
            samples, native = parse_wav(base64.b64decode(b64), label=track_id)
        except WavError as exc:
            raise SceneIOError(str(exc)) from None
        tracks[track_id] = resample_linear(samples, native, rate)
    referenced = {e.track for e in scene.emitters if e.track}
    missing = sorted(t for t in referenced if t not in tracks and t in scene.assets)
    if missing:
        raise SceneIOError("missing audio assets: " + ", ".join(missing))
    return tracks


def _mixes_csv(req: MixesRequest) -> str:
    scene = _request_scene(req.document, req.c, req.d)
    if req.emitter_id is not None:
        scene.emitter(req.emitter_id)  # raises "unknown id"
    config = EngineConfig(block_size=req.block_size, sample_rate=req.sample_rate,
                          length_weighted=req.length_weighted)
    events = sorted(_script_events(req.script), key=lambda ev: ev.time)
    if req.duration is not None:
        blocks = math.ceil(req.duration * config.sample_rate / config.block_size)
    elif events:
        last = int(events[-1].time * config.sample_rate) // config.block_size
        blocks = last + 2  # include one block after the final event
    else:
        blocks = 1
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(MIXES_HEADER.split(","))
    ev_i = 0
    current = scene
    snap = parameterize(current, config.length_weighted)
    for b in range(blocks):
        changed = False
        while ev_i < len(events) and int(events[ev_i].time * config.sample_rate) // config.block_size <= b:
            current = events[ev_i].apply(current)
            changed = True
            ev_i += 1
        if changed:
            snap = parameterize(current, config.length_weighted)
        for em in snap.per_emitter:
            if req.emitter_id is not None and em.emitter_id != req.emitter_id:
                continue
            base = [b, em.emitter_id, repr(em.d_mix), repr(em.r_mix), repr(em.t_mix)]
            tail = [repr(em.r_total), repr(em.t_total)]
            if em.material_mixes:
                for mm in em.material_mixes:
                    writer.writerow(base + [mm.material_id, repr(mm.r_mix), repr(mm.t_mix)] + tail)
            else:
                writer.writerow(base + ["", "", ""] + tail)
    return buf.getvalue()


def create_app(
    scene: Scene | None = None,
    scene_path: str | Path | None = None,
    config: EngineConfig = EngineConfig(),
    static_dir: str | Path | None = None,
) -> FastAPI:
    from ..sceneio import load_scene  # local import keeps module load light

    asset_dir: Path | None = None
    if scene_path is not None:
        scene = load_scene(scene_path)
        asset_dir = Path(scene_path).resolve().parent
    if scene is None:
        scene = default_scene()

    hub = SessionHub(scene, config=config, asset_dir=asset_dir)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        await hub.start()
        try:
            yield
        finally:
            await hub.stop()

    app = FastAPI(title="sonoscene", lifespan=lifespan)
    app.state.hub = hub

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await hub.handle(ws)

    @app.get("/api/health")
    def health():
        return {
            "status": "ok",
            "revision": hub.scene.revision,
            "clients": len(hub.clients),
            "blocks_rendered": hub.engine.stats.blocks_rendered,
        }

    @app.get("/api/scene")
    def get_scene():
        return JSONResponse(scene_to_document(hub.scene))

    @app.post("/api/render")
    def render(req: RenderRequest):
        try:
            req_scene = _request_scene(req.document, req.c, req.d)
            cfg = EngineConfig(block_size=req.block_size, sample_rate=req.sample_rate,
                               length_weighted=req.length_weighted)
            tracks = _decode_assets(req_scene, req.assets, cfg.sample_rate)
            stats = EngineStats()
            t0 = time.perf_counter()
            samples = render_offline(
                req_scene, req.duration, tracks=tracks, config=cfg,
                script=_script_events(req.script), out_stats=stats,
            )
            elapsed_ms = (time.perf_counter() - t0) * 1000.0
        except (SceneIOError, SceneError, ValueError) as exc:
            return JSONResponse({"detail": str(exc)}, status_code=400)
        return Response(
            content=to_wav_bytes(samples, cfg.sample_rate),
            media_type="audio/wav",
            headers={
                "X-Clip-Count": str(stats.clipped_samples),
                "X-Render-Ms": f"{elapsed_ms:.3f}",
                "X-Realtime-Factor": f"{stats.realtime_factor(cfg):.6f}",
            },
        )

    @app.post("/api/mixes")
    def mixes(req: MixesRequest):
        try:
            body = _mixes_csv(req)
        except (SceneIOError, SceneError, ValueError) as exc:
            return JSONResponse({"detail": str(exc)}, status_code=400)
        return PlainTextResponse(body, media_type="text/csv")

    if static_dir is None:
        candidate = Path(__file__).resolve().parents[3] / "frontend" / "dist"
        if candidate.is_dir():
            static_dir = candidate
    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
