"""Command line entry points: offline render, mix analysis, service launcher.

render and mixes are thin clients of the HTTP API. By default they drive the
app in-process (no network, no server needed); --server points them at a
running instance instead. Scene assets are read client-side and inlined into
the request, so the server never needs local files.
"""

from __future__ import annotations

import asyncio
import base64
import csv
import json
import sys
from pathlib import Path

import click
import httpx

from .engine import DEFAULT_BLOCK_SIZE, DEFAULT_SAMPLE_RATE, EngineConfig
from .sceneio import document_to_scene, save_scene
from .service.app import DEFAULT_PORT, create_app


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _load_document(scene_path: str) -> tuple[dict, "object"]:
    """Raw document plus the validated scene it describes."""
    try:
        doc = json.loads(Path(scene_path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        _fail(f"scene file not found: {scene_path}")
    except json.JSONDecodeError as exc:
        _fail(f"parse failure in {scene_path}: {exc}")
    try:
        scene = document_to_scene(doc)
    except ValueError as exc:
        _fail(str(exc))
    return doc, scene


def _read_script(script_path: str | None) -> list[dict]:
    """Parse a `time,op,args...` CSV into wire-format script entries."""
    if script_path is None:
        return []
    entries: list[dict] = []
    last_time = None
    try:
        rows = list(csv.reader(Path(script_path).read_text(encoding="utf-8").splitlines()))
    except FileNotFoundError:
        _fail(f"script file not found: {script_path}")
    for lineno, row in enumerate(rows, start=1):
        if not row or row[0].strip().startswith("#"):
            continue
        try:
            t = float(row[0])
        except ValueError:
            _fail(f"{script_path}:{lineno}: bad time {row[0]!r}")
        if last_time is not None and t < last_time:
            _fail(f"{script_path}:{lineno}: times must be non-decreasing")
        last_time = t
        op = row[1].strip() if len(row) > 1 else ""
        args = [a.strip() for a in row[2:]]
        try:
            if op == "move_emitter":
                mutation = {"op": "move_emitter", "id": args[0],
                            "x": float(args[1]), "y": float(args[2])}
            elif op == "move_receptor":
                mutation = {"op": "move_receptor", "x": float(args[0]), "y": float(args[1])}
            elif op == "set_constant":
                if args[0] not in ("c", "d"):
                    _fail(f"{script_path}:{lineno}: set_constant expects c or d, got {args[0]!r}")
                mutation = {"op": "set_constants", args[0]: float(args[1])}
            else:
                _fail(f"{script_path}:{lineno}: unknown op {op!r}")
        except (IndexError, ValueError):
            _fail(f"{script_path}:{lineno}: bad arguments for {op}: {row[2:]}")
        entries.append({"time": t, "mutation": mutation})
    return entries


def _inline_assets(scene, scene_path: str) -> dict[str, str]:
    base = Path(scene_path).resolve().parent
    referenced = {e.track for e in scene.emitters if e.track}
    assets: dict[str, str] = {}
    for track_id, rel in scene.assets.items():
        if track_id not in referenced:
            continue
        p = base / rel
        if not p.is_file():
            _fail(f"missing asset: {p}")
        assets[track_id] = base64.b64encode(p.read_bytes()).decode("ascii")
    return assets


def _post(server: str | None, path: str, payload: dict) -> httpx.Response:
    if server is not None:
        with httpx.Client(base_url=server, timeout=600.0) as client:
            return client.post(path, json=payload)

    async def run() -> httpx.Response:
        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(transport=transport, base_url="http://engine",
                                     timeout=600.0) as client:
            return await client.post(path, json=payload)

    return asyncio.run(run())


def _common_payload(doc, script, block_size, sample_rate, length_weighted, c, d) -> dict:
    payload = {
        "document": doc,
        "script": script,
        "block_size": block_size,
        "sample_rate": sample_rate,
        "length_weighted": length_weighted,
    }
    if c is not None:
        payload["c"] = c
    if d is not None:
        payload["d"] = d
    return payload


@click.group()
def main() -> None:
    """Spatial audio scenes: render offline, dump mixes, or serve live."""


@main.command()
@click.argument("scene_path", type=click.Path())
@click.option("-o", "--out", "out_path", required=True, type=click.Path(), help="Output WAV path.")
@click.option("-d", "--duration", required=True, type=float, help="Seconds to render.")
@click.option("--script", "script_path", type=click.Path(), default=None,
              help="CSV of scheduled scene changes (time,op,args...).")
@click.option("--block-size", default=DEFAULT_BLOCK_SIZE, show_default=True, type=int)
@click.option("--sample-rate", default=DEFAULT_SAMPLE_RATE, show_default=True, type=int)
@click.option("--length-weighted", is_flag=True, default=False,
              help="Weight barrier intensities by segment length.")
@click.option("--c", "c_", type=float, default=None, help="Override the scene's c constant.")
@click.option("--d", "d_", type=float, default=None, help="Override the scene's d constant.")
@click.option("--server", default=None, help="Use a running server instead of in-process.")
def render(scene_path, out_path, duration, script_path, block_size, sample_rate,
           length_weighted, c_, d_, server):
    """Render SCENE_PATH to a WAV file."""
    if duration <= 0:
        _fail("duration must be > 0")
    doc, scene = _load_document(scene_path)
    payload = _common_payload(doc, _read_script(script_path), block_size, sample_rate,
                              length_weighted, c_, d_)
    payload["duration"] = duration
    payload["assets"] = _inline_assets(scene, scene_path)
    resp = _post(server, "/api/render", payload)
    if resp.status_code != 200:
        _fail(resp.json().get("detail", resp.text))
    Path(out_path).write_bytes(resp.content)
    click.echo(
        f"wrote {out_path}: {len(resp.content)} bytes, "
        f"clipped samples {resp.headers.get('x-clip-count', '?')}, "
        f"render {resp.headers.get('x-render-ms', '?')} ms "
        f"({resp.headers.get('x-realtime-factor', '?')}x realtime)"
    )


@main.command()
@click.argument("scene_path", type=click.Path())
@click.option("--emitter", "emitter_id", default=None, help="Limit rows to one emitter.")
@click.option("-d", "--duration", type=float, default=None,
              help="Seconds of blocks to dump (default: one block, or the script's span).")
@click.option("--script", "script_path", type=click.Path(), default=None)
@click.option("--block-size", default=DEFAULT_BLOCK_SIZE, show_default=True, type=int)
@click.option("--sample-rate", default=DEFAULT_SAMPLE_RATE, show_default=True, type=int)
@click.option("--length-weighted", is_flag=True, default=False)
@click.option("--c", "c_", type=float, default=None)
@click.option("--d", "d_", type=float, default=None)
@click.option("--server", default=None)
def mixes(scene_path, emitter_id, duration, script_path, block_size, sample_rate,
          length_weighted, c_, d_, server):
    """Dump per-block mix parameters for SCENE_PATH as CSV on stdout."""
    doc, _ = _load_document(scene_path)
    payload = _common_payload(doc, _read_script(script_path), block_size, sample_rate,
                              length_weighted, c_, d_)
    if duration is not None:
        payload["duration"] = duration
    if emitter_id is not None:
        payload["emitter_id"] = emitter_id
    resp = _post(server, "/api/mixes", payload)
    if resp.status_code != 200:
        _fail(resp.json().get("detail", resp.text))
    click.echo(resp.text, nl=False)


@main.command()
@click.argument("scene_path", type=click.Path(), required=False)
@click.option("-p", "--port", default=DEFAULT_PORT, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--block-size", default=DEFAULT_BLOCK_SIZE, show_default=True, type=int)
@click.option("--sample-rate", default=DEFAULT_SAMPLE_RATE, show_default=True, type=int)
@click.option("--length-weighted", is_flag=True, default=False)
def serve(scene_path, port, host, block_size, sample_rate, length_weighted):
    """Serve the live editing session (WebSocket + UI) until interrupted."""
    import uvicorn

    config = EngineConfig(block_size=block_size, sample_rate=sample_rate,
                          length_weighted=length_weighted)
    try:
        app = create_app(scene_path=scene_path, config=config)
    except (ValueError, FileNotFoundError) as exc:
        _fail(str(exc))
    try:
        uvicorn.run(app, host=host, port=port, log_level="info")
    except SystemExit:
        _fail(f"could not serve on {host}:{port}")
    except OSError as exc:
        _fail(f"could not serve on {host}:{port}: {exc}")
    finally:
        if scene_path is not None:
            autosave = Path(f"{scene_path}.autosave")
            try:
                save_scene(app.state.hub.scene, autosave)
                click.echo(f"scene autosaved to {autosave}")
            except OSError as exc:
                click.echo(f"autosave failed: {exc}", err=True)


if __name__ == "__main__":
    main()
