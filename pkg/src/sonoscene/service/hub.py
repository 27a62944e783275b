"""Session hub: one engine, many WebSocket clients.

The first connection is the editor; later ones are read-only and get
"read_only" errors for mutating messages. All mutations run on the event
loop (the single control context); the render thread only ever reads the
atomically published (scene, snapshot) pair.

Snapshot broadcasts are coalesced per client: a short debounce after the
first dirty mark, then at most one snapshot per 50 ms, latest revision wins.
Audio frames are fanned out through bounded per-client queues; a slow client
drops audio (counted in its stats) but never loses control messages.
"""

from __future__ import annotations

import asyncio
import itertools
import logging
from pathlib import Path

from pydantic import ValidationError
from starlette.websockets import WebSocket, WebSocketDisconnect

from ..engine import Engine, EngineConfig, RealtimeEngine
from ..scene import Scene, SceneError, mutate
from ..sceneio import document_to_scene, load_tracks, scene_to_document
from . import protocol as proto

log = logging.getLogger(__name__)

SNAPSHOT_DEBOUNCE_S = 0.02
SNAPSHOT_MIN_SPACING_S = 0.03  # debounce + spacing = 50 ms between sends
STATS_INTERVAL_S = 1.0
AUDIO_QUEUE_BLOCKS = 32


class ClientSession:
    _ids = itertools.count(1)

    def __init__(self, ws: WebSocket):
        self.id = next(self._ids)
        self.ws = ws
        self.editor = False
        self.last_client_seq: int | None = None
        self.server_seq = 0
        self.audio_queue: asyncio.Queue[bytes] = asyncio.Queue(maxsize=AUDIO_QUEUE_BLOCKS)
        self.audio_drops = 0
        self.dirty = asyncio.Event()
        self.send_lock = asyncio.Lock()
        self.tasks: list[asyncio.Task] = []

    def next_seq(self) -> int:
        self.server_seq += 1
        return self.server_seq

    async def send_model(self, model) -> None:
        async with self.send_lock:
            await self.ws.send_text(model.model_dump_json())


class SessionHub:
    def __init__(
        self,
        scene: Scene,
        config: EngineConfig = EngineConfig(),
        asset_dir: str | Path | None = None,
    ):
        self.config = config
        self.asset_dir = Path(asset_dir) if asset_dir is not None else None
        tracks = {}
        if self.asset_dir is not None and scene.assets:
            tracks = load_tracks(scene, self.asset_dir, config.sample_rate, strict=False)
        self.scene = scene
        self.engine = Engine(scene, tracks=tracks, config=config)
        self.clients: dict[int, ClientSession] = {}
        self.loop: asyncio.AbstractEventLoop | None = None
        self.realtime: RealtimeEngine | None = None

    # -- lifecycle -----------------------------------------------------------

    async def start(self) -> None:
        self.loop = asyncio.get_running_loop()
        self.realtime = RealtimeEngine(self.engine, sink=self._audio_sink, paced=True)
        self.realtime.start()

    async def stop(self) -> None:
        if self.realtime is not None:
            self.realtime.stop()
            self.realtime = None

    # -- audio fanout (called from the render thread) -------------------------

    def _audio_sink(self, block_index: int, block) -> None:
        if self.loop is None or not self.clients:
            return
        payload = proto.pack_audio_frame(block_index, block)
        self.loop.call_soon_threadsafe(self._fanout, payload)

    def _fanout(self, payload: bytes) -> None:
        for client in self.clients.values():
            try:
                client.audio_queue.put_nowait(payload)
            except asyncio.QueueFull:
                client.audio_drops += 1

    # -- per-client tasks ------------------------------------------------------

    async def _audio_sender(self, client: ClientSession) -> None:
        while True:
            payload = await client.audio_queue.get()
            async with client.send_lock:
                await client.ws.send_bytes(payload)

    async def _snapshot_sender(self, client: ClientSession) -> None:
        while True:
            await client.dirty.wait()
            await asyncio.sleep(SNAPSHOT_DEBOUNCE_S)  # coalesce bursts, latest wins
            client.dirty.clear()
            await client.send_model(
                proto.SnapshotMessage(
                    server_seq=client.next_seq(),
                    snapshot=proto.snapshot_to_model(self.engine.snapshot),
                )
            )
            await asyncio.sleep(SNAPSHOT_MIN_SPACING_S)

    async def _stats_sender(self, client: ClientSession) -> None:
        while True:
            await asyncio.sleep(STATS_INTERVAL_S)
            await client.send_model(self._stats_message(client))

    def _stats_message(self, client: ClientSession) -> proto.StatsMessage:
        stats = self.engine.stats
        return proto.StatsMessage(
            server_seq=client.next_seq(),
            blocks_rendered=stats.blocks_rendered,
            clipped_samples=stats.clipped_samples,
            realtime_factor=stats.realtime_factor(self.config),
            audio_frames_dropped=client.audio_drops,
            connected_clients=len(self.clients),
            transport=self._transport_model(),
        )

    def _transport_model(self) -> proto.TransportModel:
        t = self.engine.transport
        return proto.TransportModel(
            state="playing" if t.playing else "stopped", position=t.position
        )

    # -- connection handler ----------------------------------------------------

    async def handle(self, ws: WebSocket) -> None:
        await ws.accept()
        client = ClientSession(ws)
        client.editor = not any(c.editor for c in self.clients.values())
        self.clients[client.id] = client
        client.tasks = [
            asyncio.create_task(self._audio_sender(client)),
            asyncio.create_task(self._snapshot_sender(client)),
            asyncio.create_task(self._stats_sender(client)),
        ]
        try:
            while True:
                frame = await ws.receive()
                if frame["type"] == "websocket.disconnect":
                    break
                if frame.get("bytes") is not None:
                    await self._send_error(client, None, "unexpected binary frame")
                    continue
                await self._handle_text(client, frame.get("text") or "")
        except WebSocketDisconnect:
            pass
        finally:
            for task in client.tasks:
                task.cancel()
            del self.clients[client.id]
            if client.editor:
                # promote the oldest remaining connection
                for other in sorted(self.clients.values(), key=lambda c: c.id):
                    other.editor = True
                    try:
                        await self._send_scene_state(other)
                    except Exception:  # noqa: BLE001 - peer may be mid-disconnect
                        pass
                    break

    async def _send_error(self, client: ClientSession, client_seq: int | None, reason: str) -> None:
        await client.send_model(
            proto.ErrorMessage(server_seq=client.next_seq(), client_seq=client_seq, reason=reason)
        )

    async def _send_ack(self, client: ClientSession, client_seq: int) -> None:
        await client.send_model(
            proto.AckMessage(server_seq=client.next_seq(), client_seq=client_seq)
        )

    async def _send_scene_state(self, client: ClientSession) -> None:
        await client.send_model(
            proto.SceneStateMessage(
                server_seq=client.next_seq(),
                document=scene_to_document(self.scene),
                revision=self.scene.revision,
                read_only=not client.editor,
                transport=self._transport_model(),
            )
        )

    async def _handle_text(self, client: ClientSession, text: str) -> None:
        try:
            msg = proto.parse_control(text)
        except ValidationError as exc:
            await self._send_error(client, None, f"malformed message: {exc.errors()[0]['msg']}")
            return

        if client.last_client_seq is not None and msg.client_seq <= client.last_client_seq:
            await self._send_error(
                client, msg.client_seq,
                f"client_seq must increase (last was {client.last_client_seq})",
            )
            return
        client.last_client_seq = msg.client_seq

        if isinstance(msg, proto.HelloMessage):
            await self._send_ack(client, msg.client_seq)
            await self._send_scene_state(client)
            client.dirty.set()
            return

        if isinstance(msg, proto.PingMessage):
            await self._send_ack(client, msg.client_seq)
            return

        # everything below mutates shared state
        if not client.editor:
            await self._send_error(client, msg.client_seq, "read_only")
            return

        if isinstance(msg, proto.SetTransportMessage):
            self.engine.set_transport(msg.state == "playing", msg.position)
            await self._send_ack(client, msg.client_seq)
            return

        if isinstance(msg, proto.LoadSceneMessage):
            try:
                scene = document_to_scene(msg.document)
            except ValueError as exc:
                await self._send_error(client, msg.client_seq, str(exc))
                return
            tracks = None
            if self.asset_dir is not None:
                tracks = load_tracks(scene, self.asset_dir, self.config.sample_rate, strict=False)
            self.scene = scene
            self.engine.publish(scene, tracks=tracks)
            await self._send_ack(client, msg.client_seq)
            await self._broadcast_scene_state()
            self._mark_all_dirty()
            return

        if isinstance(msg, (proto.MutateMessage, proto.SetConstantsMessage)):
            if isinstance(msg, proto.SetConstantsMessage):
                mutations = [proto.SetConstantsOp(
                    op="set_constants", c=msg.c, d=msg.d,
                    max_segment_length=msg.max_segment_length,
                ).to_mutation()]
            else:
                mutations = [op.to_mutation() for op in msg.ops]
            scene = self.scene
            try:
                for m in mutations:
                    scene = mutate(scene, m)
            except SceneError as exc:
                # relay the library's reason string untouched
                await self._send_error(client, msg.client_seq, str(exc))
                return
            self.scene = scene
            self.engine.publish(scene)
            await self._send_ack(client, msg.client_seq)
            self._mark_all_dirty()
            return

        await self._send_error(client, msg.client_seq, f"unhandled message type {msg.type!r}")

    async def _broadcast_scene_state(self) -> None:
        for client in list(self.clients.values()):
            await self._send_scene_state(client)

    def _mark_all_dirty(self) -> None:
        for client in self.clients.values():
            client.dirty.set()
