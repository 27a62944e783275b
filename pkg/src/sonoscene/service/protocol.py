"""Wire protocol: JSON control/server messages and binary audio framing.

One WebSocket carries everything. Text frames are JSON control messages
(client -> server) or server messages (server -> client); binary frames are
audio: a 4-byte little-endian unsigned frame sequence, a 4-byte little-endian
unsigned sample count, then count IEEE-754 float32 little-endian samples.
"""

from __future__ import annotations

import struct
from typing import Annotated, Any, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter

from .. import scene as sm
from ..params import ParamSnapshot

AUDIO_HEADER = struct.Struct("<II")


# ---------------------------------------------------------------------------
# Mutation ops
# ---------------------------------------------------------------------------


class _Op(BaseModel):
    model_config = ConfigDict(extra="forbid")


class MoveEmitterOp(_Op):
    op: Literal["move_emitter"]
    id: str
    x: float
    y: float

    def to_mutation(self) -> sm.SceneMutation:
        return sm.MoveEmitter(self.id, self.x, self.y)


class MoveReceptorOp(_Op):
    op: Literal["move_receptor"]
    x: float
    y: float

    def to_mutation(self) -> sm.SceneMutation:
        return sm.MoveReceptor(self.x, self.y)


class AddEmitterOp(_Op):
    op: Literal["add_emitter"]
    x: float
    y: float
    track: str = ""
    gain: float = 1.0
    loop: bool = True
    start_offset: float = 0.0
    id: str | None = None

    def to_mutation(self) -> sm.SceneMutation:
        return sm.AddEmitter(self.x, self.y, self.track, self.gain, self.loop,
                             self.start_offset, self.id)


class RemoveEmitterOp(_Op):
    op: Literal["remove_emitter"]
    id: str

    def to_mutation(self) -> sm.SceneMutation:
        return sm.RemoveEmitter(self.id)


class SetEmitterOp(_Op):
    op: Literal["set_emitter"]
    id: str
    gain: float | None = None
    track: str | None = None
    loop: bool | None = None
    start_offset: float | None = None

    def to_mutation(self) -> sm.SceneMutation:
        return sm.SetEmitter(self.id, self.gain, self.track, self.loop, self.start_offset)


class AddWallOp(_Op):
    op: Literal["add_wall"]
    vertices: list[tuple[float, float]]
    material_id: str
    id: str | None = None

    def to_mutation(self) -> sm.SceneMutation:
        return sm.AddWall(tuple(self.vertices), self.material_id, self.id)


class RemoveWallOp(_Op):
    op: Literal["remove_wall"]
    id: str

    def to_mutation(self) -> sm.SceneMutation:
        return sm.RemoveWall(self.id)


class MoveWallOp(_Op):
    op: Literal["move_wall"]
    id: str
    dx: float
    dy: float

    def to_mutation(self) -> sm.SceneMutation:
        return sm.MoveWall(self.id, self.dx, self.dy)


class SetWallMaterialOp(_Op):
    op: Literal["set_wall_material"]
    id: str
    material_id: str

    def to_mutation(self) -> sm.SceneMutation:
        return sm.SetWallMaterial(self.id, self.material_id)


class SetConstantsOp(_Op):
    op: Literal["set_constants"]
    c: float | None = None
    d: float | None = None
    max_segment_length: float | None = None

    def to_mutation(self) -> sm.SceneMutation:
        return sm.SetConstants(self.c, self.d, self.max_segment_length)


MutationOp = Annotated[
    Union[
        MoveEmitterOp, MoveReceptorOp, AddEmitterOp, RemoveEmitterOp, SetEmitterOp,
        AddWallOp, RemoveWallOp, MoveWallOp, SetWallMaterialOp, SetConstantsOp,
    ],
    Field(discriminator="op"),
]


# ---------------------------------------------------------------------------
# Control messages (client -> server)
# ---------------------------------------------------------------------------


class _Control(BaseModel):
    model_config = ConfigDict(extra="forbid")
    client_seq: int


class HelloMessage(_Control):
    type: Literal["hello"]
    name: str = ""


class LoadSceneMessage(_Control):
    type: Literal["load_scene"]
    document: dict[str, Any]


class MutateMessage(_Control):
    type: Literal["mutate"]
    ops: list[MutationOp] = Field(min_length=1)


class SetTransportMessage(_Control):
    type: Literal["set_transport"]
    state: Literal["playing", "stopped"]
    position: int | None = None


class SetConstantsMessage(_Control):
    type: Literal["set_constants"]
    c: float | None = None
    d: float | None = None
    max_segment_length: float | None = None


class PingMessage(_Control):
    type: Literal["ping"]


ControlMessage = Annotated[
    Union[
        HelloMessage, LoadSceneMessage, MutateMessage,
        SetTransportMessage, SetConstantsMessage, PingMessage,
    ],
    Field(discriminator="type"),
]

CONTROL_ADAPTER: TypeAdapter = TypeAdapter(ControlMessage)


def parse_control(text: str | bytes) -> HelloMessage | LoadSceneMessage | MutateMessage | SetTransportMessage | SetConstantsMessage | PingMessage:
    """Parse one control frame; raises pydantic.ValidationError when malformed."""
    return CONTROL_ADAPTER.validate_json(text)


# ---------------------------------------------------------------------------
# Server messages (server -> client)
# ---------------------------------------------------------------------------


class MaterialMixModel(BaseModel):
    material_id: str
    r_mix: float
    t_mix: float


class EmitterMixModel(BaseModel):
    emitter_id: str
    d_mix: float
    r_mix: float
    t_mix: float
    r_total: float
    t_total: float
    materials: list[MaterialMixModel]


class SnapshotModel(BaseModel):
    revision: int
    per_emitter: list[EmitterMixModel]


class TransportModel(BaseModel):
    state: Literal["playing", "stopped"]
    position: int


class AckMessage(BaseModel):
    type: Literal["ack"] = "ack"
    server_seq: int
    client_seq: int


class ErrorMessage(BaseModel):
    type: Literal["error"] = "error"
    server_seq: int
    client_seq: int | None = None
    reason: str


class SnapshotMessage(BaseModel):
    type: Literal["snapshot"] = "snapshot"
    server_seq: int
    snapshot: SnapshotModel


class SceneStateMessage(BaseModel):
    type: Literal["scene_state"] = "scene_state"
    server_seq: int
    document: dict[str, Any]
    revision: int
    read_only: bool
    transport: TransportModel


class StatsMessage(BaseModel):
    type: Literal["stats"] = "stats"
    server_seq: int
    blocks_rendered: int
    clipped_samples: int
    realtime_factor: float
    audio_frames_dropped: int
    connected_clients: int
    transport: TransportModel


ServerMessage = Annotated[
    Union[AckMessage, ErrorMessage, SnapshotMessage, SceneStateMessage, StatsMessage],
    Field(discriminator="type"),
]

SERVER_ADAPTER: TypeAdapter = TypeAdapter(ServerMessage)


def parse_server(text: str | bytes):
    """Parse one server frame (client side); raises ValidationError when malformed."""
    return SERVER_ADAPTER.validate_json(text)


def snapshot_to_model(snap: ParamSnapshot) -> SnapshotModel:
    return SnapshotModel(
        revision=snap.revision,
        per_emitter=[
            EmitterMixModel(
                emitter_id=em.emitter_id,
                d_mix=em.d_mix,
                r_mix=em.r_mix,
                t_mix=em.t_mix,
                r_total=em.r_total,
                t_total=em.t_total,
                materials=[
                    MaterialMixModel(material_id=mm.material_id, r_mix=mm.r_mix, t_mix=mm.t_mix)
                    for mm in em.material_mixes
                ],
            )
            for em in snap.per_emitter
        ],
    )


# ---------------------------------------------------------------------------
# Binary audio framing
# ---------------------------------------------------------------------------


def pack_audio_frame(seq: int, samples: np.ndarray) -> bytes:
    """8-byte header + count float32 samples, all little-endian."""
    payload = np.asarray(samples, dtype="<f4").tobytes()
    return AUDIO_HEADER.pack(seq & 0xFFFFFFFF, len(payload) // 4) + payload


def unpack_audio_frame(data: bytes) -> tuple[int, np.ndarray]:
    if len(data) < AUDIO_HEADER.size:
        raise ValueError(f"audio frame too short: {len(data)} bytes")
    seq, count = AUDIO_HEADER.unpack_from(data, 0)
    expected = AUDIO_HEADER.size + 4 * count
    if len(data) != expected:
        raise ValueError(f"audio frame size mismatch: {len(data)} != {expected}")
    samples = np.frombuffer(data, dtype="<f4", offset=AUDIO_HEADER.size)
    return seq, samples
