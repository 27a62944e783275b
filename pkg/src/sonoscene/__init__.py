"""2D spatial audio engine: emitters and a receptor in a room of walls.

Walls tessellate into barriers whose distances and incidence angles drive
per-material reflection/transmission mixes; a block renderer turns those
mixes plus per-material effects into the receptor's mono signal.
"""

from .geometry import EPS_DIST, EPS_SIDE, Side, Vec2
from .scene import (
    AddEmitter,
    AddWall,
    Barrier,
    Emitter,
    Material,
    MoveEmitter,
    MoveReceptor,
    MoveWall,
    Receptor,
    RemoveEmitter,
    RemoveWall,
    Scene,
    SceneError,
    SceneMutation,
    SetConstants,
    SetEmitter,
    SetWallMaterial,
    Wall,
    mutate,
    tessellate,
)
from .effects import EffectSpec, ParamMap
from .params import (
    BarrierIntensity,
    EmitterMix,
    MaterialMix,
    ParamSnapshot,
    Path,
    parameterize,
)
from .engine import Engine, EngineConfig, RealtimeEngine, render_offline
from .sceneio import load_scene, load_wav, save_scene, save_wav

__version__ = "0.1.0"

__all__ = [
    "EPS_DIST", "EPS_SIDE", "Side", "Vec2",
    "AddEmitter", "AddWall", "Barrier", "Emitter", "Material", "MoveEmitter",
    "MoveReceptor", "MoveWall", "Receptor", "RemoveEmitter", "RemoveWall",
    "Scene", "SceneError", "SceneMutation", "SetConstants", "SetEmitter",
    "SetWallMaterial", "Wall", "mutate", "tessellate",
    "EffectSpec", "ParamMap",
    "BarrierIntensity", "EmitterMix", "MaterialMix", "ParamSnapshot", "Path",
    "parameterize",
    "Engine", "EngineConfig", "RealtimeEngine", "render_offline",
    "load_scene", "load_wav", "save_scene", "save_wav",
    "__version__",
]
