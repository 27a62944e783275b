"""Pure 2D geometric kernel: distances, angles and side tests against barriers.

All functions are stateless and safe to call from any thread. A "barrier"
here is anything with ``p0``, ``p1`` and ``midpoint`` attributes holding
:class:`Vec2` endpoints (see ``sonoscene.scene.Barrier``).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

# Lower clamp on node distances: keeps 1/dist bounded (max 10) when a node
# sits on top of a barrier midpoint or the receptor.
EPS_DIST = 0.1

# Perpendicular distance below which a node counts as colinear with a
# barrier's line. Colinear nodes contribute zero intensity.
EPS_SIDE = 1e-9


@dataclass(frozen=True)
class Vec2:
    """A 2D point/vector in world units. Coordinates must be finite."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"coordinates must be finite, got ({self.x}, {self.y})")

    def __add__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x - other.x, self.y - other.y)

    def __mul__(self, k: float) -> "Vec2":
        return Vec2(self.x * k, self.y * k)

    __rmul__ = __mul__

    def norm(self) -> float:
        return math.hypot(self.x, self.y)


class Side(enum.IntEnum):
    """Which half-plane of a barrier's infinite line a node lies in."""

    NEGATIVE = -1
    COLINEAR = 0
    POSITIVE = 1


def node_dist(a: Vec2, b: Vec2) -> float:
    """Euclidean distance between two nodes, clamped below at EPS_DIST."""
    return max(math.hypot(a.x - b.x, a.y - b.y), EPS_DIST)


def dist(b, n: Vec2) -> float:
    """Distance from the barrier's midpoint to node ``n`` (EPS_DIST clamp)."""
    return node_dist(b.midpoint, n)


def angle(b, n: Vec2) -> float:
    """Acute angle in [0, pi/2] between the barrier's line and midpoint->n.

    Only |sin(angle)| is consumed downstream, so orientation is irrelevant
    and the angle is folded into the first quadrant. A node coincident with
    the midpoint returns pi/2 (maximum effect).
    """
    m = b.midpoint
    vx, vy = n.x - m.x, n.y - m.y
    if vx == 0.0 and vy == 0.0:
        return math.pi / 2
    ux, uy = b.p1.x - b.p0.x, b.p1.y - b.p0.y
    cross = abs(ux * vy - uy * vx)
    dot = abs(ux * vx + uy * vy)
    return math.atan2(cross, dot)


def side(b, n: Vec2) -> Side:
    """Classify node ``n`` against the barrier's oriented line.

    Sign of the cross product (p1-p0) x (n-p0); COLINEAR when the
    perpendicular distance is within EPS_SIDE.
    """
    ex, ey = b.p1.x - b.p0.x, b.p1.y - b.p0.y
    cross = ex * (n.y - b.p0.y) - ey * (n.x - b.p0.x)
    if abs(cross) <= EPS_SIDE * math.hypot(ex, ey):
        return Side.COLINEAR
    return Side.POSITIVE if cross > 0.0 else Side.NEGATIVE
