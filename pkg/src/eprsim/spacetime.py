"""Events, boosts along x and worldlines in 2+1 Minkowski space (c = 1).

Positive ``beta`` is a frame moving toward +x (photon 2's side); photon 1
travels toward -x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .exceptions import InvalidBoostError, InvalidGeometryError

LIGHTLIKE_TOLERANCE = 1e-9
SIMULTANEITY_TOLERANCE = 1e-12
WORLDLINE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Event:
    label: str
    t: float
    x: float
    y: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.t, self.x, self.y)):
            raise InvalidGeometryError(f"event {self.label!r} has non-finite coordinates")

    def relabel(self, label: str) -> Event:
        return Event(label, self.t, self.x, self.y)


class IntervalKind(str, Enum):
    TIMELIKE = "timelike"
    SPACELIKE = "spacelike"
    LIGHTLIKE = "lightlike"


@dataclass(frozen=True)
class IntervalClass:
    kind: IntervalKind
    s_squared: float


class Order(str, Enum):
    E1_FIRST = "e1_first"
    E2_FIRST = "e2_first"
    SIMULTANEOUS = "simultaneous"


def lorentz_factor(beta: float) -> float:
    if not abs(beta) < 1.0:
        raise InvalidBoostError(f"|beta| must be < 1, got {beta!r}")
    return 1.0 / math.sqrt(1.0 - beta * beta)


def boosted_time(e: Event, beta: float) -> float:
    return lorentz_factor(beta) * (e.t - beta * e.x)


def boost_event(e: Event, beta: float) -> Event:
    """Coordinates of ``e`` seen from a frame moving with velocity ``beta`` along x."""
    g = lorentz_factor(beta)
    return Event(e.label, g * (e.t - beta * e.x), g * (e.x - beta * e.t), e.y)


def compose_velocities(beta1: float, beta2: float) -> float:
    return (beta1 + beta2) / (1.0 + beta1 * beta2)


def interval(e1: Event, e2: Event) -> IntervalClass:
    dt = e2.t - e1.t
    dr2 = (e2.x - e1.x) ** 2 + (e2.y - e1.y) ** 2
    s2 = dt * dt - dr2
    tol = LIGHTLIKE_TOLERANCE * max(1.0, dt * dt, dr2)
    if s2 > tol:
        kind = IntervalKind.TIMELIKE
    elif s2 < -tol:
        kind = IntervalKind.SPACELIKE
    else:
        kind = IntervalKind.LIGHTLIKE
    return IntervalClass(kind, s2)


def ordering(e1: Event, e2: Event, beta: float) -> Order:
    """Which event happens first in the boosted frame."""
    t1, t2 = boosted_time(e1, beta), boosted_time(e2, beta)
    if abs(t2 - t1) <= SIMULTANEITY_TOLERANCE * max(1.0, abs(t1), abs(t2)):
        return Order.SIMULTANEOUS
    return Order.E1_FIRST if t1 < t2 else Order.E2_FIRST


def critical_velocity(x1: float, x2: float) -> float:
    """Boost above which photon 2 reaching distance ``x2`` precedes photon 1's
    detection at distance ``x1`` (both measured from the source).

    Negative results mean every rightward boost already reverses the order.
    """
    if not (x1 > 0.0 and x2 > 0.0) or not (math.isfinite(x1) and math.isfinite(x2)):
        raise InvalidGeometryError(f"distances must be positive, got x1={x1!r}, x2={x2!r}")
    return (x2 - x1) / (x2 + x1)


def simultaneity_velocity(e1: Event, e2: Event) -> float:
    """The x-boost making ``e1`` and ``e2`` simultaneous.

    Exists only when |dt| < |dx|; a pair separated mostly along y cannot be
    reordered by boosts along x even though it may be spacelike.
    """
    dt, dx = e2.t - e1.t, e2.x - e1.x
    if not abs(dt) < abs(dx):
        raise InvalidGeometryError("no x-boost makes these events simultaneous")
    return dt / dx


@dataclass(frozen=True)
class Worldline:
    """Piecewise-straight trajectory traversed at constant ``speed`` (1 for photons)."""

    vertices: tuple
    speed: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        if not 0.0 < self.speed <= 1.0:
            raise InvalidGeometryError(f"worldline speed must be in (0, 1], got {self.speed!r}")
        if len(self.vertices) < 2:
            raise InvalidGeometryError("a worldline needs at least two vertices")
        for a, b in zip(self.vertices, self.vertices[1:]):
            dt = b.t - a.t
            if not dt > 0.0:
                raise InvalidGeometryError(f"time must increase from {a.label} to {b.label}")
            dist = math.hypot(b.x - a.x, b.y - a.y)
            if abs(dist - self.speed * dt) > WORLDLINE_TOLERANCE * max(1.0, dt):
                raise InvalidGeometryError(
                    f"segment {a.label}->{b.label} is not traversed at speed {self.speed}"
                )

    @property
    def start(self) -> Event:
        return self.vertices[0]

    @property
    def end(self) -> Event:
        return self.vertices[-1]

    def point_at(self, segment: int, fraction: float, label: str = "point") -> Event:
        a, b = self.vertices[segment], self.vertices[segment + 1]
        return Event(
            label,
            a.t + fraction * (b.t - a.t),
            a.x + fraction * (b.x - a.x),
            a.y + fraction * (b.y - a.y),
        )


def locate_simultaneous(w: Worldline, reference: Event, beta: float):
    """``(segment_index, event)`` on ``w`` simultaneous with ``reference`` in the
    boosted frame, or None when the reference falls outside the worldline.

    Boosted time is strictly increasing along any worldline with speed <= 1,
    so the first segment bracketing the target time holds the only solution.
    """
    target = boosted_time(reference, beta)
    times = [boosted_time(v, beta) for v in w.vertices]
    tol = SIMULTANEITY_TOLERANCE * max(1.0, abs(target))
    if target < times[0] - tol or target > times[-1] + tol:
        return None
    for i, (ta, tb) in enumerate(zip(times, times[1:])):
        if target <= tb + tol:
            fraction = min(max((target - ta) / (tb - ta), 0.0), 1.0)
            return i, w.point_at(i, fraction, "collapse_locus")
    return None


def simultaneous_point(w: Worldline, reference: Event, beta: float) -> Event | None:
    found = locate_simultaneous(w, reference, beta)
    return None if found is None else found[1]
