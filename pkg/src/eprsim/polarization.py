"""Exact state algebra for one- and two-photon linear-polarization experiments.

Basis kets are ``|x>`` (angle 0) and ``|y>`` (angle pi/2). A two-channel
polarizer at angle ``theta`` projects onto

    |theta_par>  =  cos(theta)|x> + sin(theta)|y>     (transmitted)
    |theta_perp> = -sin(theta)|x> + cos(theta)|y>     (reflected)

All states are immutable; every function here is pure.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum

from .exceptions import ImpossibleOutcomeError, InvalidStateError

NORM_TOLERANCE = 1e-9
ZERO_PROBABILITY = 1e-12

_SQRT_HALF = math.sqrt(0.5)


class Outcome(str, Enum):
    """Exit channel of a two-channel polarizer."""

    TRANSMITTED = "transmitted"
    REFLECTED = "reflected"

    @property
    def other(self) -> Outcome:
        return Outcome.REFLECTED if self is Outcome.TRANSMITTED else Outcome.TRANSMITTED


OUTCOME_PAIRS = (
    (Outcome.TRANSMITTED, Outcome.TRANSMITTED),
    (Outcome.TRANSMITTED, Outcome.REFLECTED),
    (Outcome.REFLECTED, Outcome.TRANSMITTED),
    (Outcome.REFLECTED, Outcome.REFLECTED),
)


def canonical_angle(theta: float) -> float:
    """Representative of a polarizer orientation in [0, pi)."""
    value = math.fmod(theta, math.pi)
    if value < 0.0:
        value += math.pi
    if value >= math.pi:
        value = 0.0
    return value


def _channel(theta, outcome):
    c, s = math.cos(theta), math.sin(theta)
    if outcome is Outcome.TRANSMITTED:
        return c, s
    return -s, c


@dataclass(frozen=True)
class PhotonState:
    amp_x: complex
    amp_y: complex

    @classmethod
    def linear(cls, angle: float) -> PhotonState:
        return cls(complex(math.cos(angle)), complex(math.sin(angle)))

    def norm(self) -> float:
        return math.sqrt(abs(self.amp_x) ** 2 + abs(self.amp_y) ** 2)

    def inner(self, other: PhotonState) -> complex:
        """<self|other>."""
        return self.amp_x.conjugate() * other.amp_x + self.amp_y.conjugate() * other.amp_y

    def same_as(self, other: PhotonState, tol: float = 1e-12) -> bool:
        """Equality up to a global phase."""
        return abs(abs(self.inner(other)) - 1.0) <= tol


@dataclass(frozen=True)
class TwoPhotonState:
    amp_xx: complex
    amp_xy: complex
    amp_yx: complex
    amp_yy: complex

    @classmethod
    def product(cls, first: PhotonState, second: PhotonState) -> TwoPhotonState:
        return cls(
            first.amp_x * second.amp_x,
            first.amp_x * second.amp_y,
            first.amp_y * second.amp_x,
            first.amp_y * second.amp_y,
        )

    @property
    def amplitudes(self) -> tuple:
        return (self.amp_xx, self.amp_xy, self.amp_yx, self.amp_yy)

    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self.amplitudes))

    def normalized(self) -> TwoPhotonState:
        n = self.norm()
        if n == 0.0:
            raise InvalidStateError("cannot normalize the zero vector")
        return TwoPhotonState(*(a / n for a in self.amplitudes))


def _check_norm(state):
    n = state.norm()
    if abs(n - 1.0) > NORM_TOLERANCE:
        raise InvalidStateError(f"state norm {n!r} deviates from 1")


def _check_photon(photon):
    if photon not in (1, 2):
        raise ValueError(f"photon must be 1 or 2, got {photon!r}")


def bell_state() -> TwoPhotonState:
    """(|x>|x> + |y>|y>)/sqrt(2): equal settings always give equal outcomes."""
    return TwoPhotonState(complex(_SQRT_HALF), 0j, 0j, complex(_SQRT_HALF))


def _partner_vector(state, photon, orientation, outcome):
    # Unnormalized state of the *other* photon after projecting `photon`.
    u, v = _channel(orientation, outcome)
    if photon == 1:
        return (u * state.amp_xx + v * state.amp_yx, u * state.amp_xy + v * state.amp_yy)
    return (u * state.amp_xx + v * state.amp_xy, u * state.amp_yx + v * state.amp_yy)


def outcome_probabilities(
    state: TwoPhotonState, photon: int, orientation: float
) -> tuple[float, float]:
    """Marginal (p_transmit, p_reflect) for one photon at a polarizer."""
    _check_photon(photon)
    _check_norm(state)
    cx, cy = _partner_vector(state, photon, orientation, Outcome.TRANSMITTED)
    p_t = abs(cx) ** 2 + abs(cy) ** 2
    p_t = min(max(p_t / state.norm() ** 2, 0.0), 1.0)
    return p_t, 1.0 - p_t


def partner_state(
    state: TwoPhotonState, photon: int, orientation: float, outcome: Outcome
) -> PhotonState:
    """Normalized state left on the other photon once ``photon`` gave ``outcome``."""
    _check_photon(photon)
    _check_norm(state)
    outcome = Outcome(outcome)
    cx, cy = _partner_vector(state, photon, orientation, outcome)
    p = abs(cx) ** 2 + abs(cy) ** 2
    if p <= ZERO_PROBABILITY:
        raise ImpossibleOutcomeError(
            f"photon {photon} cannot be {outcome.value} at orientation {orientation!r}"
        )
    n = math.sqrt(p)
    return PhotonState(cx / n, cy / n)


def collapse(
    state: TwoPhotonState, photon: int, orientation: float, outcome: Outcome
) -> TwoPhotonState:
    """Post-measurement two-photon state, renormalized.

    The measured photon is left in the channel state of ``outcome``; the
    other photon carries :func:`partner_state`.
    """
    outcome = Outcome(outcome)
    other = partner_state(state, photon, orientation, outcome)
    measured = PhotonState(*(complex(c) for c in _channel(orientation, outcome)))
    if photon == 1:
        return TwoPhotonState.product(measured, other)
    return TwoPhotonState.product(other, measured)


def photon_state(state: TwoPhotonState, photon: int, tol: float = 1e-9) -> PhotonState:
    """Factor of a product two-photon state belonging to ``photon``.

    Raises InvalidStateError when the state is entangled.
    """
    _check_photon(photon)
    m = ((state.amp_xx, state.amp_xy), (state.amp_yx, state.amp_yy))
    if abs(m[0][0] * m[1][1] - m[0][1] * m[1][0]) > tol:
        raise InvalidStateError("state is entangled; no single-photon factor exists")
    if photon == 1:
        # pick the column of the largest entry
        col = 0 if abs(m[0][0]) + abs(m[1][0]) >= abs(m[0][1]) + abs(m[1][1]) else 1
        vx, vy = m[0][col], m[1][col]
    else:
        row = 0 if abs(m[0][0]) + abs(m[0][1]) >= abs(m[1][0]) + abs(m[1][1]) else 1
        vx, vy = m[row][0], m[row][1]
    n = math.sqrt(abs(vx) ** 2 + abs(vy) ** 2)
    return PhotonState(vx / n, vy / n)


def photon_probabilities(state: PhotonState, orientation: float) -> tuple[float, float]:
    """Malus-law (p_transmit, p_reflect) for a single photon."""
    _check_norm(state)
    u, v = _channel(orientation, Outcome.TRANSMITTED)
    p_t = abs(u * state.amp_x + v * state.amp_y) ** 2
    p_t = min(max(p_t, 0.0), 1.0)
    return p_t, 1.0 - p_t


def joint_probabilities(
    state: TwoPhotonState, orientation_a: float, orientation_b: float
) -> tuple[float, float, float, float]:
    """Coincidence probabilities in the order (par-par, par-perp, perp-par, perp-perp)."""
    _check_norm(state)
    out = []
    for o1, o2 in OUTCOME_PAIRS:
        u1, v1 = _channel(orientation_a, o1)
        u2, v2 = _channel(orientation_b, o2)
        amp = (
            u1 * u2 * state.amp_xx
            + u1 * v2 * state.amp_xy
            + v1 * u2 * state.amp_yx
            + v1 * v2 * state.amp_yy
        )
        out.append(abs(amp) ** 2)
    total = sum(out)
    return tuple(p / total for p in out)


def conditional_probability(
    state: TwoPhotonState,
    first_photon: int,
    first_orientation: float,
    first_outcome: Outcome,
    second_orientation: float,
    second_outcome: Outcome,
) -> float:
    """p(second_outcome | first_outcome) evaluated on the collapsed state."""
    other = partner_state(state, first_photon, first_orientation, first_outcome)
    p_t, p_r = photon_probabilities(other, second_orientation)
    return p_t if Outcome(second_outcome) is Outcome.TRANSMITTED else p_r


def half_wave_plate(state: PhotonState, axis: float) -> PhotonState:
    """Reflect the polarization about ``axis``: linear angle phi goes to 2*axis - phi.

    The global phase of a physical plate is dropped; the matrix used here is
    real, orthogonal and its own inverse.
    """
    _check_norm(state)
    c, s = math.cos(2.0 * axis), math.sin(2.0 * axis)
    return PhotonState(
        c * state.amp_x + s * state.amp_y,
        s * state.amp_x - c * state.amp_y,
    )


def linear_angle(state: PhotonState, tol: float = 1e-9) -> float:
    """Polarization angle in [0, pi) of a linearly polarized state.

    Raises InvalidStateError for elliptical states.
    """
    _check_norm(state)
    ref = state.amp_x if abs(state.amp_x) >= abs(state.amp_y) else state.amp_y
    phase = cmath.exp(-1j * cmath.phase(ref))
    x, y = state.amp_x * phase, state.amp_y * phase
    if abs(x.imag) > tol or abs(y.imag) > tol:
        raise InvalidStateError("state is not linearly polarized")
    return canonical_angle(math.atan2(y.real, x.real))
