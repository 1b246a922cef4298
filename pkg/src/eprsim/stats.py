"""Coincidence tables, correlation coefficients, CHSH and Malus-law fits."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import polarization as pol
from .exceptions import EprSimError
from .polarization import Outcome

TSIRELSON_BOUND = 2.0 * math.sqrt(2.0)
CLASSICAL_BOUND = 2.0
DEFAULT_CHSH_ANGLES = (0.0, math.pi / 4, math.pi / 8, 3 * math.pi / 8)
VIOLATION_SIGMAS = 3.0
MALUS_SIGMAS = 5.0


@dataclass(frozen=True)
class CoincidenceTable:
    """Counts per outcome pair; expected (non-integer) counts are allowed."""

    n_tt: float
    n_tr: float
    n_rt: float
    n_rr: float

    @classmethod
    def expected(cls, probabilities, total) -> CoincidenceTable:
        return cls(*(p * total for p in probabilities))

    @property
    def counts(self) -> tuple:
        return (self.n_tt, self.n_tr, self.n_rt, self.n_rr)

    @property
    def total(self):
        return sum(self.counts)

    @property
    def probabilities(self) -> tuple:
        n = self.total
        return tuple(c / n for c in self.counts)

    @property
    def stderr(self) -> tuple:
        n = self.total
        return tuple(math.sqrt(p * (1.0 - p) / n) for p in self.probabilities)

    def conditional_transmit(self) -> float:
        """Estimate of p(photon 2 transmitted | photon 1 transmitted)."""
        return self.n_tt / (self.n_tt + self.n_tr)

    def to_dict(self) -> dict:
        keys = ("tt", "tr", "rt", "rr")
        return {
            "counts": dict(zip(keys, self.counts)),
            "total": self.total,
            "probabilities": dict(zip(keys, self.probabilities)),
            "stderr": dict(zip(keys, self.stderr)),
        }


def tabulate(records) -> CoincidenceTable:
    counts = {pair: 0 for pair in pol.OUTCOME_PAIRS}
    for r in records:
        counts[r.outcome1, r.outcome2] += 1
    if not sum(counts.values()):
        raise EprSimError("cannot tabulate an empty record list")
    return CoincidenceTable(*(counts[pair] for pair in pol.OUTCOME_PAIRS))


def table_from_counts(counts) -> CoincidenceTable:
    """Table from an ``{(outcome1, outcome2): count}`` mapping."""
    return CoincidenceTable(*(counts[pair] for pair in pol.OUTCOME_PAIRS))


def correlation(table: CoincidenceTable) -> float:
    """E = p(tt) + p(rr) - p(tr) - p(rt)."""
    p_tt, p_tr, p_rt, p_rr = table.probabilities
    return min(1.0, max(-1.0, p_tt + p_rr - p_tr - p_rt))


def correlation_stderr(table: CoincidenceTable) -> float:
    # each trial contributes +-1, so Var = 1 - E^2
    e = correlation(table)
    return math.sqrt(max(0.0, 1.0 - e * e) / table.total)


def state_correlation(state, a, b) -> float:
    p_tt, p_tr, p_rt, p_rr = pol.joint_probabilities(state, a, b)
    return p_tt + p_rr - p_tr - p_rt


@dataclass(frozen=True)
class ChshResult:
    angles: tuple  # (a, a', b, b')
    correlations: tuple  # E(a,b), E(a,b'), E(a',b), E(a',b')
    s_value: float
    stderr: float | None = None

    @property
    def significance(self) -> float | None:
        """Standard errors by which |S| exceeds the classical bound."""
        if self.stderr is None:
            return None
        if self.stderr == 0.0:
            return math.inf if abs(self.s_value) > CLASSICAL_BOUND else -math.inf
        return (abs(self.s_value) - CLASSICAL_BOUND) / self.stderr

    @property
    def violation(self) -> bool:
        if self.stderr is None:
            return abs(self.s_value) > CLASSICAL_BOUND + 1e-12
        return self.significance >= VIOLATION_SIGMAS

    def to_dict(self) -> dict:
        sig = self.significance
        return {
            "angles": list(self.angles),
            "correlations": list(self.correlations),
            "S": self.s_value,
            "stderr": self.stderr,
            "significance_sigma": None if sig is None or not math.isfinite(sig) else sig,
            "violation": self.violation,
        }


def _chsh_sum(e_ab, e_ab2, e_a2b, e_a2b2):
    return e_ab - e_ab2 + e_a2b + e_a2b2


def chsh(state, a, a2, b, b2, mode="analytic", batches=None) -> ChshResult:
    """S = E(a,b) - E(a,b') + E(a',b) + E(a',b').

    ``mode="empirical"`` takes ``batches``: four record lists (or coincidence
    tables) measured at (a,b), (a,b'), (a',b), (a',b') in that order; the
    state argument is then unused.
    """
    angles = (a, a2, b, b2)
    if mode == "analytic":
        es = (
            state_correlation(state, a, b),
            state_correlation(state, a, b2),
            state_correlation(state, a2, b),
            state_correlation(state, a2, b2),
        )
        return ChshResult(angles, es, _chsh_sum(*es))
    if mode != "empirical":
        raise ValueError(f"unknown CHSH mode {mode!r}")
    if batches is None or len(batches) != 4 or any(b_ is None for b_ in batches):
        raise EprSimError("empirical CHSH needs four batches: (a,b), (a,b'), (a',b), (a',b')")
    tables = [bt if isinstance(bt, CoincidenceTable) else tabulate(bt) for bt in batches]
    es = tuple(correlation(t) for t in tables)
    err = math.sqrt(sum(correlation_stderr(t) ** 2 for t in tables))
    return ChshResult(angles, es, _chsh_sum(*es), err)


def chsh_settings(a, a2, b, b2) -> tuple:
    """Setting pairs in the order :func:`chsh` expects empirical batches."""
    return ((a, b), (a, b2), (a2, b), (a2, b2))


def empirical_chsh(scenario, angles=DEFAULT_CHSH_ANGLES, workers=None) -> ChshResult:
    """Run ``scenario`` at the four CHSH setting pairs and combine the batches.

    Each pair gets its own seed derived from the scenario seed.
    """
    from .engine import mix64, outcome_counts

    batches = []
    for k, (x, y) in enumerate(chsh_settings(*angles)):
        s = replace(
            scenario,
            orientation_a=x,
            orientation_b=y,
            target_orientation=y,
            seed=mix64(scenario.seed ^ (k + 1)),
        )
        batches.append(table_from_counts(outcome_counts(s, workers=workers)))
    return chsh(pol.bell_state(), *angles, mode="empirical", batches=batches)


@dataclass(frozen=True)
class MalusFit:
    relative_angles: tuple
    observed: tuple  # p(b_par | a_par) estimates
    predicted: tuple  # cos^2 of the relative angle
    sigmas: tuple
    slope: float
    intercept: float
    fit_residuals: tuple  # observed - (slope*cos^2 + intercept)

    @property
    def residuals(self) -> tuple:
        """Deviation of each point from Malus's law itself."""
        return tuple(o - p for o, p in zip(self.observed, self.predicted))

    @property
    def max_abs_residual(self) -> float:
        return max(abs(r) for r in self.residuals)

    @property
    def z_scores(self) -> tuple:
        return tuple(abs(r) / s for r, s in zip(self.residuals, self.sigmas))

    @property
    def chi_square(self) -> float:
        return sum(z * z for z in self.z_scores)

    @property
    def systematic(self) -> bool:
        return max(self.z_scores) > MALUS_SIGMAS

    def to_dict(self) -> dict:
        return {
            "relative_angles": list(self.relative_angles),
            "observed": list(self.observed),
            "predicted": list(self.predicted),
            "sigmas": list(self.sigmas),
            "slope": self.slope,
            "intercept": self.intercept,
            "max_abs_residual": self.max_abs_residual,
            "max_abs_fit_residual": max(abs(r) for r in self.fit_residuals),
            "chi_square": self.chi_square,
            "systematic": self.systematic,
        }


def malus_fit(tables) -> MalusFit:
    """Compare conditional transmission estimates with cos^2 of the relative angle.

    ``tables`` is a list of ``(relative_angle, CoincidenceTable)``. An
    unweighted least-squares line p = slope*cos^2 + intercept is reported
    alongside the residuals from Malus's law. Per-point sigmas are binomial
    at the predicted value, floored at 1/n so exact 0 and 1 predictions
    still flag any miss.
    """
    rel = [pol.canonical_angle(float(angle)) for angle, _ in tables]
    if len({round(r, 12) for r in rel}) < 3:
        raise EprSimError("a Malus fit needs at least three distinct relative angles")
    observed, predicted, sigmas = [], [], []
    for angle, table in tables:
        n = table.n_tt + table.n_tr
        if n <= 0:
            raise EprSimError("table has no photon-1 transmissions to condition on")
        p = math.cos(angle) ** 2
        observed.append(table.conditional_transmit())
        predicted.append(p)
        sigmas.append(max(math.sqrt(p * (1.0 - p) / n), 1.0 / n))
    design = np.column_stack([predicted, np.ones(len(predicted))])
    (slope, intercept), *_ = np.linalg.lstsq(design, np.asarray(observed), rcond=None)
    fitted = design @ np.array([slope, intercept])
    return MalusFit(
        tuple(float(angle) for angle, _ in tables),
        tuple(observed),
        tuple(predicted),
        tuple(sigmas),
        float(slope),
        float(intercept),
        tuple(float(o - f) for o, f in zip(observed, fitted)),
    )
