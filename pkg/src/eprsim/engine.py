"""Seeded Monte Carlo execution of scenarios.

Randomness is counter based: trial ``i`` of a run with seed ``s`` reads the
Philox block at counter ``i`` under key ``mix64(s)``. Each block yields four
uniforms consumed in a fixed order, whatever the mode:

    u[0]  beam-splitter branch (long when u < 1/2)
    u[1]  first sampled outcome (transmitted when u < p_transmit)
    u[2]  second sampled outcome
    u[3]  unused

so any trial can be reproduced alone and chunks can run in any order.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import polarization as pol
from .polarization import Outcome
from .scenario import CollapseOrder, PathChoice, Scenario, Timeline, build_timeline, check
from .spacetime import (
    SIMULTANEITY_TOLERANCE,
    Event,
    IntervalClass,
    boosted_time,
    critical_velocity,
    interval,
    lorentz_factor,
    locate_simultaneous,
)

DRAWS_PER_TRIAL = 4
BEAMSPLITTER_LONG_PROBABILITY = 0.5
RECORD_FIELDS = (
    "trial",
    "path",
    "outcome1",
    "outcome2",
    "hwp_applied",
    "hwp_axis_rad",
    "interval_class",
    "s_squared",
)

_MASK64 = (1 << 64) - 1


def mix64(z: int) -> int:
    """SplitMix64 finalizer; decorrelates neighbouring seeds."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _generator(seed, trial_index):
    return np.random.Generator(np.random.Philox(key=mix64(seed), counter=trial_index))


def trial_uniforms(seed: int, trial_index: int) -> np.ndarray:
    return _generator(seed, trial_index).random(DRAWS_PER_TRIAL)


def _uniform_block(seed, start, stop):
    return _generator(seed, start).random((stop - start, DRAWS_PER_TRIAL))


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    path_taken: PathChoice
    outcome1: Outcome
    outcome2: Outcome
    hwp_applied: bool
    hwp_axis: float | None
    timeline: Timeline
    interval_class: IntervalClass

    def to_dict(self) -> dict:
        return {
            "trial": self.trial_index,
            "path": self.path_taken.value,
            "outcome1": self.outcome1.value,
            "outcome2": self.outcome2.value,
            "hwp_applied": self.hwp_applied,
            "hwp_axis_rad": self.hwp_axis,
            "interval_class": self.interval_class.kind.value,
            "s_squared": self.interval_class.s_squared,
        }


@dataclass(frozen=True)
class _Branch:
    # what happens after the first sampled photon gives a given outcome
    p_second_transmit: float
    hwp_axis: float | None


@dataclass(frozen=True)
class _Plan:
    path: PathChoice
    timeline: Timeline
    interval_class: IntervalClass
    first_photon: int
    p_first_transmit: float
    branches: dict  # Outcome -> _Branch (impossible outcomes absent)
    feedforward: bool

    def second_branch(self, first):
        branch = self.branches.get(first)
        if branch is None:
            # only reachable through a draw landing exactly on a zero-width bin
            first = first.other
            branch = self.branches[first]
        return first, branch


def _orientations(s, photon):
    return s.orientation_a if photon == 1 else s.orientation_b


def _make_plan(s, path):
    timeline = build_timeline(s, path)
    feedforward = s.feedforward and path is not PathChoice.SHORT and timeline.message_arrives_first()
    if feedforward or s.collapse_order is CollapseOrder.PHOTON1_FIRST:
        first, second = 1, 2
    else:
        first, second = 2, 1
    state = pol.bell_state()
    p_t, _ = pol.outcome_probabilities(state, first, _orientations(s, first))
    branches = {}
    for outcome in Outcome:
        try:
            partner = pol.partner_state(state, first, _orientations(s, first), outcome)
        except pol.ImpossibleOutcomeError:
            continue
        axis = None
        if feedforward:
            phi = pol.linear_angle(partner)
            axis = pol.canonical_angle((phi + s.target_orientation) / 2.0)
            partner = pol.half_wave_plate(partner, axis)
        p2, _ = pol.photon_probabilities(partner, _orientations(s, second))
        branches[outcome] = _Branch(p2, axis)
    return _Plan(
        path,
        timeline,
        interval(timeline["detection1"], timeline["detection2"]),
        first,
        p_t,
        branches,
        feedforward,
    )


@lru_cache(maxsize=64)
def _plans(s: Scenario) -> dict:
    check(s)
    return {path: _make_plan(s, path) for path in s.path_choices()}


def _choose_path(s, u):
    choices = s.path_choices()
    if len(choices) == 1:
        return choices[0]
    return PathChoice.LONG if u < BEAMSPLITTER_LONG_PROBABILITY else PathChoice.SHORT


def _record(index, plan, first_outcome, second_outcome):
    first_outcome, branch = plan.second_branch(first_outcome)
    if plan.first_photon == 1:
        o1, o2 = first_outcome, second_outcome
    else:
        o1, o2 = second_outcome, first_outcome
    return TrialRecord(
        index,
        plan.path,
        o1,
        o2,
        plan.feedforward,
        branch.hwp_axis,
        plan.timeline,
        plan.interval_class,
    )


def run_trial(s: Scenario, trial_index: int) -> TrialRecord:
    """Sample one trial of ``s``.

    The first photon (per collapse order, or photon 1 whenever Bob's
    feed-forward correction applies) is measured on the entangled state;
    the second photon is measured on the collapsed partner state, after the
    half-wave plate when Alice's message beats photon 2 to polarizer II.
    """
    plans = _plans(s)
    u = trial_uniforms(s.seed, trial_index)
    plan = plans[_choose_path(s, u[0])]
    first = Outcome.TRANSMITTED if u[1] < plan.p_first_transmit else Outcome.REFLECTED
    first, branch = plan.second_branch(first)
    second = Outcome.TRANSMITTED if u[2] < branch.p_second_transmit else Outcome.REFLECTED
    return _record(trial_index, plan, first, second)


def _simulate_range(s, start, stop):
    """Compact per-trial codes for trials [start, stop): (long?, first_t?, second_t?)."""
    plans = _plans(s)
    u = _uniform_block(s.seed, start, stop)
    choices = s.path_choices()
    if len(choices) == 1:
        is_long = np.full(len(u), choices[0] is PathChoice.LONG)
    else:
        is_long = u[:, 0] < BEAMSPLITTER_LONG_PROBABILITY
    first_t = np.zeros(len(u), dtype=bool)
    second_t = np.zeros(len(u), dtype=bool)
    for path, plan in plans.items():
        rows = is_long if path is PathChoice.LONG else ~is_long
        ft = u[:, 1] < plan.p_first_transmit
        for outcome, mask in ((Outcome.TRANSMITTED, ft), (Outcome.REFLECTED, ~ft)):
            __, branch = plan.second_branch(outcome)
            sel = rows & mask
            second_t[sel] = u[sel, 2] < branch.p_second_transmit
        first_t[rows] = ft[rows]
    return is_long, first_t, second_t


def run_batch(s: Scenario, workers: int | None = None, chunk_size: int = 50_000) -> list:
    """Records for trials ``0 .. s.trials - 1`` in index order.

    With ``workers > 1`` chunks are simulated in separate processes; the
    result is identical to the serial run.
    """
    plans = _plans(s)
    n = s.trials
    bounds = [(lo, min(lo + chunk_size, n)) for lo in range(0, n, chunk_size)]
    if workers and workers > 1 and len(bounds) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(bounds))) as pool:
            parts = list(pool.map(_simulate_range, [s] * len(bounds), *zip(*bounds)))
    else:
        parts = [_simulate_range(s, lo, hi) for lo, hi in bounds]

    def plan_for(long):
        if len(plans) == 1:
            return next(iter(plans.values()))
        return plans[PathChoice.LONG if long else PathChoice.SHORT]

    records = []
    T, R = Outcome.TRANSMITTED, Outcome.REFLECTED
    for (lo, _), (is_long, first_t, second_t) in zip(bounds, parts):
        for k, (lg, f, sc) in enumerate(zip(is_long.tolist(), first_t.tolist(), second_t.tolist())):
            records.append(_record(lo + k, plan_for(lg), T if f else R, T if sc else R))
    return records


def outcome_counts(s: Scenario, workers: int | None = None, chunk_size: int = 50_000) -> dict:
    """``{(outcome1, outcome2): count}`` over the batch, without building records.

    Same draws as :func:`run_batch`, so the counts equal tabulating its records.
    """
    plans = _plans(s)
    bounds = [(lo, min(lo + chunk_size, s.trials)) for lo in range(0, s.trials, chunk_size)]
    if workers and workers > 1 and len(bounds) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(bounds))) as pool:
            parts = list(pool.map(_simulate_range, [s] * len(bounds), *zip(*bounds)))
    else:
        parts = [_simulate_range(s, lo, hi) for lo, hi in bounds]
    counts = {pair: 0 for pair in pol.OUTCOME_PAIRS}
    T, R = Outcome.TRANSMITTED, Outcome.REFLECTED
    for is_long, first_t, second_t in parts:
        for path, plan in plans.items():
            rows = is_long if path is PathChoice.LONG else ~is_long
            for f in (True, False):
                first, _ = plan.second_branch(T if f else R)
                for sc in (True, False):
                    n = int(np.count_nonzero(rows & (first_t == f) & (second_t == sc)))
                    second = T if sc else R
                    key = (first, second) if plan.first_photon == 1 else (second, first)
                    counts[key] += n
    return counts


def exact_distribution(s: Scenario, path: PathChoice | str | None = None) -> dict:
    """Joint outcome probabilities ``{(outcome1, outcome2): p}`` implied by the
    engine's sampling rules, computed without sampling.

    With ``path=None`` beam-splitter branches are mixed at 1/2 each.
    """
    plans = _plans(s)
    if path is None:
        weights = {p: 1.0 / len(plans) for p in plans}
    else:
        weights = {PathChoice(path): 1.0}
    out = {pair: 0.0 for pair in pol.OUTCOME_PAIRS}
    for p, w in weights.items():
        plan = plans[p]
        for first, branch in plan.branches.items():
            pf = plan.p_first_transmit if first is Outcome.TRANSMITTED else 1.0 - plan.p_first_transmit
            for second, ps in (
                (Outcome.TRANSMITTED, branch.p_second_transmit),
                (Outcome.REFLECTED, 1.0 - branch.p_second_transmit),
            ):
                key = (first, second) if plan.first_photon == 1 else (second, first)
                out[key] += w * pf * ps
    return out


# -- frame reports ------------------------------------------------------------


@dataclass(frozen=True)
class FrameReport:
    beta: float
    event_order: tuple
    boosted_times: dict
    collapse_locus: Event | None
    locus_segment: int | None
    locus_position: str | None  # before_mirror_M | at_mirror_M | past_mirror_M | no_mirror

    def to_dict(self) -> dict:
        locus = self.collapse_locus
        return {
            "beta": self.beta,
            "event_order": list(self.event_order),
            "collapse_locus": None if locus is None else {"t": locus.t, "x": locus.x, "y": locus.y},
            "locus_segment": self.locus_segment,
            "locus_position": self.locus_position,
        }


def _sort_events(events, beta):
    timed = sorted(((boosted_time(e, beta), e.label) for e in events))
    out, group, group_t = [], [], None
    for t, label in timed:
        if group and abs(t - group_t) > SIMULTANEITY_TOLERANCE * max(1.0, abs(group_t)):
            out.extend(sorted(group))
            group = []
        if not group:
            group_t = t
        group.append(label)
    out.extend(sorted(group))
    return tuple(out), {label: t for t, label in timed}


def frame_report(t: Timeline, beta: float) -> FrameReport:
    """Event order and collapse locus of ``t`` seen from a frame boosted by ``beta``.

    The locus is the point on photon 2's worldline simultaneous with photon
    1's detection in that frame. Events closer than the simultaneity
    tolerance are listed alphabetically.
    """
    lorentz_factor(beta)
    order, times = _sort_events(t.events, beta)
    found = locate_simultaneous(t.photon2_worldline, t["detection1"], beta)
    locus = segment = position = None
    if found is not None:
        segment, locus = found
        verts = t.photon2_worldline.vertices
        if len(verts) <= 2:
            position = "no_mirror"
        else:
            mirror = verts[1]
            tm, tl = boosted_time(mirror, beta), boosted_time(locus, beta)
            if abs(tl - tm) <= 1e-9 * max(1.0, abs(tm)):
                position = "at_mirror_M"
            else:
                position = "before_mirror_M" if tl < tm else "past_mirror_M"
    return FrameReport(beta, order, times, locus, segment, position)


def frame_critical_velocity(s: Scenario) -> float:
    """Boost beyond which photon 2 reaches the first mirror (or, without
    mirrors, polarizer II) before photon 1 is detected."""
    x2 = s.first_mirror_x if s.photon2_path else s.polarizer2_x
    return critical_velocity(s.photon1_distance, x2)


# -- serialization ------------------------------------------------------------


def record_line(r: TrialRecord) -> str:
    return json.dumps(r.to_dict())


def to_jsonl(records) -> str:
    return "".join(record_line(r) + "\n" for r in records)


def to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_FIELDS)
    for r in records:
        d = r.to_dict()
        row = [d[k] for k in RECORD_FIELDS]
        row[4] = "true" if row[4] else "false"
        row[5] = "" if row[5] is None else repr(row[5])
        row[7] = repr(row[7])
        w.writerow(row)
    return buf.getvalue()


def summary(records) -> dict:
    """Coincidence table plus feed-forward bookkeeping for a batch."""
    from .stats import tabulate

    table = tabulate(records)
    n = len(records)
    transmitted2 = sum(r.outcome2 is Outcome.TRANSMITTED for r in records)
    ff = [r for r in records if r.hwp_applied]
    ff_ok = sum(r.outcome2 is Outcome.TRANSMITTED for r in ff)
    paths = {}
    for r in records:
        paths[r.path_taken.value] = paths.get(r.path_taken.value, 0) + 1
    return {
        "trials": n,
        "coincidences": table.to_dict(),
        "transmission_rate": transmitted2 / n,
        "feedforward_trials": len(ff),
        "feedforward_success_rate": (ff_ok / len(ff)) if ff else None,
        "paths": paths,
    }


__all__ = [
    "FrameReport",
    "TrialRecord",
    "exact_distribution",
    "frame_critical_velocity",
    "frame_report",
    "mix64",
    "outcome_counts",
    "run_batch",
    "run_trial",
    "summary",
    "to_csv",
    "to_jsonl",
    "trial_uniforms",
]
