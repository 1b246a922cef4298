import json
import math
from dataclasses import replace

import numpy as np
import pytest

from eprsim import engine
from eprsim.engine import (
    exact_distribution,
    frame_critical_velocity,
    frame_report,
    run_batch,
    run_trial,
    to_csv,
    to_jsonl,
)
from eprsim.exceptions import InvalidBoostError, ScenarioError
from eprsim.polarization import OUTCOME_PAIRS, Outcome, bell_state, joint_probabilities
from eprsim.scenario import CollapseOrder, PathChoice, Scenario, build_timeline
from eprsim.spacetime import IntervalKind, boosted_time, interval

T, R = Outcome.TRANSMITTED, Outcome.REFLECTED


def direct(a=0.0, b=0.0, **kw):
    return Scenario(photon1_distance=1.0, photon2_direct_distance=1.0, orientation_a=a, orientation_b=b, **kw)


def four_sigma(p, n):
    return 4 * math.sqrt(p * (1 - p) / n)


class TestRunTrial:
    def test_fig2_always_transmitted(self, fig2):
        for i in range(200):
            r = run_trial(fig2, i)
            assert r.outcome2 is T and r.hwp_applied
            assert r.interval_class.kind is IntervalKind.TIMELIKE

    def test_hwp_axis_maps_partner_to_target(self, fig2):
        # a=0: transmitted leaves |0>, reflected leaves |pi/2>; target pi/4
        axes = {run_trial(fig2, i).outcome1: run_trial(fig2, i).hwp_axis for i in range(20)}
        assert axes[T] == pytest.approx(math.pi / 8, abs=1e-12)
        assert axes[R] == pytest.approx(3 * math.pi / 8, abs=1e-12)

    def test_equal_settings_agree(self):
        s = direct(0.7, 0.7, trials=2000)
        assert all(r.outcome1 is r.outcome2 for r in run_batch(s))

    def test_beamsplitter_interval_by_path(self, beamsplitter):
        for i in range(300):
            r = run_trial(beamsplitter, i)
            want = IntervalKind.TIMELIKE if r.path_taken is PathChoice.LONG else IntervalKind.SPACELIKE
            assert r.interval_class.kind is want
            assert r.hwp_applied == (r.path_taken is PathChoice.LONG)

    def test_invalid_scenario_rejected(self):
        with pytest.raises(ScenarioError):
            run_trial(direct(trials=0), 0)

    def test_matches_batch(self, beamsplitter):
        batch = run_batch(replace(beamsplitter, trials=500))
        for i in range(0, 500, 37):
            assert run_trial(beamsplitter, i) == batch[i]

    def test_hwp_only_when_message_wins(self, fig2):
        # a slow message loses the race; no correction is applied
        s = replace(fig2, message_speed=0.2, trials=2000)
        tl = build_timeline(s)
        assert not tl.message_arrives_first()
        records = run_batch(s)
        assert not any(r.hwp_applied for r in records)
        assert any(r.outcome2 is R for r in records)


class TestBatch:
    def test_length_one(self, fig2):
        assert len(run_batch(replace(fig2, trials=1))) == 1

    def test_deterministic(self, fig2):
        s = replace(fig2, trials=3)
        assert to_jsonl(run_batch(s)) == to_jsonl(run_batch(s))

    def test_parallel_identical(self, beamsplitter):
        s = replace(beamsplitter, trials=20_000)
        serial = to_jsonl(run_batch(s))
        assert to_jsonl(run_batch(s, workers=3, chunk_size=3_001)) == serial
        assert to_jsonl(run_batch(s, chunk_size=777)) == serial

    def test_seed_changes_output(self, fig1):
        a = run_batch(replace(fig1, trials=200))
        b = run_batch(replace(fig1, trials=200, seed=fig1.seed + 1))
        assert to_jsonl(a) != to_jsonl(b)

    def test_thirty_degrees_statistics(self):
        n = 100_000
        s = direct(0.0, math.pi / 6, trials=n, seed=3)
        records = run_batch(s)
        n_tt = sum(r.outcome1 is T and r.outcome2 is T for r in records)
        assert abs(n_tt / n - 3 / 8) < four_sigma(3 / 8, n)

    def test_branch_ratio(self, beamsplitter):
        n = 50_000
        records = run_batch(replace(beamsplitter, trials=n))
        long = sum(r.path_taken is PathChoice.LONG for r in records)
        assert abs(long / n - 0.5) < four_sigma(0.5, n)


class TestExactDistribution:
    def test_collapse_order_independence(self):
        rng = np.random.default_rng(21)
        for a, b in rng.uniform(0, math.pi, size=(100, 2)):
            p1 = exact_distribution(direct(a, b))
            p2 = exact_distribution(direct(a, b, collapse_order=CollapseOrder.PHOTON2_FIRST))
            closed = dict(zip(OUTCOME_PAIRS, joint_probabilities(bell_state(), a, b)))
            for pair in OUTCOME_PAIRS:
                assert p1[pair] == pytest.approx(p2[pair], abs=1e-12)
                assert p1[pair] == pytest.approx(closed[pair], abs=1e-12)

    def test_empirical_orders_agree(self):
        n = 40_000
        a, b = 0.2, 1.0
        s1 = direct(a, b, trials=n, seed=5)
        s2 = direct(a, b, trials=n, seed=6, collapse_order=CollapseOrder.PHOTON2_FIRST)
        c1 = {pair: 0 for pair in OUTCOME_PAIRS}
        c2 = dict(c1)
        for r in run_batch(s1):
            c1[r.outcome1, r.outcome2] += 1
        for r in run_batch(s2):
            c2[r.outcome1, r.outcome2] += 1
        for pair in OUTCOME_PAIRS:
            p = (c1[pair] + c2[pair]) / (2 * n)
            sigma = math.sqrt(2 * p * (1 - p) / n)
            assert abs(c1[pair] - c2[pair]) / n < 5 * sigma

    def test_feedforward(self, fig2):
        p = exact_distribution(fig2)
        assert p[T, T] == pytest.approx(0.5, abs=1e-12)
        assert p[R, T] == pytest.approx(0.5, abs=1e-12)
        assert p[T, R] == pytest.approx(0.0, abs=1e-12)


class TestFrameReport:
    def test_locus_before_mirror_in_lab(self, locus):
        rep = frame_report(build_timeline(locus), 0.0)
        assert rep.locus_segment == 0 and rep.locus_position == "before_mirror_M"

    def test_locus_past_mirror(self, locus):
        rep = frame_report(build_timeline(locus), 0.6)
        assert rep.locus_position == "past_mirror_M"
        loc = rep.collapse_locus
        assert (loc.t, loc.x, loc.y) == pytest.approx((3.4, 3, 0.4), abs=1e-9)

    def test_at_critical(self, locus):
        assert frame_critical_velocity(locus) == 0.5
        rep = frame_report(build_timeline(locus), 0.5)
        assert rep.locus_position == "at_mirror_M"

    def test_fig2_order(self, fig2):
        tl = build_timeline(fig2)
        for b in np.linspace(-0.99, 0.99, 41):
            order = frame_report(tl, b).event_order
            assert sorted(order) == sorted(tl.labels)
            assert order.index("detection1") < order.index("pol2_arrival")
            assert order.index("message_received") < order.index("pol2_arrival")

    def test_ties_sorted_by_label(self, fig2):
        order = frame_report(build_timeline(fig2), 0.3).event_order
        i = order.index("detection1")
        assert order[i:i + 3] == ("detection1", "message_sent", "pol1_arrival")

    def test_invalid_beta(self, fig2):
        with pytest.raises(InvalidBoostError):
            frame_report(build_timeline(fig2), 1.0)

    def test_direct_mode(self, fig1):
        rep = frame_report(build_timeline(fig1), 0.0)
        assert rep.locus_position == "no_mirror"

    def test_order_isomorphic_for_causal_pairs(self, beamsplitter):
        records = run_batch(replace(beamsplitter, trials=50))
        for r in records:
            tl = r.timeline
            for b in np.linspace(-0.95, 0.95, 20):
                t_b = {e.label: boosted_time(e, b) for e in tl.events}
                for e1 in tl.events:
                    for e2 in tl.events:
                        if e1.t < e2.t and interval(e1, e2).kind is not IntervalKind.SPACELIKE:
                            assert t_b[e1.label] < t_b[e2.label]


class TestSerialization:
    def test_jsonl_fields(self, fig2):
        line = to_jsonl(run_batch(replace(fig2, trials=1))).splitlines()[0]
        d = json.loads(line)
        assert list(d) == list(engine.RECORD_FIELDS)
        assert d == {
            "trial": 0,
            "path": "long",
            "outcome1": d["outcome1"],
            "outcome2": "transmitted",
            "hwp_applied": True,
            "hwp_axis_rad": d["hwp_axis_rad"],
            "interval_class": "timelike",
            "s_squared": 144.0,
        }

    def test_csv_columns(self, fig1):
        text = to_csv(run_batch(replace(fig1, trials=3)))
        lines = text.splitlines()
        assert lines[0] == ",".join(engine.RECORD_FIELDS)
        assert len(lines) == 4
        assert lines[1].split(",")[5] == ""

    def test_summary(self, fig2):
        summ = engine.summary(run_batch(replace(fig2, trials=100)))
        assert summ["transmission_rate"] == 1.0
        assert summ["feedforward_success_rate"] == 1.0
        assert summ["paths"] == {"long": 100}


def test_trial_streams_are_counter_based():
    u = engine.trial_uniforms(42, 7)
    block = engine._uniform_block(42, 5, 9)
    assert np.array_equal(block[2], u)


def test_outcome_counts_match_records(beamsplitter):
    from eprsim.scenario import CollapseOrder

    for s in (replace(beamsplitter, trials=5_000),
              Scenario(photon1_distance=1, photon2_direct_distance=2, orientation_b=0.9, trials=5_000,
                       collapse_order=CollapseOrder.PHOTON2_FIRST)):
        counts = engine.outcome_counts(s, chunk_size=1_234)
        expected = {pair: 0 for pair in OUTCOME_PAIRS}
        for r in run_batch(s):
            expected[r.outcome1, r.outcome2] += 1
        assert counts == expected
