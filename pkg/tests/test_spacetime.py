import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eprsim.exceptions import InvalidBoostError, InvalidGeometryError
from eprsim.spacetime import (
    Event,
    IntervalKind,
    Order,
    Worldline,
    boost_event,
    boosted_time,
    compose_velocities,
    critical_velocity,
    interval,
    locate_simultaneous,
    ordering,
    simultaneity_velocity,
    simultaneous_point,
)

coords = st.floats(-100, 100, allow_nan=False)
betas = st.floats(-0.99, 0.99)


def bisect_reversal(e1, e2, lo=-0.999999, hi=0.999999):
    """Oracle: boost where the order of e1 and e2 flips, by bisection on ordering()."""
    o_lo = ordering(e1, e2, lo)
    for _ in range(200):
        mid = (lo + hi) / 2
        o = ordering(e1, e2, mid)
        if o is Order.SIMULTANEOUS:
            return mid
        if o is o_lo:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def locus_worldline(height=1.0):
    # photon 2 from the source to a mirror at x=3, then up by `height`
    verts = [Event("emission", 0, 0, 0), Event("mirror_1", 3, 3, 0), Event("mirror_2", 3 + height, 3, height)]
    return Worldline(tuple(verts))


class TestBoost:
    def test_identity(self):
        e = boost_event(Event("e", 1, 1, 0), 0.0)
        assert (e.t, e.x, e.y) == (1, 1, 0)

    def test_half_c(self):
        e = boost_event(Event("e", 1, -1, 0), 0.5)
        g = 1 / math.sqrt(0.75)
        assert e.t == pytest.approx(g * 1.5, abs=1e-12)
        assert e.x == pytest.approx(-g * 1.5, abs=1e-12)
        assert e.t == pytest.approx(1.7320508075688772, abs=1e-12)

    @given(coords, coords, coords, betas)
    def test_round_trip(self, t, x, y, beta):
        e = Event("e", t, x, y)
        back = boost_event(boost_event(e, beta), -beta)
        scale = max(1.0, abs(t), abs(x))
        assert back.t == pytest.approx(t, abs=1e-12 * scale * 100)
        assert back.x == pytest.approx(x, abs=1e-12 * scale * 100)
        assert back.y == y and back.label == "e"

    @given(coords, coords, betas, betas)
    def test_velocity_composition(self, t, x, b1, b2):
        e = Event("e", t, x, 0)
        two = boost_event(boost_event(e, b1), b2)
        one = boost_event(e, compose_velocities(b1, b2))
        scale = max(1.0, abs(t), abs(x)) * 100
        assert two.t == pytest.approx(one.t, abs=1e-9 * scale)
        assert two.x == pytest.approx(one.x, abs=1e-9 * scale)

    @pytest.mark.parametrize("beta", [1.0, -1.0, 1.5])
    def test_invalid(self, beta):
        with pytest.raises(InvalidBoostError):
            boost_event(Event("e", 0, 0), beta)


class TestInterval:
    def test_default_fig2_pair(self):
        c = interval(Event("a", 0, 0, 0), Event("b", 13, 5, 0))
        assert c.kind is IntervalKind.TIMELIKE and c.s_squared == 144

    def test_light_ray(self):
        c = interval(Event("a", 0, 0, 0), Event("b", 1, 1, 0))
        assert c.kind is IntervalKind.LIGHTLIKE and c.s_squared == 0

    @given(st.floats(0.01, 50), st.floats(0.01, 50))
    def test_direct_detections_spacelike(self, x1, x2):
        c = interval(Event("d1", x1, -x1), Event("d2", x2, x2))
        assert c.kind is IntervalKind.SPACELIKE

    def test_invariance_random(self):
        rng = np.random.default_rng(5)
        bs = np.linspace(-0.99, 0.99, 20)
        for _ in range(1000):
            p, q = rng.uniform(-10, 10, size=(2, 3))
            e1, e2 = Event("1", *p), Event("2", *q)
            base = interval(e1, e2)
            for b in bs:
                c = interval(boost_event(e1, b), boost_event(e2, b))
                assert c.kind is base.kind
                assert c.s_squared == pytest.approx(base.s_squared, rel=1e-9, abs=1e-9)


class TestOrdering:
    d1, m = Event("detection1", 1, -1, 0), Event("mirror_1", 3, 3, 0)

    def test_lab(self):
        assert ordering(self.d1, self.m, 0.0) is Order.E1_FIRST

    def test_critical(self):
        assert ordering(self.d1, self.m, 0.5) is Order.SIMULTANEOUS

    def test_beyond_critical(self):
        assert ordering(self.d1, self.m, 0.6) is Order.E2_FIRST

    @given(coords, coords, coords, st.floats(0, 50), st.floats(0, 1), st.floats(-1, 1))
    def test_causal_order_preserved(self, t, x, y, dt, frac, sign):
        # e2 inside or on the future light cone of e1
        r = dt * frac
        ang = math.pi * sign
        e1 = Event("1", t, x, y)
        e2 = Event("2", t + dt + 1e-6, x + r * math.cos(ang), y + r * math.sin(ang))
        for b in np.linspace(-0.99, 0.99, 15):
            assert ordering(e1, e2, b) is Order.E1_FIRST

    def test_spacelike_reversal_matches_bisection(self):
        rng = np.random.default_rng(9)
        checked = 0
        while checked < 200:
            p, q = rng.uniform(-10, 10, size=(2, 3))
            e1, e2 = Event("1", *p), Event("2", *q)
            if interval(e1, e2).kind is not IntervalKind.SPACELIKE:
                continue
            if not abs(e2.t - e1.t) < abs(e2.x - e1.x) * 0.999:
                # separated mostly along y: no boost along x reorders it
                continue
            beta = simultaneity_velocity(e1, e2)
            assert bisect_reversal(e1, e2) == pytest.approx(beta, abs=1e-9)
            before, after = ordering(e1, e2, beta - 1e-4), ordering(e1, e2, beta + 1e-4)
            assert {before, after} == {Order.E1_FIRST, Order.E2_FIRST}
            checked += 1

    def test_y_separated_pair_has_no_x_reversal(self):
        e1, e2 = Event("1", 0, 0, 0), Event("2", 1, 0, 5)
        assert interval(e1, e2).kind is IntervalKind.SPACELIKE
        with pytest.raises(InvalidGeometryError):
            simultaneity_velocity(e1, e2)


class TestCriticalVelocity:
    def test_values(self):
        assert critical_velocity(1, 3) == 0.5
        assert critical_velocity(1, 1) == 0.0

    @pytest.mark.parametrize("k", [0.1, 1, 10, 1 / math.sqrt(1 - 0.36), math.sqrt(1 - 0.81)])
    def test_scale_invariance(self, k):
        assert critical_velocity(k, 3 * k) == pytest.approx(0.5, abs=1e-12)

    @pytest.mark.parametrize("x1,x2", [(0, 1), (1, 0), (-1, 2)])
    def test_invalid(self, x1, x2):
        with pytest.raises(InvalidGeometryError):
            critical_velocity(x1, x2)

    @given(st.floats(0.1, 20), st.floats(0.1, 20))
    def test_flip_exactly_at_critical(self, x1, x2):
        bc = critical_velocity(x1, x2)
        d1, m = Event("d1", x1, -x1), Event("m", x2, x2)
        assert ordering(d1, m, bc) is Order.SIMULTANEOUS
        if abs(bc) < 0.99:
            assert ordering(d1, m, bc - 1e-6) is Order.E1_FIRST
            assert ordering(d1, m, bc + 1e-6) is Order.E2_FIRST


class TestWorldline:
    def test_rejects_timelike_segment(self):
        with pytest.raises(InvalidGeometryError):
            Worldline((Event("a", 0, 0), Event("b", 2, 1)))

    def test_subluminal_speed(self):
        w = Worldline((Event("a", 0, 0), Event("b", 2, 1)), speed=0.5)
        assert w.end.t == 2

    def test_rejects_backward_time(self):
        with pytest.raises(InvalidGeometryError):
            Worldline((Event("a", 1, 0), Event("b", 0, 1)))

    def test_needs_two_vertices(self):
        with pytest.raises(InvalidGeometryError):
            Worldline((Event("a", 0, 0),))


class TestSimultaneousPoint:
    ref = Event("detection1", 1, -1, 0)

    def test_lab_frame_before_mirror(self):
        p = simultaneous_point(locus_worldline(), self.ref, 0.0)
        assert (p.t, p.x, p.y) == pytest.approx((1, 1, 0), abs=1e-12)
        assert p.label == "collapse_locus"

    def test_past_mirror(self):
        seg, p = locate_simultaneous(locus_worldline(), self.ref, 0.6)
        assert seg == 1
        assert (p.t, p.x, p.y) == pytest.approx((3.4, 3, 0.4), abs=1e-9)

    def test_self_simultaneity(self):
        w = locus_worldline()
        p = simultaneous_point(w, w.start, 0.0)
        assert (p.t, p.x, p.y) == (0, 0, 0)

    def test_outside_span(self):
        assert simultaneous_point(locus_worldline(), Event("late", 100, 0, 0), 0.0) is None
        assert simultaneous_point(locus_worldline(), Event("early", -1, 0, 0), 0.0) is None

    @given(betas, st.floats(0, 4))
    def test_consistency(self, beta, t_ref):
        w = locus_worldline(1.0)
        ref = Event("r", t_ref, -t_ref, 0)
        found = locate_simultaneous(w, ref, beta)
        if found is None:
            tr = boosted_time(ref, beta)
            assert tr < boosted_time(w.start, beta) or tr > boosted_time(w.end, beta)
            return
        seg, p = found
        assert boosted_time(p, beta) == pytest.approx(boosted_time(ref, beta), abs=1e-9)
        a, b = w.vertices[seg], w.vertices[seg + 1]
        f = (p.t - a.t) / (b.t - a.t)
        assert -1e-12 <= f <= 1 + 1e-12
        assert p.x == pytest.approx(a.x + f * (b.x - a.x), abs=1e-9)
        assert p.y == pytest.approx(a.y + f * (b.y - a.y), abs=1e-9)
