import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brakeonset.errors import DegenerateVarianceError, EmptyGridError
from brakeonset.kinematics import KinematicSeries, WindowStats
from brakeonset.plm import (
    GridConfig,
    GridSpec,
    PlmParams,
    build_grid,
    grid_search,
    grid_values,
    oracle_fit,
    plm_predict,
    r_squared,
)

T = np.round(np.arange(41) * 0.1, 9)
TRUTH = PlmParams(0.0, 2.0, -3.0)


def axis(lo, step, n):
    return tuple(round(lo + k * step, 9) for k in range(n))


# a0 in [-1, 1], t_B in [1, 3], j_B in [-8, 0]
WIDE = GridSpec(axis(-1, 0.1, 21), axis(1, 0.1, 21), axis(-8, 0.2, 41))


def noisy(seed, sigma=0.2):
    a = plm_predict(TRUTH, T) + np.random.default_rng(seed).normal(0, sigma, T.size)
    return KinematicSeries(T, a)


def stats(a_max=0.0, j_min=-2.0):
    return WindowStats(a_max=a_max, a_min=-1.0, t_of_a_min=1.0, j_min=j_min, sample_count=10)


class TestPredict:
    def test_before_onset(self):
        assert plm_predict(PlmParams(0, 1, -2), 0.5) == 0

    def test_at_knee(self):
        assert plm_predict(PlmParams(0, 1, -2), 1.0) == 0

    def test_after_onset(self):
        assert plm_predict(PlmParams(0.3, 1, -2), 2.0) == pytest.approx(-1.7, abs=1e-12)

    def test_vector_matches_scalar(self):
        p = PlmParams(0.4, 1.3, -2.6)
        vec = plm_predict(p, T)
        assert vec.tolist() == [plm_predict(p, float(t)) for t in T]

    def test_rejects_positive_jerk(self):
        with pytest.raises(ValueError):
            PlmParams(0, 1, 0.5)

    @given(
        st.floats(-5, 5), st.floats(-10, 10), st.floats(-20, 0), st.sampled_from([1e-6, 1e-9, 1e-12])
    )
    def test_continuity(self, a0, t_b, j_b, eps):
        p = PlmParams(a0, t_b, j_b)
        assert plm_predict(p, t_b) == a0
        assert plm_predict(p, t_b - eps) == a0
        assert plm_predict(p, t_b + eps) == pytest.approx(a0, abs=25 * eps)


class TestRSquared:
    def test_perfect(self):
        s = KinematicSeries(T, plm_predict(TRUTH, T))
        assert r_squared(TRUTH, s) == 1.0

    def test_worse_than_mean(self):
        # SS_res = 1 + 1 + 4 = 6; mean = -1/3; SS_tot = 1/9 + 1/9 + 4/9 = 2/3
        s = KinematicSeries([0, 0.1, 0.2], [0, 0, -1])
        ss_res, ss_tot = 6.0, 2.0 / 3.0
        assert 1 - ss_res / ss_tot == -8.0
        assert r_squared(PlmParams(1.0, 0.3, 0.0), s) == pytest.approx(-8.0, abs=1e-12)

    def test_constant(self):
        with pytest.raises(DegenerateVarianceError):
            r_squared(TRUTH, KinematicSeries(T, np.full(T.size, 0.5)))

    @settings(max_examples=60)
    @given(
        st.lists(st.floats(-10, 10), min_size=3, max_size=30),
        st.floats(-3, 3),
        st.floats(0, 3),
        st.floats(-10, 0),
    )
    def test_bounded_by_one(self, a, a0, t_b, j_b):
        s = KinematicSeries(np.arange(len(a)) * 0.1, a)
        p = PlmParams(a0, t_b, j_b)
        try:
            r2 = r_squared(p, s)
        except DegenerateVarianceError:
            return
        resid = s.a - plm_predict(p, s.t)
        assert r2 <= 1.0
        assert (r2 == 1.0) == bool(np.all(resid == 0)) or np.max(np.abs(resid)) < 1e-7


class TestBuildGrid:
    def test_a0_axis(self):
        g = build_grid(stats(a_max=0.5), 1.0, 2.0)
        assert len(g.a0_values) == 21
        assert g.a0_values[0] == -0.5 and g.a0_values[-1] == 1.5 and g.a0_values[10] == 0.5

    def test_jb_axis_clipped(self):
        g = build_grid(stats(j_min=-2.0), 1.0, 2.0)
        assert len(g.jB_values) == 36
        assert g.jB_values[0] == -7.0 and g.jB_values[-1] == 0.0
        assert all(v <= 0 for v in g.jB_values)

    def test_jb_axis_unaligned_end(self):
        g = build_grid(stats(j_min=-2.05), 1.0, 2.0)
        assert g.jB_values[0] == -7.05 and g.jB_values[-1] == -0.05

    def test_tb_axis(self):
        g = build_grid(stats(), 1.2, 4.2)
        assert len(g.tB_values) == 31
        assert g.tB_values[0] == 1.2 and g.tB_values[-1] == 4.2 and g.tB_values[8] == 2.0

    def test_tb_axis_anchored_at_start(self):
        g = build_grid(stats(), 1.25, 1.6)
        assert g.tB_values == (1.25, 1.35, 1.45, 1.55)

    def test_empty_jb(self):
        with pytest.raises(EmptyGridError):
            build_grid(stats(j_min=6.0), 1.0, 2.0)

    def test_zero_width_jb(self):
        assert build_grid(stats(j_min=5.0), 1.0, 2.0).jB_values == (0.0,)

    def test_configurable(self):
        cfg = GridConfig(a0_halfwidth=0.5, a0_step=0.25, tb_step=0.5, jb_margin=1.0, jb_step=0.5)
        g = build_grid(stats(a_max=0.0, j_min=-1.0), 0.0, 1.0, cfg)
        assert g.a0_values == (-0.5, -0.25, 0.0, 0.25, 0.5)
        assert g.tB_values == (0.0, 0.5, 1.0)
        assert g.jB_values == (-2.0, -1.5, -1.0, -0.5, 0.0)


class TestGridSearch:
    def test_exact_recovery(self):
        s = KinematicSeries(T, plm_predict(TRUTH, T))
        fit = grid_search(s, WIDE)
        assert fit.params == TRUTH and fit.r2 == 1.0

    def test_noisy_recovery_matches_oracle(self):
        # Oracle run over seeds 0..99 put t_B within 0.2 s of 2.0 on all 100.
        within = 0
        for seed in range(100):
            s = noisy(seed)
            fit = grid_search(s, WIDE)
            assert fit == oracle_fit(s, WIDE)
            within += abs(fit.params.t_B - 2.0) <= 0.2 + 1e-9
        assert within == 100

    def test_singleton(self):
        g = GridSpec((0.1,), (1.5,), (-2.0,))
        s = noisy(3)
        fit = grid_search(s, g)
        assert fit.params == PlmParams(0.1, 1.5, -2.0)
        assert fit.r2 == r_squared(fit.params, s)

    def test_r2_matches_public_r_squared(self):
        s = noisy(11)
        fit = grid_search(s, WIDE)
        assert fit.r2 == r_squared(fit.params, s)

    def test_tie_break(self):
        # Flat before t=1.0, so every t_B <= 1.0 with j_B = 0 fits equally.
        s = KinematicSeries([0, 0.5, 1.0, 1.5], [0.0, 0.0, 0.0, -1.0])
        g = GridSpec((0.0, 1.0), (0.0, 0.5, 1.0), (-2.0, 0.0))
        fit = grid_search(s, g)
        assert fit.params == PlmParams(0.0, 1.0, -2.0) and fit.r2 == 1.0
        # all-equal scores resolve to the first point in tie order
        s2 = KinematicSeries([0, 0.5, 1.0], [0.0, 1.0, 0.0])
        g2 = GridSpec((0.5,), (2.0, 3.0), (-1.0, 0.0))
        assert grid_search(s2, g2).params == PlmParams(0.5, 2.0, -1.0)
        assert oracle_fit(s2, g2).params == PlmParams(0.5, 2.0, -1.0)

    def test_degenerate(self):
        s = KinematicSeries(T, np.zeros(T.size))
        with pytest.raises(DegenerateVarianceError):
            grid_search(s, WIDE)
        with pytest.raises(DegenerateVarianceError):
            oracle_fit(s, WIDE)

    def test_empty_grid(self):
        with pytest.raises(EmptyGridError):
            oracle_fit(noisy(0), GridSpec((), (1.0,), (0.0,)))

    def test_optimality_spot_check(self):
        rng = np.random.default_rng(5)
        pts = grid_values(WIDE)
        for seed in range(5):
            s = noisy(seed, 0.4)
            best = grid_search(s, WIDE).r2
            for k in rng.choice(len(pts), 300, replace=False):
                assert best >= r_squared(pts[k], s)

    def test_monotone_nesting(self):
        s = noisy(7)
        small = GridSpec(axis(-0.5, 0.1, 11), axis(1.5, 0.1, 11), axis(-5, 0.2, 26))
        assert grid_search(s, WIDE).r2 >= grid_search(s, small).r2
        for grown in (
            GridSpec(WIDE.a0_values, small.tB_values, small.jB_values),
            GridSpec(small.a0_values, WIDE.tB_values, small.jB_values),
            GridSpec(small.a0_values, small.tB_values, WIDE.jB_values),
        ):
            assert grid_search(s, grown).r2 >= grid_search(s, small).r2

    def test_order_independent(self):
        # Exhaustive scoring in shuffled order, reduced with the tie-break key.
        s = noisy(2)
        g = GridSpec(axis(-0.3, 0.1, 7), axis(1.6, 0.1, 9), axis(-4, 0.2, 11))
        pts = grid_values(g)
        rng = np.random.default_rng(0)
        order = rng.permutation(len(pts))
        scored = [(r_squared(pts[k], s), pts[k]) for k in order]
        best = max(scored, key=lambda x: (x[0], -x[1].t_B, -x[1].j_B, -x[1].a0))
        fit = grid_search(s, g)
        assert fit.params == best[1] and fit.r2 == best[0]


@settings(max_examples=25, deadline=None)
@given(
    st.integers(0, 2**31),
    st.floats(0.05, 1.0),
    st.sampled_from([0.05, 0.1, 0.2]),
)
def test_oracle_equivalence_randomized(seed, sigma, dt):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(8, 30))
    t = np.round(np.arange(n) * dt, 9)
    p = PlmParams(rng.uniform(-1, 1), t[n // 3], rng.uniform(-6, 0))
    s = KinematicSeries(t, plm_predict(p, t) + rng.normal(0, sigma, n))
    g = GridSpec(axis(-1.2, 0.1, 25), tuple(t[1 : n - 1 : 2].tolist()), axis(-8, 0.4, 21))
    assert grid_search(s, g) == oracle_fit(s, g)
