import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from l0lms.filters import (
    AlgorithmConfig,
    DivergenceError,
    FilterState,
    InputTap,
    Variant,
    attractor_exact,
    attractor_taylor,
    attractor_taylor_vec,
    compute_error,
    sgn,
    step,
    trajectory,
    update_indices,
)

finite = st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False)
betas = st.sampled_from([0.5, 1.0, 5.0, 10.0, 15.0, 20.0])


class TestComputeError:
    def test_zero_weights_pass_desired_through(self):
        state = FilterState.zeros(4)
        assert compute_error(state, InputTap(np.array([1.0, -2.0, 3.0, 0.5]), 0.7)) == 0.7

    def test_hand_dot_product(self):
        state = FilterState(np.array([1.0, 0.0]), np.zeros(2))
        assert compute_error(state, InputTap(np.array([2.0, 3.0]), 5.0)) == 3.0

    def test_perfect_model_gives_zero(self):
        rng = np.random.default_rng(3)
        h = rng.standard_normal(16)
        x = rng.standard_normal(16)
        state = FilterState(h.copy(), np.zeros(16))
        assert compute_error(state, InputTap(x, float(np.dot(x, h)))) == 0.0

    def test_is_pure(self):
        state = FilterState(np.array([1.0, 2.0]), np.zeros(2), 5)
        compute_error(state, InputTap(np.array([1.0, 1.0]), 0.0))
        np.testing.assert_array_equal(state.w, [1.0, 2.0])
        assert state.n == 5

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="does not match"):
            compute_error(FilterState.zeros(3), InputTap(np.ones(2), 0.0))


class TestSgn:
    @pytest.mark.parametrize("x, expected", [(0.0, 0.0), (-0.0, 0.0), (3.2, 1.0), (-0.001, -1.0)])
    def test_values(self, x, expected):
        assert sgn(x) == expected


class TestAttractors:
    def test_exact_at_zero(self):
        assert attractor_exact(0.0, 5.0) == 0.0

    def test_exact_reference_value(self):
        # -beta * exp(-beta * x) at beta = 5, x = 0.2
        assert attractor_exact(0.2, 5.0) == pytest.approx(-5.0 * math.exp(-1.0), rel=1e-15)
        assert attractor_exact(0.2, 5.0) == pytest.approx(-1.8394, abs=1e-4)

    def test_taylor_values(self):
        assert attractor_taylor(0.0, 5.0) == 0.0
        assert attractor_taylor(0.3, 5.0) == 0.0
        assert attractor_taylor(0.1, 5.0) == pytest.approx(-2.5, abs=1e-12)
        assert attractor_taylor(-0.1, 5.0) == pytest.approx(2.5, abs=1e-12)

    def test_taylor_endpoints_closed_and_continuous(self):
        for beta in (5.0, 10.0, 15.0, 20.0):
            edge = 1.0 / beta
            assert attractor_taylor(edge, beta) == pytest.approx(0.0, abs=1e-12)
            assert attractor_taylor(-edge, beta) == pytest.approx(0.0, abs=1e-12)

    def test_vectorized_matches_branchwise(self):
        for beta in (5.0, 10.0, 15.0, 20.0):
            grid = np.linspace(-2 / beta, 2 / beta, 4001)
            scalar = np.array([attractor_taylor(x, beta) for x in grid])
            np.testing.assert_allclose(attractor_taylor_vec(grid, beta), scalar, atol=1e-12)

    @given(finite, betas)
    def test_oddness(self, x, beta):
        assert attractor_exact(-x, beta) == -attractor_exact(x, beta)
        assert attractor_taylor(-x, beta) == pytest.approx(-attractor_taylor(x, beta), abs=1e-12)

    @given(finite, betas)
    def test_sign_opposition_and_support(self, x, beta):
        f = attractor_taylor(x, beta)
        if 0 < abs(x) < 1 / beta - 1e-12:
            assert sgn(f) == -sgn(x)
        elif abs(x) >= 1 / beta:
            assert f == pytest.approx(0.0, abs=1e-12)

    @given(finite, betas)
    def test_bound(self, x, beta):
        assert abs(attractor_taylor(x, beta)) <= beta

    @given(st.floats(min_value=-1, max_value=1, allow_nan=False), betas)
    def test_taylor_close_to_exact_inside_range(self, u, beta):
        x = u / beta
        assert abs(attractor_exact(x, beta) - attractor_taylor(x, beta)) <= beta * math.exp(-1) + 1e-12


class TestUpdateIndices:
    def test_full_update(self):
        for n in range(5):
            np.testing.assert_array_equal(update_indices(n, 1, 8), np.arange(8))

    def test_q4_n0(self):
        np.testing.assert_array_equal(update_indices(0, 4, 8), [0, 4])

    @given(st.integers(0, 10_000), st.integers(1, 40), st.integers(1, 200))
    def test_matches_enumeration(self, n, q, l):
        if q > l:
            with pytest.raises(ValueError):
                update_indices(n, q, l)
            return
        brute = [j for j in range(l) if j % q == n % q]
        got = update_indices(n, q, l)
        assert got.tolist() == brute
        assert len(got) == math.ceil((l - n % q) / q)

    @given(st.integers(0, 10_000), st.integers(1, 16), st.integers(16, 100))
    def test_consecutive_window_partitions(self, n0, q, l):
        seen = np.concatenate([update_indices(n, q, l) for n in range(n0, n0 + q)])
        assert sorted(seen.tolist()) == list(range(l))

    def test_q_exceeds_l(self):
        with pytest.raises(ValueError, match="exceeds"):
            update_indices(0, 9, 8)


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(mu=0), dict(mu=-1), dict(kappa=-1), dict(beta=0),
                                    dict(q=0), dict(q=1.5), dict(delta=0), dict(mu=float("nan"))])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            AlgorithmConfig(Variant.L0LMS, **kw)

    def test_gamma(self):
        assert AlgorithmConfig(Variant.L0LMS, mu=0.01, kappa=8e-5).gamma == pytest.approx(8e-3)

    def test_variant_parsing(self):
        assert AlgorithmConfig("L0-NLMS").variant is Variant.L0NLMS
        with pytest.raises(ValueError):
            AlgorithmConfig("rls")


def _tap(x, d):
    return InputTap(np.asarray(x, dtype=float), d)


class TestStep:
    def test_lms_one_step_by_hand(self):
        x = np.zeros(6)
        x[0] = 1.0
        new, e = step(FilterState.zeros(6), _tap(x, 1.0), AlgorithmConfig(Variant.LMS, mu=0.5))
        assert e == 1.0
        np.testing.assert_array_equal(new.w, [0.5, 0, 0, 0, 0, 0])
        assert new.n == 1

    def test_nlms_one_step_by_hand(self):
        x = np.array([1.0, 2.0])
        cfg = AlgorithmConfig(Variant.NLMS, mu=1.0, delta=1.0)
        new, e = step(FilterState.zeros(2), _tap(x, 3.0), cfg)
        # e = 3, step = 3 / (1 + 5) = 0.5
        np.testing.assert_allclose(new.w, [0.5, 1.0])

    def test_does_not_mutate_input(self):
        s = FilterState(np.array([0.05, -0.3]), np.zeros(2))
        step(s, _tap([1.0, 1.0], 0.0), AlgorithmConfig(Variant.L0LMS, mu=0.1, kappa=0.01, q=1))
        np.testing.assert_array_equal(s.w, [0.05, -0.3])
        np.testing.assert_array_equal(s.f_cache, [0, 0])

    def test_kappa_zero_is_bit_identical_to_lms(self):
        rng = np.random.default_rng(11)
        s = FilterState(rng.standard_normal(10) * 0.1, rng.standard_normal(10), 7)
        tap = _tap(rng.standard_normal(10), 0.3)
        a, ea = step(s, tap, AlgorithmConfig(Variant.L0LMS, mu=0.02, kappa=0.0))
        b, eb = step(s, tap, AlgorithmConfig(Variant.LMS, mu=0.02))
        assert ea == eb
        assert np.array_equal(a.w, b.w)

    def test_q1_uses_fresh_attractor_everywhere(self):
        rng = np.random.default_rng(5)
        w0 = rng.uniform(-0.3, 0.3, 12)
        s = FilterState(w0.copy(), rng.standard_normal(12), 3)
        x = rng.standard_normal(12)
        cfg = AlgorithmConfig(Variant.L0LMS, mu=0.01, kappa=1e-3, beta=5.0, q=1)
        new, e = step(s, _tap(x, 0.4), cfg)
        f = np.array([attractor_taylor(v, 5.0) for v in w0])
        np.testing.assert_allclose(new.w, w0 + 0.01 * e * x + 1e-3 * f, atol=1e-15)
        np.testing.assert_allclose(new.f_cache, f, atol=1e-15)

    def test_partial_refresh_leaves_other_entries_stale(self):
        w0 = np.array([0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08])
        stale = np.full(8, 99.0)
        s = FilterState(w0, stale, n=6)  # 6 % 4 == 2 -> indices 2, 6
        new, _ = step(s, _tap(np.zeros(8), 0.0), AlgorithmConfig(Variant.L0LMS, kappa=0.0, q=4))
        fresh = {2, 6}
        for j in range(8):
            if j in fresh:
                assert new.f_cache[j] == pytest.approx(attractor_taylor(w0[j], 5.0))
            else:
                assert new.f_cache[j] == 99.0

    def test_refresh_uses_pre_update_weights(self):
        # large error would move w across the attraction range in this step
        s = FilterState(np.array([0.1]), np.zeros(1))
        cfg = AlgorithmConfig(Variant.L0LMS, mu=1.0, kappa=0.0, q=1)
        new, _ = step(s, _tap([1.0], 10.0), cfg)
        assert new.f_cache[0] == pytest.approx(attractor_taylor(0.1, 5.0))

    @given(st.floats(0.1, 10), st.integers(0, 2**31))
    @settings(max_examples=50)
    def test_nlms_scale_invariance(self, c, seed):
        rng = np.random.default_rng(seed)
        w = rng.standard_normal(8) * 0.1
        h = rng.standard_normal(8)
        x = rng.standard_normal(8)
        s = FilterState(w, np.zeros(8))
        for variant in (Variant.NLMS, Variant.L0NLMS):
            base = AlgorithmConfig(variant, mu=0.7, kappa=0.0, delta=1e-2, q=1)
            scaled = AlgorithmConfig(variant, mu=0.7, kappa=0.0, delta=1e-2 * c * c, q=1)
            # desired scales with x so that e scales by c as well
            a, _ = step(s, _tap(x, float(x @ h)), base)
            b, _ = step(s, _tap(c * x, float((c * x) @ h)), scaled)
            np.testing.assert_allclose(a.w, b.w, rtol=1e-9, atol=1e-12)

    def test_divergence_raises_with_iteration(self):
        s = FilterState(np.array([1e308]), np.zeros(1), n=41)
        with pytest.raises(DivergenceError) as exc:
            step(s, _tap([10.0], -1e308), AlgorithmConfig(Variant.LMS, mu=1.0))
        assert exc.value.iteration == 41

    def test_q_larger_than_filter(self):
        with pytest.raises(ValueError):
            step(FilterState.zeros(2), _tap([1.0, 0.0], 0.0), AlgorithmConfig(Variant.L0LMS, q=4))


class TestTrajectory:
    def test_matches_repeated_step(self):
        rng = np.random.default_rng(2)
        l, n = 9, 60
        xs = rng.standard_normal((n, l))
        d = rng.standard_normal(n)
        for variant in Variant:
            cfg = AlgorithmConfig(variant, mu=0.05, kappa=1e-3, q=4, delta=0.1)
            traj = trajectory(xs, d, cfg)
            s = FilterState.zeros(l)
            for i in range(n):
                s, _ = step(s, InputTap(xs[i], d[i]), cfg)
                assert np.array_equal(s.w, traj[i + 1])

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=20, deadline=None)
    def test_reduction_property(self, seed):
        rng = np.random.default_rng(seed)
        xs = rng.standard_normal((200, 16))
        d = rng.standard_normal(200)
        a = trajectory(xs, d, AlgorithmConfig(Variant.L0LMS, mu=0.01, kappa=0.0, beta=5.0, q=4))
        b = trajectory(xs, d, AlgorithmConfig(Variant.LMS, mu=0.01))
        assert np.array_equal(a, b)
        a = trajectory(xs, d, AlgorithmConfig(Variant.L0NLMS, mu=0.5, kappa=0.0))
        b = trajectory(xs, d, AlgorithmConfig(Variant.NLMS, mu=0.5))
        assert np.array_equal(a, b)

    def test_partial_coverage_over_q_iterations(self):
        # over q consecutive iterations every cache entry is refreshed exactly once
        l, q = 13, 4
        cfg = AlgorithmConfig(Variant.L0LMS, mu=1e-3, kappa=0.0, q=q)
        s = FilterState(np.full(l, 0.05), np.zeros(l), n=17)
        touched = np.zeros(l, dtype=int)
        for _ in range(q):
            s.f_cache[:] = 99.0
            s, _ = step(s, InputTap(np.zeros(l), 0.0), cfg)
            touched += s.f_cache != 99.0
        np.testing.assert_array_equal(touched, np.ones(l, dtype=int))
