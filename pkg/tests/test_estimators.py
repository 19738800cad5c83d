import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shrinkcov.errors import ArgError, DegenerateTarget, DimError, InsufficientData
from shrinkcov.estimators import (
    ShrinkageWeights,
    WeightKind,
    asymptotic_oracle_weights,
    bona_fide_weights,
    frobenius_estimator,
    glse_loss,
    hessian_determinant,
    identity_target,
    lw_dispersions,
    lw_estimator,
    olse,
    oracle_weights,
    sample_covariance,
)
from shrinkcov.matrix_core import frobenius_norm_sq, sym_eigenvalues, sym_matrix
from shrinkcov.simulation import covariance_from_spectrum, gaussian_sample, stream
from shrinkcov.asymptotics import SpectrumSpec

from conftest import random_spd

EQ32 = SpectrumSpec.equal([0.1, 5.0, 10.0])


def naive_covariance(y, center):
    p, n = y.shape
    mean = [sum(y[i, k] for k in range(n)) / n if center else 0.0 for i in range(p)]
    s = np.zeros((p, p))
    for i in range(p):
        for j in range(p):
            s[i, j] = sum((y[i, k] - mean[i]) * (y[j, k] - mean[j]) for k in range(n)) / n
    return s


def naive_b2(y, s):
    p, n = y.shape
    total = 0.0
    for i in range(n):
        col = y[:, i : i + 1]
        total += float(np.sum((col @ col.T - s) ** 2))
    return total / (p * n**2)


class TestSampleCovariance:
    def test_uncentered_scalar(self):
        np.testing.assert_array_equal(sample_covariance([[1.0, -1.0]]), [[1.0]])

    def test_centered_constant(self):
        np.testing.assert_array_equal(sample_covariance([[1.0, 1.0]], center=True), [[0.0]])

    @pytest.mark.parametrize("center", [False, True])
    def test_matches_double_loop(self, center):
        y = stream(7).standard_normal((3, 50))
        np.testing.assert_allclose(sample_covariance(y, center), naive_covariance(y, center), rtol=1e-12, atol=1e-14)

    def test_centered_needs_two_samples(self):
        with pytest.raises(InsufficientData):
            sample_covariance([[1.0], [2.0]], center=True)

    @given(st.floats(0.01, 100.0))
    @settings(max_examples=50, deadline=None)
    def test_scale_equivariance(self, k):
        y = stream(3).standard_normal((4, 9))
        np.testing.assert_allclose(sample_covariance(k * y), k**2 * sample_covariance(y), rtol=1e-12)


class TestLoss:
    def test_exact_recovery(self):
        s = np.diag([1.0, 2.0])
        assert glse_loss(1.0, 0.0, s, np.eye(2), s) == 0.0

    def test_zero_weights(self, rng):
        sig = random_spd(rng, 3)
        assert glse_loss(0.0, 0.0, np.eye(3), np.eye(3), sig) == pytest.approx(frobenius_norm_sq(sig))

    def test_matches_explicit_assembly(self, rng):
        s, t, sig = (random_spd(rng, 5) for _ in range(3))
        a, b = 0.7, -1.3
        direct = float(np.sum((a * s + b * t - sig) ** 2))
        assert glse_loss(a, b, s, t, sig) == pytest.approx(direct, rel=1e-12)

    def test_dim_error(self):
        with pytest.raises(DimError):
            glse_loss(1, 1, np.eye(2), np.eye(3), np.eye(2))


class TestOracle:
    def test_perfect_sample(self):
        s = np.diag([1.0, 2.0])
        w = oracle_weights(s, s, np.eye(2))
        assert w.alpha == pytest.approx(1.0, abs=1e-14)
        assert w.beta == pytest.approx(0.0, abs=1e-14)
        assert w.kind is WeightKind.ORACLE

    def test_proportional_is_degenerate(self):
        with pytest.raises(DegenerateTarget):
            oracle_weights(np.eye(2), np.eye(2), np.eye(2))

    def test_beats_grid(self, rng):
        s, sig, t = (random_spd(rng, 4) for _ in range(3))
        w = oracle_weights(s, sig, t)
        best = glse_loss(w.alpha, w.beta, s, t, sig)
        grid = np.linspace(-2, 2, 201)
        losses = [glse_loss(a, b, s, t, sig) for a in grid for b in grid]
        assert best <= min(losses)

    def test_rejects_non_spd_target(self):
        with pytest.raises(ArgError):
            oracle_weights(np.diag([1.0, 2.0]), np.eye(2), np.diag([1.0, -1.0]))


class TestAsymptotic:
    def test_c_zero(self, rng):
        sig = random_spd(rng, 4)
        w = asymptotic_oracle_weights(sig, np.eye(4) / 4, 0.0)
        assert w.alpha == 1.0 and w.beta == 0.0

    def test_worked_example(self):
        w = asymptotic_oracle_weights(np.diag([1.0, 2.0]), np.eye(2), 1.0)
        assert w.alpha == pytest.approx(0.1, abs=1e-14)
        assert w.beta == pytest.approx(1.35, abs=1e-14)

    def test_alpha_in_unit_interval(self, rng):
        for _ in range(50):
            p = int(rng.integers(2, 8))
            w = asymptotic_oracle_weights(random_spd(rng, p), random_spd(rng, p), float(rng.uniform(0.01, 5)))
            assert 0.0 < w.alpha < 1.0

    def test_degenerate(self):
        with pytest.raises(DegenerateTarget):
            asymptotic_oracle_weights(np.eye(3), np.eye(3), 0.0)

    def test_negative_c(self):
        with pytest.raises(ArgError):
            asymptotic_oracle_weights(np.eye(2), np.eye(2), -1.0)


class TestBonaFide:
    def test_worked_example_unclamped(self):
        w = bona_fide_weights(np.diag([1.0, 2.0]), identity_target(2), 4)
        assert w.alpha == pytest.approx(-3.5, abs=1e-12)
        assert w.beta == pytest.approx(13.5, abs=1e-12)

    def test_proportional_is_degenerate(self):
        with pytest.raises(DegenerateTarget):
            bona_fide_weights(np.eye(2), identity_target(2), 10)

    def test_one_dimensional_is_degenerate(self):
        with pytest.raises(DegenerateTarget):
            bona_fide_weights(np.array([[2.0]]), identity_target(1), 10)

    def test_close_to_oracle(self):
        p, n = 99, 297
        sigma = covariance_from_spectrum(EQ32, p)
        target = identity_target(p)
        hits = 0
        runs = 1000
        for rep in range(runs):
            s = sample_covariance(gaussian_sample(sigma, n, stream(99, rep)))
            a_hat = bona_fide_weights(s, target, n, check_target=False).alpha
            a_star = oracle_weights(s, sigma, target, check_target=False).alpha
            hits += abs(a_hat - a_star) < 0.05
        assert hits >= 0.95 * runs

    def test_olse_assembly(self, rng):
        s = random_spd(rng, 6)
        t = identity_target(6)
        res = olse(s, t, 20)
        expect = res.weights.alpha * s + res.weights.beta * t
        np.testing.assert_allclose(res.matrix, expect, rtol=0, atol=1e-12 * np.abs(expect).max())
        assert res.n == 20

    def test_olse_large_n_recovers_sample(self):
        sigma = np.diag([1.0, 2.0, 3.0])
        y = gaussian_sample(sigma, 200_000, 5)
        s = sample_covariance(y)
        res = olse(s, identity_target(3), 200_000)
        assert res.weights.alpha == pytest.approx(1.0, abs=1e-3)
        np.testing.assert_allclose(res.matrix, s, rtol=2e-3)

    def test_negative_weights_flagged(self):
        res = olse(np.diag([1.0, 2.0]), identity_target(2), 4)
        assert res.negative_weights


class TestFrobeniusEstimator:
    def test_examples(self):
        assert frobenius_estimator(np.eye(2), 2) == 0.0
        assert frobenius_estimator(np.diag([1.0, 2.0]), 4) == pytest.approx(1.375)

    def test_monte_carlo_identity(self):
        p, n = 200, 400
        vals = [frobenius_estimator(sample_covariance(stream(11, r).standard_normal((p, n))), n) for r in range(100)]
        assert abs(np.mean(vals) - 1.0) < 0.05


class TestLedoitWolf:
    def test_noiseless_columns(self):
        v = np.array([1.0, 2.0])
        y = np.column_stack([v, -v, v])
        res = lw_estimator(y)
        assert res.weights.alpha == 1.0
        np.testing.assert_array_equal(res.matrix, sample_covariance(y))

    def test_clamped_to_target(self):
        y = np.array([[10.0, 0.0], [0.0, 1.0]])
        s = sample_covariance(y)
        b2, d2 = lw_dispersions(y, s)
        assert b2 > d2
        res = lw_estimator(y)
        assert res.weights.alpha == 0.0
        np.testing.assert_array_equal(res.matrix, np.trace(s) / 2 * np.eye(2))

    @pytest.mark.parametrize("center", [False, True])
    def test_b2_matches_loop(self, center):
        y = stream(4).standard_normal((6, 15))
        s = sample_covariance(y, center)
        yc = y - y.mean(axis=1, keepdims=True) if center else y
        b2, d2 = lw_dispersions(y, s, center)
        assert b2 == pytest.approx(naive_b2(yc, s), rel=1e-10)
        assert d2 == pytest.approx(frobenius_norm_sq(s) / 6 - (np.trace(s) / 6) ** 2, rel=1e-12)

    def test_weight_invariants(self):
        for rep in range(50):
            y = stream(8, rep).standard_normal((5, 8)) * np.arange(1, 6)[:, None]
            res = lw_estimator(y)
            w = res.weights
            s = res.sample
            assert 0.0 <= w.alpha <= 1.0
            assert w.beta == pytest.approx((1 - w.alpha) * np.trace(s) / 5, rel=1e-12)
            np.testing.assert_allclose(res.matrix, w.alpha * s + w.beta * res.target, atol=1e-12 * np.abs(s).max())

    def test_identity_sample_is_degenerate(self):
        y = np.array([[1.0, 0.0], [0.0, 1.0]])
        with pytest.raises(DegenerateTarget):
            lw_estimator(y)

    def test_lw_weights_reject_out_of_range(self):
        with pytest.raises(ArgError):
            ShrinkageWeights(1.5, 0.0, WeightKind.LW)
        with pytest.raises(ArgError):
            ShrinkageWeights(float("nan"), 0.0, WeightKind.ORACLE)


class TestProperties:
    def test_hessian_positive(self, rng):
        for _ in range(200):
            p = int(rng.integers(2, 10))
            s, t = random_spd(rng, p), random_spd(rng, p)
            assert hessian_determinant(s, t) > 0

    def test_bona_fide_identities(self, rng):
        for _ in range(200):
            p = int(rng.integers(2, 10))
            s, t = random_spd(rng, p), random_spd(rng, p)
            n = int(rng.integers(1, 500))
            w = bona_fide_weights(s, t, n)
            assert w.beta == (np.einsum("ij,ij->", s, t) / np.einsum("ij,ij->", t, t)) * (1 - w.alpha)
            assert w.alpha < 1.0

    def test_eigenvalue_contraction(self):
        checked = 0
        for rep in range(300):
            p = 3 + rep % 10
            y = stream(21, rep).standard_normal((p, 2 * p)) * np.linspace(0.5, 3, p)[:, None]
            s = sample_covariance(y, center=True)
            res = olse(s, identity_target(p), 2 * p)
            if not res.weights.in_unit_interval:
                continue
            checked += 1
            ev_s, ev_o = sym_eigenvalues(s), sym_eigenvalues(res.matrix)
            tol = 1e-12 * ev_s[-1]
            assert ev_o[-1] <= ev_s[-1] + tol
            assert ev_o[0] >= ev_s[0] - tol
        assert checked > 100
