"""Fisher-Rao geometry: metrics, families, KL computations, path lengths."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from driftlab.geometry import (
    ExpFamily1D,
    GaussianLocationFamily,
    GeometryError,
    MetricTensor,
    bernoulli_natural_family,
    fisher_distance_gaussian,
    fisher_norm,
    gaussian_unit_variance_family,
    kl_exp_family_exact,
    kl_expansion_remainder,
    kl_gaussian_location,
    path_length,
)

RNG = np.random.default_rng(20240817)


def random_spd(dim: int, rng) -> np.ndarray:
    a = rng.standard_normal((dim, dim))
    return a @ a.T + dim * np.eye(dim)


class TestMetricTensor:
    def test_accepts_spd(self):
        g = MetricTensor(np.array([[2.0, 0.5], [0.5, 1.0]]))
        assert g.dim == 2

    def test_rejects_non_square(self):
        with pytest.raises(GeometryError):
            MetricTensor(np.ones((2, 3)))

    def test_rejects_asymmetric(self):
        with pytest.raises(GeometryError):
            MetricTensor(np.array([[1.0, 0.2], [0.0, 1.0]]))

    def test_rejects_indefinite(self):
        with pytest.raises(GeometryError):
            MetricTensor(np.array([[1.0, 0.0], [0.0, -1.0]]))

    def test_rejects_singular(self):
        with pytest.raises(GeometryError):
            MetricTensor(np.array([[1.0, 1.0], [1.0, 1.0]]))


class TestGaussianLocationFamily:
    def test_precision_inverts_sigma(self):
        sigma = random_spd(4, RNG)
        fam = GaussianLocationFamily(sigma)
        assert np.allclose(fam.precision @ sigma, np.eye(4), atol=1e-10)

    def test_metric_is_precision(self):
        fam = GaussianLocationFamily(np.diag([1.0, 4.0]))
        assert np.allclose(fam.metric.matrix, np.diag([1.0, 0.25]))

    def test_chol_factorizes_sigma(self):
        sigma = random_spd(3, RNG)
        fam = GaussianLocationFamily(sigma)
        assert np.allclose(fam.chol @ fam.chol.T, sigma)

    def test_rejects_non_spd(self):
        with pytest.raises(GeometryError):
            GaussianLocationFamily(np.array([[1.0, 2.0], [2.0, 1.0]]))


class TestFisherNorm:
    def test_identity_metric_is_euclidean(self):
        g = MetricTensor(np.eye(3))
        v = np.array([3.0, 0.0, 4.0])
        assert fisher_norm(g, v) == pytest.approx(5.0)

    def test_matches_quadratic_form(self):
        g_mat = random_spd(5, RNG)
        v = RNG.standard_normal(5)
        expected = np.sqrt(v @ g_mat @ v)
        assert fisher_norm(MetricTensor(g_mat), v) == pytest.approx(expected, rel=1e-12)

    def test_zero_vector(self):
        assert fisher_norm(MetricTensor(np.eye(2)), np.zeros(2)) == 0.0

    @given(scale=st.floats(-10.0, 10.0))
    def test_absolute_homogeneity(self, scale):
        g = MetricTensor(np.array([[2.0, 0.3], [0.3, 1.0]]))
        v = np.array([0.7, -1.2])
        assert fisher_norm(g, scale * v) == pytest.approx(
            abs(scale) * fisher_norm(g, v), abs=1e-12
        )


class TestGaussianDistanceAndKL:
    def test_kl_unit_covariance(self):
        fam = GaussianLocationFamily(np.eye(2))
        assert kl_gaussian_location(fam, [0.3, 0.4]) == pytest.approx(0.125)

    def test_kl_matches_quadratic_oracle(self):
        sigma = random_spd(3, RNG)
        fam = GaussianLocationFamily(sigma)
        delta = RNG.standard_normal(3)
        expected = 0.5 * delta @ np.linalg.solve(sigma, delta)
        assert kl_gaussian_location(fam, delta) == pytest.approx(expected, rel=1e-10)

    def test_distance_squared_is_twice_kl(self):
        sigma = random_spd(4, RNG)
        fam = GaussianLocationFamily(sigma)
        a = RNG.standard_normal(4)
        b = RNG.standard_normal(4)
        dist = fisher_distance_gaussian(fam, a, b)
        assert dist**2 == pytest.approx(2.0 * kl_gaussian_location(fam, a - b), rel=1e-10)

    def test_distance_translation_invariant(self):
        fam = GaussianLocationFamily(random_spd(3, RNG))
        a, b, shift = RNG.standard_normal((3, 3))
        assert fisher_distance_gaussian(fam, a, b) == pytest.approx(
            fisher_distance_gaussian(fam, a + shift, b + shift), rel=1e-12
        )

    def test_linear_reparameterization_invariance(self):
        # theta -> M theta with Sigma -> M Sigma M' preserves Fisher distances
        sigma = random_spd(3, RNG)
        m = RNG.standard_normal((3, 3)) + 3 * np.eye(3)
        fam = GaussianLocationFamily(sigma)
        fam_re = GaussianLocationFamily(m @ sigma @ m.T)
        for _ in range(20):
            a, b = RNG.standard_normal((2, 3))
            assert fisher_distance_gaussian(fam, a, b) == pytest.approx(
                fisher_distance_gaussian(fam_re, m @ a, m @ b), abs=1e-10, rel=1e-10
            )


class TestExpFamilyKL:
    def test_gaussian_exact_kl_is_quadratic(self):
        fam = gaussian_unit_variance_family()
        for theta in (-1.0, 0.0, 2.5):
            for delta in (-0.5, 0.1, 1.0):
                assert kl_exp_family_exact(fam, theta, delta) == pytest.approx(
                    0.5 * delta**2, rel=1e-12
                )

    def test_bernoulli_matches_direct_formula(self):
        fam = bernoulli_natural_family()

        def sigmoid(t):
            return 1.0 / (1.0 + np.exp(-t))

        for theta in (-1.0, 0.0, 0.5):
            for delta in (0.3, -0.2):
                p = sigmoid(theta + delta)
                q = sigmoid(theta)
                direct = p * np.log(p / q) + (1 - p) * np.log((1 - p) / (1 - q))
                assert kl_exp_family_exact(fam, theta, delta) == pytest.approx(
                    direct, rel=1e-10
                )

    def test_gaussian_remainder_is_zero(self):
        fam = gaussian_unit_variance_family()
        assert kl_expansion_remainder(fam, 1.3, 0.25) == pytest.approx(0.0, abs=1e-13)

    def test_bernoulli_remainder_halves_with_delta(self):
        # at theta = 0.5 the third derivative of the log-partition is nonzero,
        # so the remainder ratio decays linearly: halving delta halves it
        fam = bernoulli_natural_family()
        theta = 0.5
        r1 = kl_expansion_remainder(fam, theta, 0.2)
        r2 = kl_expansion_remainder(fam, theta, 0.1)
        assert r1 / r2 == pytest.approx(2.0, rel=0.25)

    def test_bernoulli_remainder_vanishes_quadratically_at_symmetry(self):
        # at theta = 0 the third derivative vanishes, so the decay is faster
        fam = bernoulli_natural_family()
        r1 = kl_expansion_remainder(fam, 0.0, 0.2)
        r2 = kl_expansion_remainder(fam, 0.0, 0.1)
        assert r1 / r2 == pytest.approx(4.0, rel=0.25)

    def test_remainder_rejects_zero_delta(self):
        with pytest.raises(GeometryError):
            kl_expansion_remainder(gaussian_unit_variance_family(), 0.0, 0.0)

    def test_theta_outside_interval_rejected(self):
        fam = ExpFamily1D(
            log_partition=lambda t: t**2 / 2,
            d1=lambda t: t,
            d2=lambda t: 1.0,
            lo=-1.0,
            hi=1.0,
        )
        with pytest.raises(GeometryError):
            kl_exp_family_exact(fam, 0.9, 0.5)

    @given(
        theta=st.floats(-2.0, 2.0),
        delta=st.floats(-1.0, 1.0).filter(lambda d: abs(d) > 1e-3),
    )
    @settings(max_examples=50)
    def test_kl_nonnegative(self, theta, delta):
        for fam in (gaussian_unit_variance_family(), bernoulli_natural_family()):
            assert kl_exp_family_exact(fam, theta, delta) >= -1e-12


class TestPathLength:
    def test_single_point_zero(self):
        g = MetricTensor(np.eye(2))
        assert path_length([np.zeros(2)], lambda p: g) == 0.0

    def test_euclidean_segments(self):
        g = MetricTensor(np.eye(2))
        pts = [np.array([0.0, 0.0]), np.array([3.0, 4.0]), np.array([3.0, 10.0])]
        assert path_length(pts, lambda p: g) == pytest.approx(11.0)

    def test_additive_under_concatenation(self):
        fam = GaussianLocationFamily(random_spd(3, RNG))
        pts = [RNG.standard_normal(3) for _ in range(7)]
        whole = path_length(pts, lambda p: fam.metric)
        first = path_length(pts[:4], lambda p: fam.metric)
        second = path_length(pts[3:], lambda p: fam.metric)
        assert whole == pytest.approx(first + second, rel=1e-12)

    def test_metric_evaluated_at_segment_start(self):
        # a position-dependent metric must weight each segment by its start
        calls = []

        def metric_at(p):
            calls.append(p.copy())
            return MetricTensor(np.eye(1) * (1.0 + p[0] ** 2))

        pts = [np.array([0.0]), np.array([1.0]), np.array([2.0])]
        total = path_length(pts, metric_at)
        assert total == pytest.approx(1.0 + np.sqrt(2.0))
        assert np.allclose(calls, [[0.0], [1.0]])

    def test_chord_is_shortest_in_constant_metric(self):
        fam = GaussianLocationFamily(random_spd(2, RNG))
        a = np.array([1.0, 0.0])
        b = np.array([0.0, 1.0])
        mid = np.array([2.0, 2.0])
        chord = path_length([a, b], lambda p: fam.metric)
        detour = path_length([a, mid, b], lambda p: fam.metric)
        assert chord <= detour

    def test_empty_path_raises(self):
        with pytest.raises(GeometryError):
            path_length([], lambda p: MetricTensor(np.eye(1)))

    def test_dimension_mismatch_raises(self):
        with pytest.raises(GeometryError):
            path_length(
                [np.zeros(2), np.zeros(3)], lambda p: MetricTensor(np.eye(2))
            )
