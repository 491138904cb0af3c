"""Drift-feedback processes: environments, decomposition, budget enforcement."""

import numpy as np
import pytest

from driftlab import rng as rngmod
from driftlab.geometry import GaussianLocationFamily, GeometryError, MetricTensor, fisher_norm
from driftlab.learners import RandomFeatureMap, TwoLayerNet
from driftlab.processes import (
    TEACHER_FISHER_RIDGE,
    BudgetManager,
    DriftRecord,
    LinearGaussianEnv,
    TeacherEnv,
    TrajectoryLog,
    drift_decompose_linear,
    env_step_linear,
    sample_observation,
    teacher_drift_step,
    teacher_fisher,
    truncate_increment,
)

RNG = np.random.default_rng(20240818)


def make_linear_env(d=2, k=2, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((d, d))
    b = rng.standard_normal((d, k))
    sigma = np.eye(d)
    return LinearGaussianEnv(A=a, B=b, fam=GaussianLocationFamily(sigma), theta0=np.zeros(d))


class TestDriftRecord:
    def test_accepts_nonnegative(self):
        rec = DriftRecord(d_t=0.0, kappa_t=1.5)
        assert rec.d_t == 0.0 and rec.kappa_t == 1.5

    @pytest.mark.parametrize("d,k", [(-1.0, 0.0), (0.0, -0.1), (np.nan, 0.0), (0.0, np.inf)])
    def test_rejects_invalid(self, d, k):
        with pytest.raises((ValueError, GeometryError)):
            DriftRecord(d_t=d, kappa_t=k)


class TestTrajectoryLog:
    def test_validates_state_count(self):
        log = TrajectoryLog(
            states=[np.zeros(1)] * 4,
            controls=[np.zeros(1)] * 3,
            observations=[np.zeros(1)] * 3,
            losses=[0.0] * 3,
            drifts=[DriftRecord(0.0, 0.0)] * 3,
        )
        log.validate()

    def test_rejects_mismatched_lengths(self):
        log = TrajectoryLog(
            states=[np.zeros(1)] * 3,
            controls=[np.zeros(1)] * 3,
            observations=[np.zeros(1)] * 3,
            losses=[0.0] * 3,
            drifts=[DriftRecord(0.0, 0.0)] * 3,
        )
        with pytest.raises(ValueError):
            log.validate()


class TestEnvStepLinear:
    def test_zero_sensitivities_keep_theta(self):
        env = make_linear_env()
        env = LinearGaussianEnv(A=np.zeros((2, 2)), B=np.zeros((2, 2)), fam=env.fam, theta0=env.theta0)
        theta = np.array([0.7, -0.2])
        assert np.array_equal(env_step_linear(env, theta, np.ones(2), np.ones(2)), theta)

    def test_identity_control(self):
        env = make_linear_env()
        env = LinearGaussianEnv(A=np.eye(2), B=np.zeros((2, 2)), fam=env.fam, theta0=env.theta0)
        out = env_step_linear(env, np.zeros(2), np.array([0.1, 0.0]), np.zeros(2))
        assert np.allclose(out, [0.1, 0.0])

    def test_matches_matvec_oracle(self):
        for seed in range(10):
            env = make_linear_env(d=3, k=2, seed=seed)
            rng = np.random.default_rng(100 + seed)
            theta = rng.standard_normal(3)
            u = rng.standard_normal(3)
            eta = rng.standard_normal(2)
            expected = theta + env.A @ u + env.B @ eta
            assert np.allclose(env_step_linear(env, theta, u, eta), expected, atol=1e-12)

    def test_dimension_mismatch(self):
        env = make_linear_env()
        with pytest.raises((GeometryError, ValueError)):
            env_step_linear(env, np.zeros(3), np.zeros(2), np.zeros(2))


class TestSampleObservation:
    def test_concentrates_for_tiny_covariance(self):
        fam = GaussianLocationFamily(1e-12 * np.eye(2))
        env = LinearGaussianEnv(A=np.eye(2), B=np.eye(2), fam=fam, theta0=np.zeros(2))
        theta = np.array([1.0, -2.0])
        x = sample_observation(env, theta, np.random.default_rng(0))
        assert np.allclose(x, theta, atol=1e-5)

    def test_deterministic_given_stream(self):
        env = make_linear_env()
        a = sample_observation(env, np.zeros(2), rngmod.stream(7, 0, "obs"))
        b = sample_observation(env, np.zeros(2), rngmod.stream(7, 0, "obs"))
        assert np.array_equal(a, b)

    def test_sample_mean_near_theta(self):
        env = make_linear_env()
        rng = np.random.default_rng(1)
        theta = np.array([2.0, -1.0])
        draws = np.array([sample_observation(env, theta, rng) for _ in range(4000)])
        assert np.allclose(draws.mean(axis=0), theta, atol=0.1)


class TestDriftDecompose:
    def test_matches_norm_oracle(self):
        env = make_linear_env(d=3, k=2, seed=3)
        rng = np.random.default_rng(5)
        u = rng.standard_normal(3)
        eta = rng.standard_normal(2)
        rec = drift_decompose_linear(env, u, eta)
        g = env.fam.metric
        assert rec.d_t == pytest.approx(fisher_norm(g, env.B @ eta), rel=1e-12)
        assert rec.kappa_t == pytest.approx(fisher_norm(g, env.A @ u), rel=1e-12)

    def test_zero_motion(self):
        env = make_linear_env()
        rec = drift_decompose_linear(env, np.zeros(2), np.zeros(2))
        assert rec.d_t == 0.0 and rec.kappa_t == 0.0


class TestTruncateIncrement:
    def setup_method(self):
        self.g = MetricTensor(np.eye(2))

    def test_under_budget_unchanged(self):
        mgr = BudgetManager(per_step_budget=10.0)
        v = np.array([1.0, 1.0])
        assert np.array_equal(truncate_increment(mgr, v, self.g), v)

    def test_over_budget_rescaled_onto_sphere(self):
        mgr = BudgetManager(per_step_budget=1.0)
        v = np.array([3.0, 4.0])
        out = truncate_increment(mgr, v, self.g)
        assert fisher_norm(self.g, out) == pytest.approx(1.0)
        assert np.allclose(out, v / 5.0)

    def test_zero_budget_zeroes(self):
        mgr = BudgetManager(per_step_budget=0.0)
        out = truncate_increment(mgr, np.array([1.0, 2.0]), self.g)
        assert np.array_equal(out, np.zeros(2))

    def test_negative_budget_rejected(self):
        with pytest.raises(ValueError):
            BudgetManager(per_step_budget=-0.1)


def make_teacher(seed=0, noise_sd=0.5):
    rng = np.random.default_rng(seed)
    fmap = RandomFeatureMap.draw(8, 4, rng)
    theta = rng.standard_normal(8)
    return TeacherEnv(feature_map=fmap, theta=theta, noise_sd=noise_sd, fisher_probe_size=64)


class TestTeacherFisher:
    def test_matches_probe_oracle(self):
        env = make_teacher()
        g = teacher_fisher(env, rngmod.stream(3, 0, "fisher"))
        rng = rngmod.stream(3, 0, "fisher")
        x = rng.standard_normal((env.fisher_probe_size, env.feature_map.in_dim))
        phi = env.feature_map.batch(x)
        expected = phi.T @ phi / (env.fisher_probe_size * env.noise_sd**2)
        expected = 0.5 * (expected + expected.T) + TEACHER_FISHER_RIDGE * np.eye(8)
        assert np.allclose(g.matrix, expected, atol=1e-12)

    def test_is_positive_definite(self):
        env = make_teacher(seed=5)
        g = teacher_fisher(env, np.random.default_rng(9))
        assert np.linalg.eigvalsh(g.matrix)[0] > 0

    def test_independent_of_theta(self):
        # linear-in-features model: the Fisher matrix ignores the weights
        env = make_teacher(seed=2)
        moved = TeacherEnv(
            feature_map=env.feature_map,
            theta=env.theta + 5.0,
            noise_sd=env.noise_sd,
            fisher_probe_size=env.fisher_probe_size,
        )
        g1 = teacher_fisher(env, rngmod.stream(4, 0, "f"))
        g2 = teacher_fisher(moved, rngmod.stream(4, 0, "f"))
        assert np.array_equal(g1.matrix, g2.matrix)


class TestTeacherDriftStep:
    def test_exogenous_magnitude_matches_budget(self):
        env = make_teacher()
        new_theta, rec = teacher_drift_step(
            env,
            BudgetManager(0.2),
            BudgetManager(0.0),
            np.zeros(8),
            rngmod.stream(11, 0, "drift"),
        )
        assert rec.d_t == pytest.approx(0.2, rel=1e-9)
        assert rec.kappa_t == 0.0
        g = teacher_fisher(env, rngmod.stream(11, 1, "check"))
        assert fisher_norm(g, new_theta - env.theta) > 0

    def test_endogenous_truncated_to_budget(self):
        env = make_teacher()
        g = teacher_fisher(env, rngmod.stream(12, 0, "f"))
        direction = np.ones(8) * 10.0
        _, rec = teacher_drift_step(
            env,
            BudgetManager(0.0),
            BudgetManager(0.05),
            direction,
            rngmod.stream(12, 1, "drift"),
            g_hat=g,
        )
        assert rec.d_t == 0.0
        assert rec.kappa_t == pytest.approx(0.05, rel=1e-9)

    def test_persistent_exo_direction_used(self):
        env = make_teacher()
        g = teacher_fisher(env, rngmod.stream(13, 0, "f"))
        heading = np.zeros(8)
        heading[0] = 1.0
        new_theta, rec = teacher_drift_step(
            env,
            BudgetManager(0.1),
            BudgetManager(0.0),
            np.zeros(8),
            rngmod.stream(13, 1, "drift"),
            exo_direction=heading,
            g_hat=g,
        )
        step = new_theta - env.theta
        # motion is colinear with the requested heading
        assert np.allclose(step[1:], 0.0)
        assert rec.d_t == pytest.approx(0.1, rel=1e-9)

    def test_zero_budgets_keep_theta(self):
        env = make_teacher()
        new_theta, rec = teacher_drift_step(
            env,
            BudgetManager(0.0),
            BudgetManager(0.0),
            np.zeros(8),
            np.random.default_rng(0),
        )
        assert np.array_equal(new_theta, env.theta)
        assert rec.d_t == 0.0 and rec.kappa_t == 0.0


class TestRngStreams:
    def test_same_key_same_draws(self):
        a = rngmod.stream(42, 3, "data").standard_normal(5)
        b = rngmod.stream(42, 3, "data").standard_normal(5)
        assert np.array_equal(a, b)

    def test_purpose_separates_streams(self):
        a = rngmod.stream(42, 3, "data").standard_normal(5)
        b = rngmod.stream(42, 3, "noise").standard_normal(5)
        assert not np.array_equal(a, b)

    def test_run_index_separates_streams(self):
        a = rngmod.stream(42, 3, "data").standard_normal(5)
        b = rngmod.stream(42, 4, "data").standard_normal(5)
        assert not np.array_equal(a, b)

    def test_seed_separates_streams(self):
        a = rngmod.stream(42, 3, "data").standard_normal(5)
        b = rngmod.stream(43, 3, "data").standard_normal(5)
        assert not np.array_equal(a, b)
