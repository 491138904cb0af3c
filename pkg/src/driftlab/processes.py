"""Drift-feedback environment processes.

Linear-Gaussian environments evolve as theta' = theta + A u + B eta with
observations N(theta, Sigma); the nonlinear teacher carries random-feature
weights perturbed by budgeted exogenous and policy-sensitive increments,
with drift magnitudes measured in a per-step Monte Carlo Fisher estimate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .geometry import (
    GaussianLocationFamily,
    GeometryError,
    MetricTensor,
    fisher_norm,
)

if TYPE_CHECKING:
    from .learners import RandomFeatureMap

__all__ = [
    "DriftRecord",
    "TrajectoryLog",
    "LinearGaussianEnv",
    "TeacherEnv",
    "BudgetManager",
    "env_step_linear",
    "sample_observation",
    "drift_decompose_linear",
    "truncate_increment",
    "teacher_fisher",
    "teacher_drift_step",
]

TEACHER_FISHER_RIDGE = 1e-8


@dataclass(frozen=True)
class DriftRecord:
    """Per-step exogenous (d_t) and policy-sensitive (kappa_t) Fisher magnitudes."""

    d_t: float
    kappa_t: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.d_t) and np.isfinite(self.kappa_t)):
            raise ValueError("drift magnitudes must be finite")
        if self.d_t < 0 or self.kappa_t < 0:
            raise ValueError("drift magnitudes must be nonnegative")


@dataclass
class TrajectoryLog:
    """Ordered record of one run: states has length T+1, the rest length T."""

    states: list = field(default_factory=list)
    controls: list = field(default_factory=list)
    observations: list = field(default_factory=list)
    losses: list = field(default_factory=list)
    drifts: list = field(default_factory=list)

    def validate(self) -> None:
        t = len(self.losses)
        if len(self.states) != t + 1:
            raise ValueError("states must have one more entry than losses")
        for name in ("controls", "observations", "drifts"):
            if len(getattr(self, name)) != t:
                raise ValueError(f"{name} length does not match losses")
        if not np.all(np.isfinite(self.losses)):
            raise ValueError("losses contain non-finite values")


@dataclass(frozen=True)
class LinearGaussianEnv:
    """theta' = theta + A u + B eta with x ~ N(theta, Sigma)."""

    A: np.ndarray
    B: np.ndarray
    fam: GaussianLocationFamily
    theta0: np.ndarray

    def __post_init__(self) -> None:
        a = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.atleast_2d(np.asarray(self.B, dtype=float))
        t0 = np.asarray(self.theta0, dtype=float)
        d = self.fam.dim
        if a.shape[0] != d or b.shape[0] != d or t0.shape != (d,):
            raise GeometryError("inconsistent environment dimensions")
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", b)
        object.__setattr__(self, "theta0", t0)


@dataclass(frozen=True)
class TeacherEnv:
    """Drifting random-feature teacher: y = <phi(x), theta> + N(0, noise_sd^2)."""

    feature_map: "RandomFeatureMap"
    theta: np.ndarray
    noise_sd: float
    fisher_probe_size: int = 256

    def __post_init__(self) -> None:
        if self.noise_sd <= 0:
            raise ValueError("noise_sd must be positive")
        if self.fisher_probe_size < 2:
            raise ValueError("fisher_probe_size must be at least 2")
        th = np.asarray(self.theta, dtype=float)
        if th.shape != (self.feature_map.out_dim,):
            raise GeometryError("teacher weights must match the feature dimension")
        object.__setattr__(self, "theta", th)


@dataclass(frozen=True)
class BudgetManager:
    """Caps the Fisher length of a proposed increment at per_step_budget."""

    per_step_budget: float

    def __post_init__(self) -> None:
        if self.per_step_budget < 0:
            raise ValueError("per_step_budget must be nonnegative")


def env_step_linear(env: LinearGaussianEnv, theta, u, eta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    u = np.asarray(u, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if theta.shape[0] != env.fam.dim:
        raise GeometryError("theta dimension mismatch")
    if u.shape[0] != env.A.shape[1] or eta.shape[0] != env.B.shape[1]:
        raise GeometryError("control/noise dimension mismatch")
    return theta + env.A @ u + env.B @ eta


def sample_observation(
    env: LinearGaussianEnv, theta, rng: np.random.Generator
) -> np.ndarray:
    """One draw from N(theta, Sigma) via the cached Cholesky factor."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape[0] != env.fam.dim:
        raise GeometryError("theta dimension mismatch")
    z = rng.standard_normal(env.fam.dim)
    return theta + env.fam.chol @ z


def drift_decompose_linear(env: LinearGaussianEnv, u, eta) -> DriftRecord:
    """Exact exogenous/policy split of one linear step, in the Sigma^-1 norm."""
    u = np.asarray(u, dtype=float)
    eta = np.asarray(eta, dtype=float)
    g = env.fam.metric
    d_t = fisher_norm(g, env.B @ eta)
    kappa_t = fisher_norm(g, env.A @ u)
    return DriftRecord(d_t=d_t, kappa_t=kappa_t)


def truncate_increment(mgr: BudgetManager, proposed, g: MetricTensor) -> np.ndarray:
    """Rescale `proposed` onto the budget sphere if it exceeds the budget."""
    vec = np.asarray(proposed, dtype=float)
    length = fisher_norm(g, vec)
    if length <= mgr.per_step_budget:
        return vec
    if mgr.per_step_budget == 0.0:
        return np.zeros_like(vec)
    return vec * (mgr.per_step_budget / length)


def teacher_fisher(env: TeacherEnv, rng: np.random.Generator) -> MetricTensor:
    """Monte Carlo Fisher estimate (1 / (n sigma^2)) sum_i phi(x_i) phi(x_i)'.

    Inputs are probed at x ~ N(0, I); a ridge of 1e-8 I keeps the estimate
    SPD even when the probe batch is degenerate.
    """
    n = env.fisher_probe_size
    x = rng.standard_normal((n, env.feature_map.in_dim))
    phi = env.feature_map.batch(x)
    g = phi.T @ phi / (n * env.noise_sd**2)
    g = 0.5 * (g + g.T) + TEACHER_FISHER_RIDGE * np.eye(phi.shape[1])
    return MetricTensor(g)


def teacher_drift_step(
    env: TeacherEnv,
    exo_mgr: BudgetManager,
    endo_mgr: BudgetManager,
    endo_direction,
    rng: np.random.Generator,
    exo_direction=None,
    g_hat: MetricTensor | None = None,
) -> tuple[np.ndarray, DriftRecord]:
    """Advance the teacher by one exogenous plus one policy-sensitive increment.

    The exogenous increment follows `exo_direction` (a fresh random direction
    when omitted) scaled to exactly the exogenous budget in the probe Fisher
    estimate; the policy-sensitive increment is `endo_direction` truncated to
    the endogenous budget. Both magnitudes are reported in the same estimate.
    Pass `g_hat` to reuse a precomputed metric (the teacher family is linear
    in frozen features, so its Fisher matrix does not depend on theta).
    """
    if g_hat is None:
        g_hat = teacher_fisher(env, rng)
    m = env.feature_map.out_dim

    exo = np.zeros(m)
    if exo_mgr.per_step_budget > 0:
        z = rng.standard_normal(m) if exo_direction is None else np.asarray(
            exo_direction, dtype=float
        )
        z_len = fisher_norm(g_hat, z)
        if z_len > 0:
            exo = z * (exo_mgr.per_step_budget / z_len)

    endo = truncate_increment(endo_mgr, np.asarray(endo_direction, dtype=float), g_hat)

    record = DriftRecord(
        d_t=fisher_norm(g_hat, exo),
        kappa_t=fisher_norm(g_hat, endo),
    )
    return env.theta + exo + endo, record
