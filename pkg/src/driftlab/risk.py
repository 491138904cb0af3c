"""Trajectory risks, the generalization gap, and the martingale deviation check."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import GaussianLocationFamily, GeometryError
from .learners import TwoLayerNet, net_forward_batch
from .processes import TeacherEnv

__all__ = [
    "RiskRecord",
    "empirical_risk",
    "population_risk_gaussian_mean",
    "population_risk_mc",
    "gap",
    "martingale_bound_check",
]


@dataclass(frozen=True)
class RiskRecord:
    empirical: float
    population: float
    gap: float

    @classmethod
    def of(cls, empirical: float, population: float) -> "RiskRecord":
        return cls(empirical=empirical, population=population, gap=abs(empirical - population))


def empirical_risk(losses: Sequence[float]) -> float:
    arr = np.asarray(losses, dtype=float)
    if arr.size == 0:
        raise ValueError("empirical risk of an empty loss sequence is undefined")
    return float(arr.mean())


def population_risk_gaussian_mean(fam: GaussianLocationFamily, theta, mu_hat) -> float:
    """Closed-form squared-error risk tr(Sigma) + ||theta - mu_hat||^2."""
    theta = np.asarray(theta, dtype=float)
    mu_hat = np.asarray(mu_hat, dtype=float)
    if theta.shape != (fam.dim,) or mu_hat.shape != (fam.dim,):
        raise GeometryError("dimension mismatch")
    diff = theta - mu_hat
    return float(np.trace(fam.sigma) + diff @ diff)


def population_risk_mc(
    env: TeacherEnv, net: TwoLayerNet, n: int, rng: np.random.Generator
) -> float:
    """Unbiased Monte Carlo estimate of the population MSE on clean draws."""
    if n < 1:
        raise ValueError("need at least one sample")
    x = rng.standard_normal((n, env.feature_map.in_dim))
    phi = env.feature_map.batch(x)
    y = phi @ env.theta + env.noise_sd * rng.standard_normal(n)
    pred = net_forward_batch(net, x)
    return float(np.mean((pred - y) ** 2))


def gap(empirical: float, population: float) -> float:
    if not (np.isfinite(empirical) and np.isfinite(population)):
        raise ValueError("risks must be finite")
    return abs(empirical - population)


def martingale_bound_check(
    sigma: float, T: int, reps: int, rng: np.random.Generator
) -> dict:
    """Monte Carlo check that E|S_T| <= sigma sqrt(2 pi T) for Gaussian
    martingale difference sums S_T = sum of N(0, sigma^2) increments."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if T < 1 or reps < 1:
        raise ValueError("T and reps must be positive")
    if sigma == 0.0:
        empirical = 0.0
    else:
        sums = sigma * rng.standard_normal((reps, T)).sum(axis=1)
        empirical = float(np.mean(np.abs(sums)))
    bound = sigma * np.sqrt(2.0 * np.pi * T)
    return {
        "empirical_mean_abs": empirical,
        "bound": float(bound),
        "ok": bool(empirical <= bound),
    }
