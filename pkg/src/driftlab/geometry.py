"""Fisher-Rao geometry for the closed-form families used by the simulators.

Two families are supported: Gaussian location models with fixed covariance
(constant metric, straight-line geodesics) and one-dimensional exponential
families given by their log-partition function. Everything here is a pure
function of immutable values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "GeometryError",
    "MetricTensor",
    "GaussianLocationFamily",
    "ExpFamily1D",
    "gaussian_unit_variance_family",
    "bernoulli_natural_family",
    "fisher_norm",
    "fisher_distance_gaussian",
    "kl_gaussian_location",
    "kl_exp_family_exact",
    "kl_expansion_remainder",
    "path_length",
]

_SPD_REL_TOL = 1e-12


class GeometryError(ValueError):
    """Raised for dimension mismatches and non-SPD metric inputs."""


def _as_vector(v, dim: int | None = None) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        raise GeometryError(f"expected a 1-d vector, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise GeometryError(f"dimension mismatch: expected {dim}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise GeometryError("vector has non-finite entries")
    return arr


@dataclass(frozen=True)
class MetricTensor:
    """Symmetric positive-definite matrix acting as a Riemannian metric."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise GeometryError(f"metric must be square, got shape {m.shape}")
        if not np.allclose(m, m.T, atol=1e-12):
            raise GeometryError("metric is not symmetric to 1e-12")
        eigvals = np.linalg.eigvalsh(m)
        if eigvals[0] <= _SPD_REL_TOL * max(eigvals[-1], 1.0):
            raise GeometryError("metric is not positive definite")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class GaussianLocationFamily:
    """N(theta, Sigma) with fixed covariance; the Fisher metric is Sigma^-1."""

    sigma: np.ndarray
    precision: np.ndarray = field(init=False, repr=False)
    chol: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        s = np.asarray(self.sigma, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise GeometryError(f"covariance must be square, got shape {s.shape}")
        if not np.allclose(s, s.T, atol=1e-12):
            raise GeometryError("covariance is not symmetric")
        try:
            chol = np.linalg.cholesky(s)
        except np.linalg.LinAlgError as exc:
            raise GeometryError("covariance is not positive definite") from exc
        # Sigma^-1 from the Cholesky factor; cached once per family.
        eye = np.eye(s.shape[0])
        inv_l = np.linalg.solve(chol, eye)
        precision = inv_l.T @ inv_l
        precision = 0.5 * (precision + precision.T)
        object.__setattr__(self, "sigma", s)
        object.__setattr__(self, "chol", chol)
        object.__setattr__(self, "precision", precision)

    @property
    def dim(self) -> int:
        return self.sigma.shape[0]

    @property
    def metric(self) -> MetricTensor:
        return MetricTensor(self.precision)


@dataclass(frozen=True)
class ExpFamily1D:
    """One-dimensional exponential family given by its log-partition A.

    `log_partition`, `d1`, `d2` are A, A', A''; the Fisher information at
    theta is A''(theta), required positive on (lo, hi).
    """

    log_partition: Callable[[float], float]
    d1: Callable[[float], float]
    d2: Callable[[float], float]
    lo: float = -np.inf
    hi: float = np.inf

    def _check(self, theta: float) -> None:
        if not (self.lo <= theta <= self.hi):
            raise GeometryError(f"theta={theta} outside working interval")
        if self.d2(theta) <= 0:
            raise GeometryError(f"Fisher information not positive at theta={theta}")


def gaussian_unit_variance_family() -> ExpFamily1D:
    """N(theta, 1) in its natural parameter: A(theta) = theta^2 / 2."""
    return ExpFamily1D(
        log_partition=lambda t: 0.5 * t * t,
        d1=lambda t: t,
        d2=lambda t: 1.0,
    )


def bernoulli_natural_family() -> ExpFamily1D:
    """Bernoulli in the natural (logit) parameter: A(theta) = log(1 + e^theta)."""

    def sig(t: float) -> float:
        return 1.0 / (1.0 + np.exp(-t))

    return ExpFamily1D(
        log_partition=lambda t: float(np.logaddexp(0.0, t)),
        d1=sig,
        d2=lambda t: sig(t) * (1.0 - sig(t)),
    )


def fisher_norm(g: MetricTensor, v) -> float:
    """sqrt(v' g v): length of a tangent vector under the metric g."""
    vec = _as_vector(v, g.dim)
    val = float(vec @ g.matrix @ vec)
    # quadratic forms of SPD matrices can round slightly negative at zero
    return float(np.sqrt(max(val, 0.0)))


def fisher_distance_gaussian(fam: GaussianLocationFamily, a, b) -> float:
    """Geodesic distance ||b - a||_{Sigma^-1}; exact for the constant metric."""
    av = _as_vector(a, fam.dim)
    bv = _as_vector(b, fam.dim)
    return fisher_norm(fam.metric, bv - av)


def kl_gaussian_location(fam: GaussianLocationFamily, delta) -> float:
    """KL(N(theta+delta, Sigma) || N(theta, Sigma)) = 0.5 delta' Sigma^-1 delta."""
    d = _as_vector(delta, fam.dim)
    return 0.5 * float(d @ fam.precision @ d)


def kl_exp_family_exact(fam: ExpFamily1D, theta: float, delta: float) -> float:
    """Exact KL(p_{theta+delta} || p_theta) via the log-partition Bregman form."""
    fam._check(theta)
    fam._check(theta + delta)
    return (
        fam.log_partition(theta)
        - fam.log_partition(theta + delta)
        + delta * fam.d1(theta + delta)
    )


def kl_expansion_remainder(fam: ExpFamily1D, theta: float, delta: float) -> float:
    """|KL_exact - 0.5 A''(theta) delta^2| / delta^2.

    Measures how fast the quadratic local expansion of KL becomes exact;
    tends to 0 as delta -> 0, linearly when A''' does not vanish at theta.
    """
    if delta == 0:
        raise GeometryError("remainder ratio undefined at delta = 0")
    exact = kl_exp_family_exact(fam, theta, delta)
    quad = 0.5 * fam.d2(theta) * delta * delta
    return abs(exact - quad) / (delta * delta)


def path_length(
    points: Sequence, metric_at: Callable[[np.ndarray], MetricTensor]
) -> float:
    """Discrete path length sum_t ||p_{t+1} - p_t|| in the metric at p_t.

    The metric is evaluated at each segment's start point. A single point
    has length zero, and the sum is additive under concatenation.
    """
    pts = [np.asarray(p, dtype=float) for p in points]
    if len(pts) == 0:
        raise GeometryError("path_length requires at least one point")
    dim = pts[0].shape[0]
    total = 0.0
    for start, end in zip(pts[:-1], pts[1:]):
        if start.shape[0] != dim or end.shape[0] != dim:
            raise GeometryError("inconsistent dimensions along the path")
        total += fisher_norm(metric_at(start), end - start)
    return total
