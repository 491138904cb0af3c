"""Learner families: online mean, two-layer tanh network, and the matched
multiplicative-decrease Euclidean / natural-gradient pair."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .geometry import GaussianLocationFamily, GeometryError, MetricTensor, fisher_norm
from .processes import TeacherEnv

__all__ = [
    "OnlineMeanEstimator",
    "RandomFeatureMap",
    "TwoLayerNet",
    "QuadOptState",
    "mean_update",
    "rf_features",
    "net_forward",
    "net_sgd_step",
    "disagreement_direction",
    "euclidean_step_matched",
    "natural_step_matched",
]


@dataclass(frozen=True)
class OnlineMeanEstimator:
    """Running arithmetic mean of the observations consumed so far."""

    mu_hat: np.ndarray
    count: int = 0

    @classmethod
    def fresh(cls, dim: int) -> "OnlineMeanEstimator":
        return cls(mu_hat=np.zeros(dim), count=0)


def mean_update(est: OnlineMeanEstimator, x) -> OnlineMeanEstimator:
    x = np.asarray(x, dtype=float)
    if x.shape != est.mu_hat.shape:
        raise GeometryError("observation dimension mismatch")
    count = est.count + 1
    return OnlineMeanEstimator(mu_hat=est.mu_hat + (x - est.mu_hat) / count, count=count)


@dataclass(frozen=True)
class RandomFeatureMap:
    """Frozen feature map phi(x) = scale * tanh(W x)."""

    W: np.ndarray
    scale: float = 1.0

    def __post_init__(self) -> None:
        w = np.atleast_2d(np.asarray(self.W, dtype=float))
        object.__setattr__(self, "W", w)

    @classmethod
    def draw(
        cls, out_dim: int, in_dim: int, rng: np.random.Generator, scale: float = 1.0
    ) -> "RandomFeatureMap":
        return cls(W=rng.standard_normal((out_dim, in_dim)) / np.sqrt(in_dim), scale=scale)

    @property
    def in_dim(self) -> int:
        return self.W.shape[1]

    @property
    def out_dim(self) -> int:
        return self.W.shape[0]

    def batch(self, x: np.ndarray) -> np.ndarray:
        """Features for a batch of rows."""
        return self.scale * np.tanh(x @ self.W.T)


def rf_features(fmap: RandomFeatureMap, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (fmap.in_dim,):
        raise GeometryError("input dimension mismatch")
    return fmap.scale * np.tanh(fmap.W @ x)


@dataclass(frozen=True)
class TwoLayerNet:
    """Scalar-output perceptron: W2 tanh(W1 x + b1) + b2."""

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: float

    @classmethod
    def init(
        cls, in_dim: int, hidden: int, rng: np.random.Generator
    ) -> "TwoLayerNet":
        return cls(
            W1=rng.standard_normal((hidden, in_dim)) / np.sqrt(in_dim),
            b1=np.zeros(hidden),
            W2=rng.standard_normal((1, hidden)) / np.sqrt(hidden),
            b2=0.0,
        )


def net_forward(net: TwoLayerNet, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (net.W1.shape[1],):
        raise GeometryError("input dimension mismatch")
    h = np.tanh(net.W1 @ x + net.b1)
    return float(net.W2.ravel() @ h + net.b2)


def net_forward_batch(net: TwoLayerNet, x: np.ndarray) -> np.ndarray:
    h = np.tanh(x @ net.W1.T + net.b1)
    return (h @ net.W2.ravel()) + net.b2


def net_sgd_step(net: TwoLayerNet, x, y: float, lr: float) -> TwoLayerNet:
    """One exact-gradient step on the squared loss 0.5 (net(x) - y)^2."""
    if lr <= 0:
        raise ValueError("learning rate must be positive")
    x = np.asarray(x, dtype=float)
    pre = net.W1 @ x + net.b1
    h = np.tanh(pre)
    out = float(net.W2.ravel() @ h + net.b2)
    err = out - y

    g_b2 = err
    g_W2 = err * h[None, :]
    back = err * net.W2.ravel() * (1.0 - h * h)
    g_b1 = back
    g_W1 = np.outer(back, x)

    for g in (g_W1, g_b1, g_W2):
        if not np.all(np.isfinite(g)):
            raise FloatingPointError("non-finite gradient: run diverged")

    return TwoLayerNet(
        W1=net.W1 - lr * g_W1,
        b1=net.b1 - lr * g_b1,
        W2=net.W2 - lr * g_W2,
        b2=net.b2 - lr * g_b2,
    )


def disagreement_direction(
    net: TwoLayerNet, env: TeacherEnv, probe: np.ndarray, g_hat: MetricTensor
) -> np.ndarray:
    """Fisher-unit direction along which moving the teacher weights increases
    the mean squared teacher/network disagreement on the probe batch.

    Returns the zero vector when the gradient vanishes (exact agreement).
    """
    probe = np.atleast_2d(np.asarray(probe, dtype=float))
    if probe.shape[0] == 0:
        raise ValueError("probe batch must be nonempty")
    phi = env.feature_map.batch(probe)
    teacher_out = phi @ env.theta
    net_out = net_forward_batch(net, probe)
    grad = 2.0 * phi.T @ (teacher_out - net_out) / probe.shape[0]
    length = fisher_norm(g_hat, grad)
    if length == 0.0:
        return np.zeros_like(grad)
    return grad / length


@dataclass(frozen=True)
class QuadOptState:
    """State for matched-decrease descent on J(theta) = 0.5 ||theta||^2.

    Motion is measured in the Fisher metric Sigma^-1 supplied by `fam`; both
    step rules force J(theta') = rho * J(theta) whenever attainable.
    """

    theta: np.ndarray
    fam: GaussianLocationFamily
    rho: float
    j_target_ratio: float

    def __post_init__(self) -> None:
        if not (0.0 < self.rho < 1.0):
            raise ValueError("rho must lie in (0, 1)")
        if not (0.0 < self.j_target_ratio < 1.0):
            raise ValueError("j_target_ratio must lie in (0, 1)")
        th = np.asarray(self.theta, dtype=float)
        if th.shape != (self.fam.dim,):
            raise GeometryError("theta dimension must match the family")
        object.__setattr__(self, "theta", th)

    @property
    def objective(self) -> float:
        return 0.5 * float(self.theta @ self.theta)


def euclidean_step_matched(s: QuadOptState) -> QuadOptState:
    """Scale theta by sqrt(rho): the gradient-direction step with exact
    multiplicative decrease rho in J."""
    if not np.any(s.theta):
        raise ValueError("theta = 0: already at the optimum")
    return replace(s, theta=np.sqrt(s.rho) * s.theta)


def natural_step_matched(s: QuadOptState) -> QuadOptState:
    """Step along the natural-gradient ray -Sigma theta.

    Uses the smallest positive eta with ||theta - eta Sigma theta||^2 =
    rho ||theta||^2; when no such root exists the ray minimizer is taken
    instead, which overshoots below the target ratio.
    """
    if not np.any(s.theta):
        raise ValueError("theta = 0: already at the optimum")
    direction = s.fam.sigma @ s.theta
    a = float(direction @ direction)
    b = 2.0 * float(s.theta @ direction)
    c = (1.0 - s.rho) * float(s.theta @ s.theta)
    disc = b * b - 4.0 * a * c
    if disc >= 0.0:
        eta = (b - np.sqrt(disc)) / (2.0 * a)
    else:
        eta = b / (2.0 * a)
    return replace(s, theta=s.theta - eta * direction)
