"""Executable mechanics of the Fano minimax construction.

A Gilbert-Varshamov codebook indexes a family of geodesic excursion
processes in a unit-Fisher 1-D Gaussian model; blocks visit theta0 +/- delta
and return, so path length grows linearly in delta while the KL divergence
between processes grows quadratically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Codebook",
    "ExcursionProcess",
    "greedy_gv_codebook",
    "excursion_trajectory",
    "excursion_budget",
    "pairwise_kl",
    "risk_separation",
    "fano_condition",
    "gv_size_bound",
]


@dataclass(frozen=True)
class Codebook:
    """Set of +/-1 words of length m with pairwise Hamming distance >= d_min."""

    m: int
    words: np.ndarray
    d_min: int

    def __post_init__(self) -> None:
        w = np.asarray(self.words, dtype=int)
        if w.ndim != 2 or w.shape[1] != self.m:
            raise ValueError("words must be an (n, m) array")
        if not np.all(np.abs(w) == 1):
            raise ValueError("codewords must have +/-1 entries")
        object.__setattr__(self, "words", w)

    @property
    def size(self) -> int:
        return self.words.shape[0]


@dataclass(frozen=True)
class ExcursionProcess:
    """Two-step geodesic loops theta0 -> theta0 + v_j delta -> theta0."""

    codeword: np.ndarray
    delta: float
    theta0: float
    T: int

    def __post_init__(self) -> None:
        cw = np.asarray(self.codeword, dtype=int)
        if not np.all(np.abs(cw) == 1):
            raise ValueError("codeword must have +/-1 entries")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        if self.T < 2 * cw.size:
            raise ValueError("horizon must cover all 2m block steps")
        object.__setattr__(self, "codeword", cw)

    @property
    def m(self) -> int:
        return self.codeword.size


def hamming(v, w) -> int:
    v = np.asarray(v, dtype=int)
    w = np.asarray(w, dtype=int)
    if v.shape != w.shape:
        raise ValueError("codeword length mismatch")
    return int(np.sum(v != w))


def gv_size_bound(m: int, d_min: int) -> int:
    """Gilbert-Varshamov guarantee: ceil(2^m / sum_{i<d_min} C(m, i))."""
    ball = sum(math.comb(m, i) for i in range(d_min))
    return math.ceil(2**m / ball)


def greedy_gv_codebook(m: int, d_min: int, rng: np.random.Generator) -> Codebook:
    """Greedy scan of all +/-1 words in seeded-random order, keeping words at
    Hamming distance >= d_min from everything already accepted."""
    if not (1 <= d_min <= m):
        raise ValueError("need 1 <= d_min <= m")
    order = rng.permutation(2**m)
    accepted: list[np.ndarray] = []
    for code in order:
        bits = (code >> np.arange(m)) & 1
        word = 2 * bits.astype(int) - 1
        if all(hamming(word, prev) >= d_min for prev in accepted):
            accepted.append(word)
    return Codebook(m=m, words=np.array(accepted), d_min=d_min)


def excursion_trajectory(p: ExcursionProcess) -> np.ndarray:
    """Parameter sequence theta_1 .. theta_{T+1} of the excursion process.

    Controls u_{2j-1} = v_j delta, u_{2j} = -v_j delta cancel within each
    block, so odd block steps (and everything after step 2m) sit at theta0.
    """
    traj = np.full(p.T + 1, p.theta0, dtype=float)
    for j in range(p.m):
        traj[2 * j + 1] = p.theta0 + p.codeword[j] * p.delta
    return traj


def excursion_budget(p: ExcursionProcess) -> float:
    """Total policy-sensitive Fisher motion sum_t |u_t| = 2 m delta."""
    return 2.0 * p.m * p.delta


def pairwise_kl(v, w, delta: float) -> float:
    """Exact KL between two excursion processes in the unit-variance model.

    Only even steps of disagreeing blocks differ, each contributing the
    Gaussian KL 0.5 (2 delta)^2, so the total is 2 k delta^2 for Hamming
    distance k.
    """
    k = hamming(v, w)
    return 2.0 * k * delta * delta


def risk_separation(v, w, delta: float, T: int, loss_slope: float) -> float:
    """Risk gap |R_T(P_v) - R_T(P_w)| for the linear loss c0 * theta.

    Disagreeing blocks place the even-step parameter at theta0 +/- delta,
    a spread of 2 delta, so the time-averaged risks differ by exactly
    2 c0 delta k / T.
    """
    k = hamming(v, w)
    if T < 2 * np.asarray(v).size:
        raise ValueError("horizon must cover all blocks")
    return 2.0 * abs(loss_slope) * delta * k / T


def fano_condition(m: int, delta: float, codebook_size: int, alpha_frac: float) -> bool:
    """True when the worst-case KL 2 m delta^2 fits under (alpha/4) log|V|."""
    if codebook_size < 2:
        raise ValueError("codebook must contain at least two words")
    if not (0.0 < alpha_frac < 1.0):
        raise ValueError("alpha_frac must lie in (0, 1)")
    return 2.0 * m * delta * delta <= (alpha_frac / 4.0) * math.log(codebook_size)
