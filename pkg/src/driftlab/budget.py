"""Drift budgets and the speed-limit regressions.

The budget C_T = sum_t (d_t + alpha * kappa_t) combines exogenous and
policy-sensitive Fisher motion; ordinary least squares on configuration-level
gaps calibrates the mixing factor alpha and tests the one-dimensional
collapse against C_T / T.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .processes import DriftRecord

__all__ = [
    "BudgetSummary",
    "RegressionFit",
    "compute_budget",
    "ols_fit",
    "calibrate_alpha",
    "collapse_fit",
    "ablation_compare",
]

_RANK_REL_TOL = 1e-10

LABEL_INTERCEPT = "intercept"
LABEL_INV_SQRT_T = "inv_sqrt_T"
LABEL_D_RATE = "d_rate"
LABEL_KAPPA_RATE = "kappa_rate"
LABEL_BUDGET_RATE = "budget_rate"


class RankDeficientDesign(ValueError):
    """Design matrix columns are (numerically) linearly dependent."""


@dataclass(frozen=True)
class BudgetSummary:
    sum_d: float
    sum_kappa: float
    alpha: float
    c_t: float


@dataclass(frozen=True)
class RegressionFit:
    coefficients: np.ndarray
    r_squared: float
    residuals: np.ndarray
    design_labels: tuple[str, ...]

    def coef(self, label: str) -> float:
        try:
            idx = self.design_labels.index(label)
        except ValueError as exc:
            raise KeyError(f"no regressor labeled {label!r}") from exc
        return float(self.coefficients[idx])


def compute_budget(drifts: Sequence[DriftRecord], alpha: float) -> BudgetSummary:
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    sum_d = float(sum(r.d_t for r in drifts))
    sum_kappa = float(sum(r.kappa_t for r in drifts))
    return BudgetSummary(
        sum_d=sum_d,
        sum_kappa=sum_kappa,
        alpha=float(alpha),
        c_t=sum_d + alpha * sum_kappa,
    )


def ols_fit(design: np.ndarray, targets, labels: Sequence[str] | None = None) -> RegressionFit:
    """Least squares via QR, with centered R^2 when an intercept is present.

    Degenerate targets (zero centered variance) get R^2 = 1 when the
    residuals vanish and 0 otherwise, so grid sweeps never divide by zero.
    """
    x = np.atleast_2d(np.asarray(design, dtype=float))
    y = np.asarray(targets, dtype=float)
    n, p = x.shape
    if y.shape != (n,):
        raise ValueError("targets must match the number of design rows")
    if n < p:
        raise RankDeficientDesign(f"need at least {p} rows, got {n}")
    svals = np.linalg.svd(x, compute_uv=False)
    if svals[-1] <= _RANK_REL_TOL * svals[0]:
        raise RankDeficientDesign("design matrix is rank deficient")
    if labels is None:
        labels = tuple(f"x{j}" for j in range(p))
    labels = tuple(labels)
    if len(labels) != p:
        raise ValueError("one label per design column required")

    q, r = np.linalg.qr(x)
    beta = np.linalg.solve(r, q.T @ y)
    fitted = x @ beta
    resid = y - fitted

    has_intercept = any(np.allclose(x[:, j], x[0, j]) and x[0, j] != 0 for j in range(p))
    ss_res = float(resid @ resid)
    centered = y - y.mean() if has_intercept else y
    ss_tot = float(centered @ centered)
    if ss_tot <= 1e-300:
        r2 = 1.0 if ss_res <= 1e-24 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return RegressionFit(
        coefficients=beta, r_squared=r2, residuals=resid, design_labels=labels
    )


def calibrate_alpha(fit: RegressionFit) -> float:
    """alpha* = b_kappa / b_d from a fit with labeled drift-rate columns."""
    b1 = fit.coef(LABEL_D_RATE)
    b2 = fit.coef(LABEL_KAPPA_RATE)
    if b1 <= 0:
        raise ValueError(
            "calibration invalid: exogenous coefficient is not positive "
            "(sweep produced no exogenous signal)"
        )
    return b2 / b1


def _variance_column(horizons: np.ndarray) -> np.ndarray:
    return 1.0 / np.sqrt(horizons)


def collapse_fit(gaps, budget_rates, horizons) -> RegressionFit:
    """Fit gap = c0 + c1 T^{-1/2} + c2 (C_T / T).

    When all horizons coincide the variance column is collinear with the
    intercept and is dropped, leaving the pure one-dimensional collapse.
    """
    gaps = np.asarray(gaps, dtype=float)
    rates = np.asarray(budget_rates, dtype=float)
    hs = np.asarray(horizons, dtype=float)
    if not (gaps.shape == rates.shape == hs.shape) or gaps.ndim != 1:
        raise ValueError("gaps, budget_rates, horizons must be equal-length vectors")
    if gaps.size < 3:
        raise ValueError("need at least 3 points")
    ones = np.ones_like(gaps)
    var_col = _variance_column(hs)
    if np.allclose(var_col, var_col[0]):
        design = np.column_stack([ones, rates])
        labels = (LABEL_INTERCEPT, LABEL_BUDGET_RATE)
    else:
        design = np.column_stack([ones, var_col, rates])
        labels = (LABEL_INTERCEPT, LABEL_INV_SQRT_T, LABEL_BUDGET_RATE)
    return ols_fit(design, gaps, labels)


def ablation_compare(gaps, d_rates, kappa_rates, budget_rates, horizons) -> dict:
    """R^2 of the full additive model against its two nested ablations.

    full:        intercept + T^{-1/2} + d_rate + kappa_rate
    no_budget:   intercept + T^{-1/2}
    no_variance: intercept + d_rate + kappa_rate
    """
    gaps = np.asarray(gaps, dtype=float)
    d_rates = np.asarray(d_rates, dtype=float)
    kappa_rates = np.asarray(kappa_rates, dtype=float)
    hs = np.asarray(horizons, dtype=float)
    for arr in (d_rates, kappa_rates, np.asarray(budget_rates, float), hs):
        if arr.shape != gaps.shape:
            raise ValueError("all inputs must share the gap vector's length")
    ones = np.ones_like(gaps)
    var_col = _variance_column(hs)
    full = ols_fit(
        np.column_stack([ones, var_col, d_rates, kappa_rates]),
        gaps,
        (LABEL_INTERCEPT, LABEL_INV_SQRT_T, LABEL_D_RATE, LABEL_KAPPA_RATE),
    )
    no_budget = ols_fit(
        np.column_stack([ones, var_col]), gaps, (LABEL_INTERCEPT, LABEL_INV_SQRT_T)
    )
    no_variance = ols_fit(
        np.column_stack([ones, d_rates, kappa_rates]),
        gaps,
        (LABEL_INTERCEPT, LABEL_D_RATE, LABEL_KAPPA_RATE),
    )
    return {
        "r2_full": full.r_squared,
        "r2_no_budget": no_budget.r_squared,
        "r2_no_variance": no_variance.r_squared,
    }
