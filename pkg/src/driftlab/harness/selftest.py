"""Built-in oracle checks runnable without pytest (`driftlab selftest`)."""

from __future__ import annotations

import math

import numpy as np

from .. import rng as rngmod
from ..budget import compute_budget
from ..geometry import (
    GaussianLocationFamily,
    MetricTensor,
    bernoulli_natural_family,
    fisher_distance_gaussian,
    fisher_norm,
    gaussian_unit_variance_family,
    kl_expansion_remainder,
    kl_gaussian_location,
    path_length,
)
from ..learners import (
    OnlineMeanEstimator,
    QuadOptState,
    euclidean_step_matched,
    mean_update,
)
from ..lowerbound import (
    ExcursionProcess,
    fano_condition,
    greedy_gv_codebook,
    pairwise_kl,
    risk_separation,
)
from ..processes import BudgetManager, DriftRecord, truncate_increment
from ..risk import empirical_risk, gap, martingale_bound_check

__all__ = ["run_selftest"]


def _checks():
    eye2 = MetricTensor(np.eye(2))
    fam_i2 = GaussianLocationFamily(np.eye(2))
    fam_diag = GaussianLocationFamily(np.diag([4.0, 1.0]))

    yield "fisher_norm identity (3,4) -> 5", lambda: math.isclose(
        fisher_norm(eye2, [3.0, 4.0]), 5.0
    )
    yield "fisher_norm diag(1/4,1) (2,0) -> 1", lambda: math.isclose(
        fisher_norm(MetricTensor(np.diag([0.25, 1.0])), [2.0, 0.0]), 1.0
    )
    yield "gaussian distance I2 (0,0)-(3,4) -> 5", lambda: math.isclose(
        fisher_distance_gaussian(fam_i2, [0, 0], [3, 4]), 5.0
    )
    yield "gaussian distance diag(4,1) (2,0) -> 1", lambda: math.isclose(
        fisher_distance_gaussian(fam_diag, [0, 0], [2, 0]), 1.0
    )
    yield "gaussian KL I delta=(1,0) -> 0.5", lambda: math.isclose(
        kl_gaussian_location(fam_i2, [1.0, 0.0]), 0.5
    )
    yield "gaussian KL diag(4,1) delta=(2,0) -> 0.5", lambda: math.isclose(
        kl_gaussian_location(fam_diag, [2.0, 0.0]), 0.5
    )
    yield "unit-variance family has exact quadratic KL", lambda: (
        kl_expansion_remainder(gaussian_unit_variance_family(), 0.7, 0.3) < 1e-12
    )
    yield "bernoulli remainder ratio small at delta=0.1", lambda: (
        kl_expansion_remainder(bernoulli_natural_family(), 0.0, 0.1) < 0.05
    )
    yield "path_length 10 steps of 0.2 -> 2.0", lambda: math.isclose(
        path_length(
            [np.array([0.2 * t, 0.0]) for t in range(11)], lambda p: eye2
        ),
        2.0,
    )
    yield "mean_update two points -> midpoint", lambda: math.isclose(
        mean_update(mean_update(OnlineMeanEstimator.fresh(1), [0.0]), [2.0]).mu_hat[0],
        1.0,
    )
    yield "euclidean matched step rho=0.81 scales by 0.9", lambda: np.allclose(
        euclidean_step_matched(
            QuadOptState(np.array([1.0, -2.0]), fam_i2, 0.81, 1e-4)
        ).theta,
        0.9 * np.array([1.0, -2.0]),
    )
    yield "euclidean matched step count = 44", lambda: (
        math.ceil(math.log(1e-4) / math.log(0.81)) == 44
    )
    yield "truncate: over-budget proposal lands on budget sphere", lambda: math.isclose(
        fisher_norm(eye2, truncate_increment(BudgetManager(0.1), [0.2, 0.0], eye2)),
        0.1,
    )
    yield "empirical_risk (2,4) -> 3", lambda: empirical_risk([2.0, 4.0]) == 3.0
    yield "gap (2,5) -> 3", lambda: gap(2.0, 5.0) == 3.0
    yield "martingale bound sigma=1 T=100", lambda: martingale_bound_check(
        1.0, 100, 2000, rngmod.stream(0, 0, "selftest-martingale")
    )["ok"]
    yield "budget (1,1)+(2,2) alpha=0.5 -> 4", lambda: math.isclose(
        compute_budget(
            [DriftRecord(1.0, 2.0), DriftRecord(1.0, 2.0)], alpha=0.5
        ).c_t,
        4.0,
    )
    yield "GV codebook m=4 d_min=1 -> all 16 words", lambda: (
        greedy_gv_codebook(4, 1, rngmod.stream(0, 0, "selftest-gv")).size == 16
    )
    yield "pairwise KL k=3 delta=0.1 -> 0.06", lambda: math.isclose(
        pairwise_kl([1, 1, 1, 1], [-1, -1, -1, 1], 0.1), 0.06
    )
    yield "risk separation antipodal -> 2 m delta / T", lambda: math.isclose(
        risk_separation([1, 1], [-1, -1], 0.1, 10, 1.0), 2 * 2 * 0.1 / 10
    )
    yield "excursion budget m=5 delta=0.1 -> 1.0", lambda: math.isclose(
        2.0 * ExcursionProcess(np.ones(5, dtype=int), 0.1, 0.0, 10).m * 0.1, 1.0
    )
    yield "fano condition true at delta=0", lambda: fano_condition(
        64, 0.0, 2**32, 0.5
    )


def run_selftest() -> int:
    failures = 0
    for name, check in _checks():
        try:
            ok = bool(check())
        except Exception as exc:  # surface the failure, keep going
            ok = False
            name = f"{name} (raised {type(exc).__name__}: {exc})"
        print(f"[{'PASS' if ok else 'FAIL'}] {name}")
        failures += 0 if ok else 1
    print(f"selftest: {failures} failure(s)")
    return 0 if failures == 0 else 1
