"""driftlab: drift-feedback learning simulations and Fisher drift budgets."""

from . import budget, geometry, learners, lowerbound, processes, risk, rng

__all__ = ["budget", "geometry", "learners", "lowerbound", "processes", "risk", "rng"]
__version__ = "0.1.0"
