"""Solver configuration, status codes and the exception hierarchy."""
from __future__ import annotations

import enum
from dataclasses import dataclass


class Status(str, enum.Enum):
    CONVERGED = "converged"
    APPROX_ONLY = "approx_only"
    MAX_ITERS = "max_iters"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class SolverConfig:
    """Knobs shared by the iterative solvers.

    Attributes:
        tol: residual threshold for convergence (inf-norm of margin error).
        max_iters: hard cap on iterations.
        eps_pattern: an entry below this is treated as vanishing.
        rate_window: number of trailing records used by rate estimation.
        pattern_check: let RAS/Menon consult the flow test when convergence
            stalls, so approximate-only inputs are recognised and driven to
            their limit instead of crawling at a sublinear rate.
    """

    tol: float = 1e-10
    max_iters: int = 10000
    eps_pattern: float = 1e-12
    rate_window: int = 50
    pattern_check: bool = True

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.rate_window < 2:
            raise ValueError("rate_window must be at least 2")


class ScalingError(Exception):
    """Base class for errors raised by this package."""


class DimensionError(ScalingError, ValueError):
    pass


class MarginError(ScalingError, ValueError):
    pass


class NotScalableError(ScalingError):
    pass


class SingularMarginalError(ScalingError):
    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class DivergenceError(ScalingError):
    pass
