"""Reporting metrics: surrogate gradient norm, potential and smoothing."""

import logging
from functools import lru_cache
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from fedsaddle.errors import ConfigError, NonFiniteError, PhiEstimationError, ProblemError
from fedsaddle.models import PhiEstimatorConfig, PhiMode
from fedsaddle.services.base_problem import MinMaxProblem
from fedsaddle.services.linalg import Vector, axpy, norm2_sq
from fedsaddle.services.problem_constants import estimate_constants
from fedsaddle.services.sampling import Purpose

logger = logging.getLogger(__name__)

GROWTH_PATIENCE = 50


class PhiEstimate(NamedTuple):
    """Result of evaluating Phi at a primal point."""

    phi_grad_sq: float
    y_star: Vector
    converged: bool
    residual_sq: float
    phi_value: float


def phi_analytic(problem: MinMaxProblem, x: Vector) -> Tuple[float, Vector]:
    """Closed-form (Phi(x), grad Phi(x)); only problems with a closed form qualify."""
    if not problem.has_closed_form_phi:
        raise ProblemError(f"{type(problem).__name__} has no closed-form Phi")
    return problem.phi_analytic(x)


@lru_cache(maxsize=32)
def _estimated_lipschitz(problem: MinMaxProblem) -> float:
    rng = np.random.default_rng([0, int(Purpose.ESTIMATION)])
    return estimate_constants(problem, 8, rng, draws_per_point=1).lf_hat


def default_inner_step(problem: MinMaxProblem) -> float:
    """0.5 / L_f, using the exact constant when known and an estimate otherwise."""
    lipschitz = problem.lipschitz_bound() or _estimated_lipschitz(problem)
    if lipschitz <= 0:
        raise PhiEstimationError("cannot pick an inner step: estimated L_f is zero")
    return 0.5 / lipschitz


def estimate_phi_grad(
    problem: MinMaxProblem, x: Vector, y_warm: Vector, cfg: PhiEstimatorConfig
) -> PhiEstimate:
    """
    Evaluate ||grad Phi(x)||^2 by maximizing f(x, .) from a warm start.

    Runs full-batch gradient ascent on y until ||grad_y f||^2 <= tol or the
    step cap, then reports ||grad_x f(x, y+)||^2. Problems with a closed form
    skip the inner loop in analytic mode.

    Args:
        problem: Problem oracle
        x: Primal point
        y_warm: Starting point of the inner ascent
        cfg: Inner solve settings

    Returns:
        PhiEstimate with the squared norm, maximizer estimate and residual

    Raises:
        PhiEstimationError: If the residual grows for 50 consecutive steps
            or an iterate becomes non-finite
    """
    problem.check_point(x, y_warm)

    if cfg.mode == PhiMode.ANALYTIC_IF_AVAILABLE and problem.has_closed_form_phi:
        phi, grad = problem.phi_analytic(x)
        return PhiEstimate(norm2_sq(grad), problem.y_star(x), True, 0.0, phi)

    step = cfg.inner_step or default_inner_step(problem)
    y = np.array(y_warm, dtype=np.float64)
    gx, gy = problem.grad_full(x, y)
    residual = norm2_sq(gy)
    growth = 0
    converged = residual <= cfg.tol

    for _ in range(cfg.max_inner_steps):
        if converged:
            break
        try:
            y = axpy(step, gy, y)
            gx, gy = problem.grad_full(x, y)
            new_residual = norm2_sq(gy)
        except NonFiniteError as e:
            raise PhiEstimationError("inner ascent produced a non-finite iterate") from e

        growth = growth + 1 if new_residual > residual else 0
        if growth >= GROWTH_PATIENCE:
            raise PhiEstimationError(
                f"inner ascent diverged: residual grew for {GROWTH_PATIENCE} consecutive steps"
            )
        residual = new_residual
        converged = residual <= cfg.tol

    if not converged:
        logger.warning(
            f"Phi inner solve stopped after {cfg.max_inner_steps} steps with residual {residual:.3e}"
        )
    return PhiEstimate(norm2_sq(gx), y, converged, residual, problem.value(x, y))


def potential(
    problem: MinMaxProblem, x: Vector, y: Vector, cfg: PhiEstimatorConfig
) -> float:
    """Potential Phi(x) - f(x, y) / 10."""
    estimate = estimate_phi_grad(problem, x, y, cfg)
    return estimate.phi_value - problem.value(x, y) / 10.0


def smooth(series: Sequence[float], window: int) -> List[float]:
    """
    Trailing moving average; early entries average the available prefix.

    Raises:
        ConfigError: If window < 1
    """
    if window < 1:
        raise ConfigError(f"smoothing window must be at least 1, got {window}")
    values = np.asarray(series, dtype=np.float64)
    return [float(values[max(0, k - window + 1) : k + 1].mean()) for k in range(values.shape[0])]


class GradientNormHook:
    """Round hook reporting Phi, full-gradient norms and the objective value."""

    def __init__(self, cfg: Optional[PhiEstimatorConfig] = None):
        self.cfg = cfg or PhiEstimatorConfig()

    def __call__(self, problem: MinMaxProblem, x: Vector, y: Vector) -> Dict[str, Optional[float]]:
        gx, gy = problem.grad_full(x, y)
        estimate = estimate_phi_grad(problem, x, y, self.cfg)
        return {
            "grad_norm_phi_sq": estimate.phi_grad_sq,
            "grad_norm_x_sq": norm2_sq(gx),
            "grad_norm_y_sq": norm2_sq(gy),
            "f_value": problem.value(x, y),
            "phi_residual_sq": estimate.residual_sq,
        }
