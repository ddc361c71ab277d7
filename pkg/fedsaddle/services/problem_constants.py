"""Empirical estimates of smoothness, noise and heterogeneity constants."""

import logging

import numpy as np

from fedsaddle.errors import ProblemError
from fedsaddle.models import EstimatedConstants
from fedsaddle.services.base_problem import MinMaxProblem
from fedsaddle.services.linalg import norm2_sq

logger = logging.getLogger(__name__)


def estimate_constants(
    problem: MinMaxProblem,
    sample_budget: int,
    rng: np.random.Generator,
    draws_per_point: int = 4,
) -> EstimatedConstants:
    """
    Estimate L_f, sigma^2 and sigma_G^2 from random probe points.

    Every value is a maximum over finitely many probes, hence a lower bound
    on the true supremum.

    Args:
        problem: Problem to probe
        sample_budget: Number of standard-normal probe points z = (x, y)
        rng: Generator for probe points and stochastic draws
        draws_per_point: Stochastic draws per client per probe point

    Returns:
        EstimatedConstants with L_f_hat and the four variance bounds

    Raises:
        ProblemError: If sample_budget < 2
    """
    if sample_budget < 2:
        raise ProblemError(f"sample_budget must be at least 2, got {sample_budget}")

    points = [
        (rng.standard_normal(problem.dim_x), rng.standard_normal(problem.dim_y))
        for _ in range(sample_budget)
    ]
    full = [problem.grad_full(x, y) for x, y in points]

    lf_hat = 0.0
    for (z0, g0), (z1, g1) in zip(zip(points, full), zip(points[1:], full[1:])):
        dz = norm2_sq(z0[0] - z1[0]) + norm2_sq(z0[1] - z1[1])
        dg = norm2_sq(g0[0] - g1[0]) + norm2_sq(g0[1] - g1[1])
        if dz > 0:
            lf_hat = max(lf_hat, float(np.sqrt(dg / dz)))

    sigma_x_sq = sigma_y_sq = sigma_xg_sq = sigma_yg_sq = 0.0
    for (x, y), (gx, gy) in zip(points, full):
        for client in range(problem.num_clients):
            cx, cy = problem.client_grad_full(client, x, y)
            sigma_xg_sq = max(sigma_xg_sq, norm2_sq(cx - gx))
            sigma_yg_sq = max(sigma_yg_sq, norm2_sq(cy - gy))

            dev_x = dev_y = 0.0
            for _ in range(draws_per_point):
                sx, sy = problem.grad_at(client, x, y, problem.draw(client, rng))
                dev_x += norm2_sq(sx - cx)
                dev_y += norm2_sq(sy - cy)
            sigma_x_sq = max(sigma_x_sq, dev_x / draws_per_point)
            sigma_y_sq = max(sigma_y_sq, dev_y / draws_per_point)

    constants = EstimatedConstants(
        lf_hat=lf_hat,
        sigma_x_sq=sigma_x_sq,
        sigma_y_sq=sigma_y_sq,
        sigma_xg_sq=sigma_xg_sq,
        sigma_yg_sq=sigma_yg_sq,
    )
    logger.info(f"Estimated constants from {sample_budget} probes: {constants.model_dump()}")
    return constants
