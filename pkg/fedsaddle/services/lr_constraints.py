"""Learning-rate conditions of the SAGDA and FSGDA convergence theorems."""

import logging
from typing import Dict, List, Optional, Tuple

from fedsaddle.errors import ConstraintInputError
from fedsaddle.models import (
    Algorithm,
    ConstraintReport,
    InequalityResult,
    LearningRates,
    ProblemConstants,
)

logger = logging.getLogger(__name__)

CHECKABLE = (Algorithm.SAGDA_I, Algorithm.SAGDA_II, Algorithm.FSGDA)


def _leq(name: str, lhs: float, rhs: float) -> InequalityResult:
    return InequalityResult(name=name, lhs=lhs, rhs=rhs, relation="<=", satisfied=lhs <= rhs)


def _geq(name: str, lhs: float) -> InequalityResult:
    return InequalityResult(name=name, lhs=lhs, rhs=0.0, relation=">=", satisfied=lhs >= 0.0)


def _local_drift(K: int, lf: float, rates: LearningRates) -> InequalityResult:
    lhs = 8 * K * (K - 1) * (2 * K - 1) * lf**2 * max(rates.eta_xl**2, rates.eta_yl**2)
    return _leq("local_drift", lhs, 1.0)


def _option1(
    K: int, lf: float, mu: float, L: float, rates: LearningRates, M: int, m: int
) -> Tuple[List[InequalityResult], Dict[str, float]]:
    eta_x, eta_y = rates.eta_x, rates.eta_y
    a1 = K * lf**2 * (31 / 20 * eta_x + 1 / 20 * eta_y)
    a2 = 0.5 * (L + lf / 10) + 1 + M**2 / m**2 - M / m
    drift = 4 * lf**2 * K**2 * (eta_x**2 + eta_y**2)
    error_weight = a1 + a2 * drift

    return [
        _local_drift(K, lf, rates),
        _geq(
            "variate_error",
            0.5 - a2 * drift - error_weight * 160 * K**2 * (rates.eta_xl**2 + rates.eta_yl**2) * lf**2,
        ),
        _geq(
            "primal_descent",
            (1 / 10 * eta_x * K - 4 * a2 * K**2 * eta_x**2)
            - error_weight * 40 * K**2 * rates.eta_xl**2,
        ),
        _geq(
            "dual_ascent",
            (eta_y * K * (1 / 20 - eta_x / eta_y * lf**2 / mu**2) - 4 * a2 * K**2 * eta_y**2)
            - error_weight * 40 * K**2 * rates.eta_yl**2,
        ),
    ], {"a1": a1, "a2": a2}


def _option2(
    K: int, lf: float, mu: float, L: float, rates: LearningRates
) -> Tuple[List[InequalityResult], float]:
    eta_x, eta_y = rates.eta_x, rates.eta_y
    b1 = lf**2 * (
        31 / 20 * eta_x * K
        + 1 / 20 * eta_y * K
        + 2 * (L + lf / 10) * eta_x**2 * K**2
        + 1 / 5 * lf * eta_y**2 * K**2
    )
    return [
        _local_drift(K, lf, rates),
        _geq(
            "primal_descent",
            1 / 10 * eta_x * K
            - (2 * (L + lf / 10) * eta_x**2 * K**2 + 40 * K**2 * rates.eta_xl**2 * b1),
        ),
        _geq(
            "dual_ascent",
            eta_y * K * (1 / 20 - eta_x / eta_y * lf**2 / mu**2)
            - (1 / 5 * lf * eta_y**2 * K**2 + 40 * K**2 * rates.eta_yl**2 * b1),
        ),
    ], b1


def _fsgda(
    K: int, lf: float, mu: float, L: float, rates: LearningRates
) -> Tuple[List[InequalityResult], Dict[str, float]]:
    eta_x, eta_y = rates.eta_x, rates.eta_y
    a1 = 1 / 10 - 2 * (2 * L + 1 / 5 * lf) * eta_x * K
    a2 = 1 / 20 - 2 / 5 * lf * eta_y * K - eta_x / eta_y * lf**2 / mu**2
    a3 = 31 / 20 + (2 * L + 1 / 5 * lf) * eta_x * K
    a4 = 1 / 20 + 1 / 5 * lf * eta_y * K
    return [
        _local_drift(K, lf, rates),
        _geq(
            "primal_descent",
            a1
            - a3 * 40 * lf**2 * K**2 * rates.eta_xl**2
            - eta_y / eta_x * a4 * 40 * lf**2 * K**2 * rates.eta_xl**2,
        ),
        _geq(
            "dual_ascent",
            a2
            - a3 * eta_x / eta_y * 40 * lf**2 * K**2 * rates.eta_yl**2
            - a4 * 40 * lf**2 * K**2 * rates.eta_yl**2,
        ),
    ], {"a1": a1, "a2": a2, "a3": a3, "a4": a4}


def check_lr_constraints(
    which: Algorithm,
    constants: ProblemConstants,
    rates: LearningRates,
    K: int,
    M: int = 1,
    m: int = 1,
    best_effort: bool = False,
) -> ConstraintReport:
    """
    Evaluate every learning-rate inequality of the selected theorem.

    Args:
        which: sagda_i, sagda_ii or fsgda
        constants: L_f and mu; L = L_f + L_f^2/mu is derived
        rates: Local and global learning rates, all positive
        K: Local steps per round
        M: Total clients (Option I only)
        m: Sampled clients (Option I only)
        best_effort: Mark the report as built from estimated constants

    Returns:
        ConstraintReport listing each inequality and the overall verdict

    Raises:
        ConstraintInputError: If an input is non-positive or which is not checkable
    """
    if which not in CHECKABLE:
        raise ConstraintInputError(f"no learning-rate conditions for {which.value}")
    if K < 1:
        raise ConstraintInputError(f"K must be at least 1, got {K}")
    if constants.lipschitz <= 0 or constants.mu <= 0:
        raise ConstraintInputError(
            f"L_f and mu must be positive, got L_f={constants.lipschitz}, mu={constants.mu}"
        )
    for name, value in rates.model_dump().items():
        if value <= 0:
            raise ConstraintInputError(f"{name} must be positive, got {value}")
    if which == Algorithm.SAGDA_I and not 1 <= m <= M:
        raise ConstraintInputError(f"need 1 <= m <= M, got m={m}, M={M}")

    lf, mu = constants.lipschitz, constants.mu
    L = constants.smoothness_phi
    a_constants: Dict[str, float] = {}
    b1: Optional[float] = None

    if which == Algorithm.SAGDA_I:
        inequalities, a_constants = _option1(K, lf, mu, L, rates, M, m)
    elif which == Algorithm.SAGDA_II:
        inequalities, b1 = _option2(K, lf, mu, L, rates)
    else:
        inequalities, a_constants = _fsgda(K, lf, mu, L, rates)

    report = ConstraintReport(
        which=which,
        inequalities=inequalities,
        satisfied=all(item.satisfied for item in inequalities),
        best_effort=best_effort,
        K=K,
        eta_xl=rates.eta_xl,
        eta_yl=rates.eta_yl,
        eta_x=rates.eta_x,
        eta_y=rates.eta_y,
        lipschitz=lf,
        mu=mu,
        smoothness_phi=L,
        a_constants=a_constants,
        b1=b1,
    )
    if best_effort:
        logger.warning("Constraint report uses estimated constants; treat it as best-effort")
    return report


def format_report(report: ConstraintReport) -> str:
    """Aligned plain-text table of a constraint report."""
    width = max(len(item.name) for item in report.inequalities)
    lines = [
        f"theorem conditions for {report.which.value}"
        + (" (best-effort constants)" if report.best_effort else ""),
        f"K={report.K} eta_xl={report.eta_xl!r} eta_yl={report.eta_yl!r} "
        f"eta_x={report.eta_x!r} eta_y={report.eta_y!r}",
        f"L_f={report.lipschitz!r} mu={report.mu!r} L={report.smoothness_phi!r}",
    ]
    extras = dict(report.a_constants)
    if report.b1 is not None:
        extras["b1"] = report.b1
    if extras:
        lines.append(" ".join(f"{key}={value!r}" for key, value in extras.items()))
    lines.append(f"{'inequality':<{width}}  {'lhs':>24}  rel  {'rhs':>6}  ok")
    for item in report.inequalities:
        lines.append(
            f"{item.name:<{width}}  {item.lhs!r:>24}  {item.relation:>3}  {item.rhs!r:>6}  "
            f"{'yes' if item.satisfied else 'no'}"
        )
    lines.append(f"satisfied: {'yes' if report.satisfied else 'no'}")
    return "\n".join(lines)
