"""Single-experiment driver shared by the run and sweep commands."""

import logging
import time
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict

from fedsaddle.models import ExperimentConfig, RoundRecord, RunSummary
from fedsaddle.services.base_problem import MinMaxProblem
from fedsaddle.services.engine import FederatedEngine
from fedsaddle.services.metrics import GradientNormHook, potential
from fedsaddle.services.problem_factory import ProblemFactory
from fedsaddle.services.robust_logreg import RobustLogRegProblem

logger = logging.getLogger(__name__)


class ExperimentResult(BaseModel):
    """Records, initial-point metrics and summary of one run."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    records: List[RoundRecord]
    initial_metrics: Dict[str, Optional[float]]
    summary: RunSummary
    echo: Dict[str, str]


def config_echo(config: ExperimentConfig, problem: Optional[MinMaxProblem] = None) -> Dict[str, str]:
    """
    Resolved configuration as flat strings, including derived quantities.

    Includes the engine-side values (baselines override K, m and global
    rates), the effective rates, and lambda1 for robust logistic regression.
    """
    echo = {
        key: "" if value is None else str(value)
        for key, value in config.model_dump(mode="json").items()
    }
    algo = config.algo_config()
    echo.update(
        K=str(algo.K),
        m=str(algo.m),
        eta_xg=repr(algo.eta_xg),
        eta_yg=repr(algo.eta_yg),
        eta_x=repr(algo.eta_x),
        eta_y=repr(algo.eta_y),
    )
    if isinstance(problem, RobustLogRegProblem):
        echo["n"] = str(problem.n)
        echo["lambda1"] = repr(problem.lambda1)
    return echo


def run_experiment(
    config: ExperimentConfig, problem: Optional[MinMaxProblem] = None
) -> ExperimentResult:
    """
    Build the problem (unless given), run the engine and evaluate metrics.

    Args:
        config: Resolved experiment configuration
        problem: Prebuilt problem to share across sweep cells

    Returns:
        ExperimentResult with per-round records and a run summary
    """
    problem = problem or ProblemFactory.create(config)
    algo = config.algo_config()
    phi_cfg = config.phi_config()
    hook = GradientNormHook(phi_cfg)

    logger.info(
        f"Running {algo.algorithm.value} on {config.problem.value}: M={algo.M} m={algo.m} "
        f"K={algo.K} T={algo.T} seed={algo.seed}"
    )
    engine = FederatedEngine(problem, algo)
    initial = engine.evaluate_current([hook])
    initial_potential = potential(problem, engine.server.x, engine.server.y, phi_cfg)

    started = time.perf_counter()
    records = engine.run([hook])
    wall_seconds = time.perf_counter() - started

    final = records[-1] if records else None
    summary = RunSummary(
        problem=config.problem,
        algorithm=algo.algorithm,
        rounds=engine.server.t,
        evaluated_rounds=len(records),
        samples_per_client=engine.samples_per_client,
        comm_sessions=engine.server.comm_sessions,
        initial_grad_norm_phi_sq=initial["grad_norm_phi_sq"],
        final_grad_norm_phi_sq=final.grad_norm_phi_sq if final else initial["grad_norm_phi_sq"],
        final_grad_norm_x_sq=final.grad_norm_x_sq if final else initial["grad_norm_x_sq"],
        final_grad_norm_y_sq=final.grad_norm_y_sq if final else initial["grad_norm_y_sq"],
        final_f_value=final.f_value if final else initial["f_value"],
        final_phi_residual_sq=final.phi_residual_sq if final else initial["phi_residual_sq"],
        initial_potential=initial_potential,
        final_potential=potential(problem, engine.server.x, engine.server.y, phi_cfg),
        wall_seconds=wall_seconds,
    )
    logger.info(
        f"Finished: grad_norm_phi_sq {summary.initial_grad_norm_phi_sq:.4e} -> "
        f"{summary.final_grad_norm_phi_sq:.4e} in {wall_seconds:.2f}s"
    )
    return ExperimentResult(
        records=records,
        initial_metrics=initial,
        summary=summary,
        echo=config_echo(config, problem),
    )
