"""Grid sweeps and rounds-to-threshold speedup tables."""

import csv
import logging
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from fedsaddle.errors import ConfigError, FedSaddleError
from fedsaddle.models import Algorithm, CellResult, ExperimentConfig, SpeedupCell
from fedsaddle.services.base_problem import MinMaxProblem
from fedsaddle.services.experiment import run_experiment
from fedsaddle.services.metrics import smooth
from fedsaddle.services.problem_factory import ProblemFactory
from fedsaddle.services.results import write_csv

logger = logging.getLogger(__name__)

INDEX_HEADER = ["algorithm", "m", "K", "seed", "status", "rounds", "final_grad_norm_phi_sq", "path", "error"]


def cell_config(base: ExperimentConfig, **overrides) -> ExperimentConfig:
    """Re-validated copy of base with the given fields replaced."""
    return ExperimentConfig.model_validate({**base.model_dump(), **overrides})


def rounds_to_threshold(
    rounds: Sequence[int], series: Sequence[float], threshold: float
) -> Optional[int]:
    """
    First round count at which series drops to threshold or below.

    Args:
        rounds: Rounds completed at each point (0 for the initial point)
        series: Metric value at each point
        threshold: Positive target

    Returns:
        Round count, or None if never reached

    Raises:
        ConfigError: If threshold is not positive
    """
    if threshold <= 0:
        raise ConfigError(f"threshold must be positive, got {threshold}")
    for count, value in zip(rounds, series):
        if value <= threshold:
            return count
    return None


def grid_sweep(
    base: ExperimentConfig,
    algorithms: Sequence[Algorithm],
    m_values: Sequence[int],
    K_values: Sequence[int],
    seeds: Sequence[int],
    out_dir: Path,
    problem: Optional[MinMaxProblem] = None,
) -> List[CellResult]:
    """
    Run every (algorithm, m, K, seed) cell and write one CSV per cell plus index.csv.

    All cells share one problem instance. Cells are named and indexed by the
    m and K the engine actually runs, so Parallel-SGDA cells report m=M and
    K=1 and repeated effective cells run once. A failing cell is logged,
    marked failed in the index and does not stop the sweep.
    """
    problem = problem or ProblemFactory.create(base)
    results: List[CellResult] = []
    seen = set()

    for algorithm in algorithms:
        for m in m_values:
            for K in K_values:
                for seed in seeds:
                    cell_m, cell_K = m, K
                    name = f"{algorithm.value}_m{cell_m}_K{cell_K}_seed{seed}.csv"
                    try:
                        config = cell_config(base, algo=algorithm, m=m, K=K, seed=seed)
                        effective = config.algo_config()
                        cell_m, cell_K = effective.m, effective.K
                        name = f"{algorithm.value}_m{cell_m}_K{cell_K}_seed{seed}.csv"
                        if name in seen:
                            logger.info(f"Sweep cell {name} already ran")
                            continue
                        seen.add(name)
                        result = run_experiment(config, problem)
                        path = write_csv(result.records, out_dir / name, config.smooth_window, result.echo)
                    except (FedSaddleError, ValidationError) as e:
                        logger.warning(f"Sweep cell {name} failed: {e}")
                        results.append(
                            CellResult(
                                algorithm=algorithm,
                                m=cell_m,
                                K=cell_K,
                                seed=seed,
                                status="failed",
                                error=str(e).splitlines()[0],
                            )
                        )
                        continue
                    results.append(
                        CellResult(
                            algorithm=algorithm,
                            m=cell_m,
                            K=cell_K,
                            seed=seed,
                            status="ok",
                            path=path,
                            rounds=result.summary.rounds,
                            final_grad_norm_phi_sq=result.summary.final_grad_norm_phi_sq,
                        )
                    )
                    logger.info(f"Sweep cell {name} done")

    write_index(results, out_dir / "index.csv")
    return results


def write_index(results: Sequence[CellResult], path: Path) -> Path:
    """Sweep index with one row per cell."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(INDEX_HEADER)
        for cell in results:
            writer.writerow(
                [
                    cell.algorithm.value,
                    cell.m,
                    cell.K,
                    cell.seed,
                    cell.status,
                    cell.rounds,
                    "" if cell.final_grad_norm_phi_sq is None else repr(cell.final_grad_norm_phi_sq),
                    "" if cell.path is None else cell.path.name,
                    cell.error or "",
                ]
            )
    return path


def speedup_sweep(
    base: ExperimentConfig,
    m_values: Sequence[int],
    K_values: Sequence[int],
    grad_threshold: float,
    seeds: Optional[Sequence[int]] = None,
    scale_local_rates: bool = False,
    problem: Optional[MinMaxProblem] = None,
) -> List[SpeedupCell]:
    """
    Rounds-to-threshold for every (m, K) cell.

    Each cell's ||grad Phi||^2 series (initial point included) is averaged
    over seeds, smoothed with base.smooth_window and searched for the first
    point at or below grad_threshold.

    Args:
        base: Configuration shared by all cells
        m_values: Participation levels to sweep
        K_values: Local step counts to sweep
        grad_threshold: Positive target for the smoothed series
        seeds: Engine seeds to average over; defaults to [base.seed]
        scale_local_rates: Keep eta_l * K fixed at the base value across K
        problem: Prebuilt problem shared by every cell

    Returns:
        One SpeedupCell per (m, K), in m-major order
    """
    if grad_threshold <= 0:
        raise ConfigError(f"threshold must be positive, got {grad_threshold}")
    problem = problem or ProblemFactory.create(base)
    seeds = list(seeds) if seeds else [base.seed]
    cells: List[SpeedupCell] = []

    for m in m_values:
        for K in K_values:
            overrides = {"m": m, "K": K}
            if scale_local_rates:
                overrides["eta_xl"] = base.eta_xl * base.K / K
                overrides["eta_yl"] = base.eta_yl * base.K / K
            try:
                series = []
                counts: List[int] = []
                for seed in seeds:
                    config = cell_config(base, seed=seed, **overrides)
                    result = run_experiment(config, problem)
                    counts = [0] + [r.t + 1 for r in result.records]
                    series.append(
                        [result.initial_metrics["grad_norm_phi_sq"]]
                        + [r.grad_norm_phi_sq for r in result.records]
                    )
                averaged = np.mean(np.array(series, dtype=np.float64), axis=0).tolist()
                smoothed = smooth(averaged, base.smooth_window)
            except (FedSaddleError, ValidationError) as e:
                logger.warning(f"Speedup cell m={m} K={K} failed: {e}")
                cells.append(SpeedupCell(m=m, K=K, status="failed", error=str(e).splitlines()[0]))
                continue

            reached = rounds_to_threshold(counts, smoothed, grad_threshold)
            cells.append(
                SpeedupCell(
                    m=m,
                    K=K,
                    status="ok",
                    rounds_to_threshold=reached,
                    rounds=counts,
                    smoothed_grad_norm_phi_sq=smoothed,
                )
            )
            logger.info(f"Speedup cell m={m} K={K}: rounds to threshold = {reached}")
    return cells
