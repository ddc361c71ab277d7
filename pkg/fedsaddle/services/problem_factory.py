"""Factory for building problem instances from an experiment configuration."""

import logging
from typing import Callable, Dict, List, Tuple

from fedsaddle.errors import ConfigError
from fedsaddle.models import ExperimentConfig, Partition, ProblemKind, Sample
from fedsaddle.services import data_io
from fedsaddle.services.base_problem import MinMaxProblem

logger = logging.getLogger(__name__)


def build_dataset(config: ExperimentConfig) -> Tuple[List[Sample], Partition]:
    """
    Load, optionally relabel or subsample, and partition the configured dataset.

    Labels stay raw unless positive_label or per_class is set, so problems
    requiring +1/-1 labels reject multi-class files.

    Returns:
        Tuple of (samples, partition over them)

    Raises:
        ConfigError: If no dataset path is configured
    """
    if config.data is None:
        raise ConfigError(f"problem {config.problem.value} requires a dataset path")

    samples, _ = data_io.load_libsvm(config.data)
    rule = data_io.positive_rule(config.positive_label)
    if config.per_class is not None:
        samples = data_io.binarize_and_subsample(samples, rule, config.per_class, config.seed)
    elif config.positive_label is not None:
        samples = data_io.binarize(samples, rule)

    parts = data_io.partition(samples, config.M, config.partition, seed=config.seed)
    stats = data_io.dataset_stats(samples, parts)
    logger.info(
        f"Dataset ready: N={stats.num_samples}, d={stats.num_features}, "
        f"classes={stats.class_counts}, shard size={parts.shard_sizes[0]}, dropped={parts.dropped}"
    )
    return samples, parts


class ProblemFactory:
    """Factory for creating problem instances."""

    _builders: Dict[ProblemKind, Callable[[ExperimentConfig], MinMaxProblem]] = {}

    @classmethod
    def _initialize_builders(cls):
        """Lazy initialization of the builder mapping."""
        if not cls._builders:
            from fedsaddle.services.auc import AUCProblem
            from fedsaddle.services.robust_logreg import RobustLogRegProblem
            from fedsaddle.services.synthetic_pl import SyntheticPLProblem

            def logreg(config: ExperimentConfig) -> MinMaxProblem:
                samples, parts = build_dataset(config)
                return RobustLogRegProblem(samples, parts, lambda2=config.lambda2, alpha=config.alpha)

            def auc(config: ExperimentConfig) -> MinMaxProblem:
                samples, parts = build_dataset(config)
                return AUCProblem(samples, parts)

            def synthetic(config: ExperimentConfig) -> MinMaxProblem:
                return SyntheticPLProblem.generate(
                    d=config.d,
                    num_clients=config.M,
                    mu=config.mu,
                    h=config.h,
                    sigma_x=config.sigma_x,
                    sigma_y=config.sigma_y,
                    seed=config.seed,
                )

            cls._builders = {
                ProblemKind.LOGREG_ROBUST: logreg,
                ProblemKind.AUC: auc,
                ProblemKind.SYNTHETIC_PL: synthetic,
            }

    @classmethod
    def create(cls, config: ExperimentConfig) -> MinMaxProblem:
        """
        Create the problem named by config.problem.

        Args:
            config: Resolved experiment configuration

        Returns:
            Problem instance with config.M clients

        Raises:
            ConfigError: If the problem kind is not supported
        """
        cls._initialize_builders()

        builder = cls._builders.get(config.problem)
        if not builder:
            raise ConfigError(f"Unsupported problem: {config.problem}")

        problem = builder(config)
        logger.info(
            f"Built {config.problem.value}: dim_x={problem.dim_x}, dim_y={problem.dim_y}, "
            f"M={problem.num_clients}"
        )
        return problem
