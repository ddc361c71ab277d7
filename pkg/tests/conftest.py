"""Pytest configuration and shared fixtures."""

from pathlib import Path
from typing import Callable, Generator, List
from unittest.mock import patch

import numpy as np
import pytest

from fedsaddle.config import Settings
from fedsaddle.models import AlgoConfig, ExperimentConfig, PartitionMode, Sample
from fedsaddle.services.auc import AUCProblem
from fedsaddle.services.data_io import partition
from fedsaddle.services.robust_logreg import RobustLogRegProblem
from fedsaddle.services.synthetic_pl import SyntheticPLProblem


@pytest.fixture
def test_settings(tmp_path: Path) -> Settings:
    """Create test settings writing into a temporary directory."""
    return Settings(output_dir=tmp_path / "results", workers=1)


@pytest.fixture
def mock_settings(test_settings: Settings) -> Generator[Settings, None, None]:
    """Patch the settings seen by command helpers."""
    with (
        patch("fedsaddle.config.settings", test_settings),
        patch("fedsaddle.commands.options.settings", test_settings),
    ):
        yield test_settings


@pytest.fixture
def make_samples() -> Callable[..., List[Sample]]:
    """Factory for small random datasets with +1/-1 labels."""

    def _make(num_samples: int = 24, d: int = 3, seed: int = 0, balanced: bool = True) -> List[Sample]:
        rng = np.random.default_rng(seed)
        features = rng.standard_normal((num_samples, d))
        if balanced:
            labels = np.where(np.arange(num_samples) % 2 == 0, 1.0, -1.0)
        else:
            labels = np.where(rng.random(num_samples) < 0.5, 1.0, -1.0)
        return [Sample(features=f, label=float(b)) for f, b in zip(features, labels)]

    return _make


@pytest.fixture
def synthetic_problem() -> SyntheticPLProblem:
    """Noiseless heterogeneous synthetic problem with 4 clients in 3 dimensions."""
    return SyntheticPLProblem.generate(d=3, num_clients=4, mu=1.0, h=0.5, seed=1)


@pytest.fixture
def logreg_problem(make_samples) -> RobustLogRegProblem:
    """Robust logistic regression over 4 iid shards of 6 samples."""
    samples = make_samples(24, 3, seed=2)
    parts = partition(samples, 4, PartitionMode.IID_SHUFFLE, seed=2)
    return RobustLogRegProblem(samples, parts)


@pytest.fixture
def auc_problem(make_samples) -> AUCProblem:
    """AUC problem over 4 iid shards of 6 samples."""
    samples = make_samples(24, 3, seed=3)
    parts = partition(samples, 4, PartitionMode.IID_SHUFFLE, seed=3)
    return AUCProblem(samples, parts)


@pytest.fixture
def algo_config() -> AlgoConfig:
    """Small SAGDA-II configuration matching the synthetic fixture."""
    return AlgoConfig(eta_xl=0.05, eta_yl=0.05, K=3, M=4, m=4, T=5, seed=11)


@pytest.fixture
def experiment_config() -> ExperimentConfig:
    """Short synthetic experiment."""
    return ExperimentConfig(M=4, m=2, K=2, T=6, d=3, eta_xl=0.05, eta_yl=0.05, seed=5)


@pytest.fixture
def libsvm_text() -> bytes:
    """Eight-sample LIBSVM file with two classes and a comment line."""
    return (
        b"# toy dataset\n"
        b"1 1:0.5 3:2\n"
        b"-1 2:1.5\n"
        b"1 1:1 2:1 3:1\n"
        b"-1 3:-0.25\n"
        b"1 2:3\n"
        b"-1 1:-1 3:4\n"
        b"1 1:2.5\n"
        b"-1 2:-2 3:1\n"
    )


@pytest.fixture
def libsvm_file(tmp_path: Path, libsvm_text: bytes) -> Path:
    """The toy LIBSVM dataset written to disk."""
    path = tmp_path / "toy.libsvm"
    path.write_bytes(libsvm_text)
    return path
