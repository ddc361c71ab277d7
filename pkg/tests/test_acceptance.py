"""End-to-end behaviour checks on desk-scale instances."""

import math
import os
from pathlib import Path

import numpy as np
import pytest

from fedsaddle.models import (
    AlgoConfig,
    Algorithm,
    ExperimentConfig,
    LearningRates,
    PartitionMode,
    PhiEstimatorConfig,
    PhiMode,
    ProblemConstants,
)
from fedsaddle.services.auc import AUCProblem
from fedsaddle.services.data_io import partition
from fedsaddle.services.engine import FederatedEngine
from fedsaddle.services.experiment import run_experiment
from fedsaddle.services.lr_constraints import check_lr_constraints
from fedsaddle.services.metrics import estimate_phi_grad, smooth
from fedsaddle.services.problem_factory import ProblemFactory
from fedsaddle.services.robust_logreg import RobustLogRegProblem
from fedsaddle.services.sampling import sample_clients
from fedsaddle.services.sweep import rounds_to_threshold, speedup_sweep
from fedsaddle.services.synthetic_pl import SyntheticPLProblem

A9A_PATH = os.environ.get("FEDSADDLE_A9A_PATH")


class _IterateRecorder:
    """Round hook that keeps a copy of every global iterate."""

    def __init__(self):
        self.points = []

    def __call__(self, problem, x, y):
        self.points.append((x.copy(), y.copy()))
        return {}


def _final_phi_grad_sq(problem, cfg):
    engine = FederatedEngine(problem, cfg)
    engine.run()
    _, grad = problem.phi_analytic(engine.server.x)
    return float(grad @ grad)


class TestCollapseEquivalence:
    """SAGDA without control variates is FSGDA."""

    def _fuzz_cases(self, make_samples):
        rng = np.random.default_rng(99)
        for case in range(60):
            M = int(rng.integers(1, 9))
            d = int(rng.integers(1, 7))
            kind = case % 3
            if kind == 0:
                problem = SyntheticPLProblem.generate(
                    d=d, num_clients=M, h=float(rng.uniform(0, 2)), sigma_x=0.1, sigma_y=0.1, seed=case
                )
            else:
                samples = make_samples(3 * M, d, seed=case)
                parts = partition(samples, M, PartitionMode.IID_SHUFFLE, seed=case)
                problem = RobustLogRegProblem(samples, parts) if kind == 1 else AUCProblem(samples, parts)
            params = dict(
                M=M,
                m=int(rng.integers(1, M + 1)),
                K=int(rng.integers(1, 6)),
                T=4,
                seed=case,
                eta_xl=float(rng.uniform(0.01, 0.1)),
                eta_yl=float(rng.uniform(0.01, 0.1)),
                eta_xg=float(rng.uniform(0.5, 2.0)),
                eta_yg=float(rng.uniform(0.5, 2.0)),
            )
            yield problem, params

    def _trajectory(self, problem, cfg):
        recorder = _IterateRecorder()
        FederatedEngine(problem, cfg).run([recorder])
        return recorder.points

    def test_bit_identical_trajectories(self, make_samples):
        """Test Option I and II with variates off match FSGDA bit for bit on 60 configs."""
        cases = 0
        for problem, params in self._fuzz_cases(make_samples):
            reference = self._trajectory(problem, AlgoConfig(algorithm=Algorithm.FSGDA, **params))
            for algorithm in (Algorithm.SAGDA_I, Algorithm.SAGDA_II):
                cfg = AlgoConfig(algorithm=algorithm, control_variates=False, **params)
                collapsed = self._trajectory(problem, cfg)
                assert len(collapsed) == len(reference)
                for (xa, ya), (xb, yb) in zip(reference, collapsed):
                    np.testing.assert_array_equal(xa, xb)
                    np.testing.assert_array_equal(ya, yb)
            cases += 1
        assert cases >= 50


class TestPhiEstimatorOracle:
    """Inner ascent agrees with the closed form."""

    def test_random_instances(self):
        """Test |inner - analytic| <= 1e-6 in ||grad Phi||^2 on 20 random instances."""
        rng = np.random.default_rng(5)
        cfg = PhiEstimatorConfig(mode=PhiMode.INNER_ASCENT, tol=1e-20, max_inner_steps=20000)
        for seed in range(20):
            d = int(rng.integers(1, 7))
            problem = SyntheticPLProblem.generate(
                d=d, num_clients=3, mu=float(rng.uniform(0.5, 2.0)), h=1.0, seed=seed
            )
            x = rng.standard_normal(d)
            estimate = estimate_phi_grad(problem, x, np.zeros(d), cfg)
            _, grad = problem.phi_analytic(x)
            assert abs(estimate.phi_grad_sq - float(grad @ grad)) <= 1e-6


class TestHeterogeneityImmunity:
    """Control variates remove the heterogeneity bias that FSGDA keeps."""

    @staticmethod
    def _problem(h):
        return SyntheticPLProblem.generate(
            d=4, num_clients=8, mu=3.0, h=h, seed=0, b_bar=np.eye(4), c_bar=np.full(4, 0.5)
        )

    @staticmethod
    def _config(algorithm):
        return AlgoConfig(
            algorithm=algorithm, eta_xl=0.01, eta_yl=0.01, K=3, M=8, m=8, T=500, seed=0
        )

    @pytest.mark.slow
    def test_sagda_insensitive_to_h(self):
        """Test the final SAGDA-II value moves by at most 20% from h=1 to h=10."""
        low = _final_phi_grad_sq(self._problem(1.0), self._config(Algorithm.SAGDA_II))
        high = _final_phi_grad_sq(self._problem(10.0), self._config(Algorithm.SAGDA_II))
        assert abs(high - low) <= 0.2 * low

    @pytest.mark.slow
    def test_fsgda_bias_grows_with_h(self):
        """Test the final FSGDA value at least doubles from h=1 to h=10."""
        low = _final_phi_grad_sq(self._problem(1.0), self._config(Algorithm.FSGDA))
        high = _final_phi_grad_sq(self._problem(10.0), self._config(Algorithm.FSGDA))
        assert high >= 2.0 * low


class TestDeskScaleConvergence:
    """SAGDA-II with theorem-compliant rates reaches a small gradient."""

    @pytest.mark.slow
    def test_reaches_threshold(self):
        """Test ||grad Phi(x_T)||^2 <= 1e-8 within 2000 rounds."""
        problem = SyntheticPLProblem.generate(d=8, num_clients=8, mu=1.0, b_bar=np.eye(8), c_bar=np.zeros(8))
        cfg = AlgoConfig(
            algorithm=Algorithm.SAGDA_II,
            eta_xl=2.75e-5,
            eta_yl=3e-3,
            eta_xg=4.0,
            eta_yg=4.0,
            K=5,
            M=8,
            m=8,
            T=2000,
            init_scale=5e-5,
            seed=0,
        )
        report = check_lr_constraints(
            Algorithm.SAGDA_II,
            ProblemConstants(lipschitz=problem.lipschitz_bound(), mu=1.0),
            LearningRates(eta_xl=cfg.eta_xl, eta_yl=cfg.eta_yl, eta_xg=cfg.eta_xg, eta_yg=cfg.eta_yg),
            K=cfg.K,
        )
        assert report.satisfied
        assert _final_phi_grad_sq(problem, cfg) <= 1e-8


class TestSpeedupTrend:
    """More participants or more local steps never need more rounds."""

    BASE = ExperimentConfig(
        T=300,
        M=16,
        m=16,
        K=4,
        d=4,
        mu=1.0,
        h=0.0,
        sigma_x=0.1,
        sigma_y=0.1,
        eta_xl=0.05,
        eta_yl=0.05,
        eval_every=1,
        smooth_window=5,
    )

    @staticmethod
    def _rounds(cells, reference):
        tail = reference.smoothed_grad_norm_phi_sq[len(reference.smoothed_grad_norm_phi_sq) // 2 :]
        threshold = 2.5 * float(np.mean(tail))
        counts = []
        for cell in cells:
            assert cell.status == "ok"
            reached = rounds_to_threshold(cell.rounds, cell.smoothed_grad_norm_phi_sq, threshold)
            counts.append(math.inf if reached is None else reached)
        return counts

    @pytest.mark.slow
    def test_non_increasing_in_m(self):
        """Test rounds-to-threshold over m in {1, 4, 16} at K=4."""
        problem = ProblemFactory.create(self.BASE)
        cells = speedup_sweep(self.BASE, [1, 4, 16], [4], 1e-300, seeds=range(8), problem=problem)
        counts = self._rounds(cells, cells[-1])
        assert counts[0] >= counts[1] >= counts[2]
        assert counts[2] < math.inf

    @pytest.mark.slow
    def test_non_increasing_in_K(self):
        """Test rounds-to-threshold over K in {1, 4, 16} with eta_l * K fixed."""
        problem = ProblemFactory.create(self.BASE)
        cells = speedup_sweep(
            self.BASE, [16], [1, 4, 16], 1e-300, seeds=range(8), scale_local_rates=True, problem=problem
        )
        counts = self._rounds(cells, cells[-1])
        assert counts[0] >= counts[1] >= counts[2]
        assert counts[2] < math.inf


@pytest.mark.slow
@pytest.mark.requires_data
@pytest.mark.skipif(A9A_PATH is None, reason="FEDSADDLE_A9A_PATH not set")
class TestA9aReplication:
    """Robust logistic regression on a9a with 100 label-sorted clients."""

    def _smoothed(self, algorithm):
        config = ExperimentConfig(
            problem="logreg_robust",
            data=Path(A9A_PATH),
            algo=algorithm,
            partition=PartitionMode.LABEL_SORTED,
            per_class=5000,
            M=100,
            m=100,
            K=10,
            T=200,
            eta_xl=1e-2,
            eta_yl=1e-2,
            eta_xg=2.0,
            eta_yg=2.0,
            eval_every=5,
        )
        result = run_experiment(config, self.problem)
        series = [result.initial_metrics["grad_norm_phi_sq"]] + [r.grad_norm_phi_sq for r in result.records]
        return smooth(series, config.smooth_window)

    @pytest.fixture(autouse=True)
    def _problem(self):
        config = ExperimentConfig(
            problem="logreg_robust", data=Path(A9A_PATH), per_class=5000, M=100, m=100, T=0
        )
        self.problem = ProblemFactory.create(config)
        assert self.problem.n == 100

    def test_ordering_and_decrease(self):
        """Test SAGDA-II <= FSGDA <= Parallel-SGDA late in the run and overall decrease."""
        sagda = self._smoothed(Algorithm.SAGDA_II)
        fsgda = self._smoothed(Algorithm.FSGDA)
        parallel = self._smoothed(Algorithm.PARALLEL_SGDA)

        assert sagda[-1] <= 0.1 * sagda[0]
        start = len(sagda) - len(sagda) // 4
        ordered = [sagda[i] <= fsgda[i] <= parallel[i] for i in range(start, len(sagda))]
        assert sum(ordered) >= 0.8 * len(ordered)


class TestDataPipeline:
    """Client sampling frequency."""

    def test_sampling_frequency(self):
        """Test each client is picked with frequency m/M within 1% over 1e5 draws."""
        rng = np.random.default_rng(17)
        counts = np.zeros(10)
        for _ in range(100000):
            counts[sample_clients(10, 3, rng)] += 1
        np.testing.assert_allclose(counts / 100000, 0.3, atol=0.01)
