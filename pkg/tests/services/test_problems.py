"""Tests for the min-max problem oracles."""

import math

import numpy as np
import pytest

from fedsaddle.errors import DimensionMismatchError, ProblemError
from fedsaddle.models import Partition, PartitionMode, Sample
from fedsaddle.services.auc import AUCProblem
from fedsaddle.services.data_io import partition
from fedsaddle.services.robust_logreg import RobustLogRegProblem
from fedsaddle.services.synthetic_pl import SyntheticPLProblem


def finite_difference(problem, x, y, step=1e-6):
    """Central finite-difference gradient of problem.value in both blocks."""
    gx = np.zeros_like(x)
    for k in range(x.shape[0]):
        e = np.zeros_like(x)
        e[k] = step
        gx[k] = (problem.value(x + e, y) - problem.value(x - e, y)) / (2 * step)
    gy = np.zeros_like(y)
    for k in range(y.shape[0]):
        e = np.zeros_like(y)
        e[k] = step
        gy[k] = (problem.value(x, y + e) - problem.value(x, y - e)) / (2 * step)
    return gx, gy


def random_point(problem, rng, scale=1.0):
    return scale * rng.standard_normal(problem.dim_x), scale * rng.standard_normal(problem.dim_y)


@pytest.fixture(params=["logreg", "auc", "synthetic"])
def any_problem(request, logreg_problem, auc_problem, synthetic_problem):
    """Each problem kind in turn."""
    return {"logreg": logreg_problem, "auc": auc_problem, "synthetic": synthetic_problem}[request.param]


class TestOracleContract:
    """Properties every problem must satisfy."""

    def test_grad_full_matches_finite_differences(self, any_problem):
        """Test full gradients against central differences at 20 random points."""
        rng = np.random.default_rng(100)
        for _ in range(20):
            x, y = random_point(any_problem, rng)
            gx, gy = any_problem.grad_full(x, y)
            fx, fy = finite_difference(any_problem, x, y)
            np.testing.assert_allclose(gx, fx, rtol=1e-5, atol=1e-6)
            np.testing.assert_allclose(gy, fy, rtol=1e-5, atol=1e-6)

    def test_grad_full_is_client_average(self, any_problem):
        """Test the global gradient is the mean of client gradients."""
        x, y = random_point(any_problem, np.random.default_rng(1))
        gx, gy = any_problem.grad_full(x, y)
        clients = [any_problem.client_grad_full(i, x, y) for i in range(any_problem.num_clients)]
        np.testing.assert_allclose(gx, np.mean([c[0] for c in clients], axis=0), rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(gy, np.mean([c[1] for c in clients], axis=0), rtol=1e-12, atol=1e-12)

    def test_stochastic_shapes(self, any_problem):
        """Test stochastic gradients have the variable dimensions."""
        x, y = random_point(any_problem, np.random.default_rng(2))
        rng = np.random.default_rng(3)
        assert any_problem.grad_x_stoch(0, x, y, rng).shape == (any_problem.dim_x,)
        assert any_problem.grad_y_stoch(0, x, y, rng).shape == (any_problem.dim_y,)

    def test_dimension_mismatch(self, any_problem):
        """Test wrong-length points raise."""
        x, y = random_point(any_problem, np.random.default_rng(4))
        with pytest.raises(DimensionMismatchError):
            any_problem.grad_full(np.append(x, 0.0), y)
        with pytest.raises(DimensionMismatchError):
            any_problem.grad_stoch(0, x, y[:-1] if y.shape[0] > 1 else np.zeros(2), np.random.default_rng(0))

    def test_bad_client(self, any_problem):
        """Test out-of-range client indices raise."""
        x, y = random_point(any_problem, np.random.default_rng(5))
        with pytest.raises(ProblemError):
            any_problem.grad_stoch(any_problem.num_clients, x, y, np.random.default_rng(0))

    def test_same_stream_same_gradient(self, any_problem):
        """Test stochastic gradients depend only on the caller's stream."""
        x, y = random_point(any_problem, np.random.default_rng(6))
        a = any_problem.grad_stoch(1, x, y, np.random.default_rng(77))
        b = any_problem.grad_stoch(1, x, y, np.random.default_rng(77))
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])


class TestUnbiasedness:
    """Shard-averaged sample gradients equal client full gradients."""

    @pytest.mark.parametrize("kind", ["logreg", "auc"])
    def test_enumerated_samples(self, kind, logreg_problem, auc_problem):
        """Test the mean over every shard sample equals the client gradient."""
        problem = {"logreg": logreg_problem, "auc": auc_problem}[kind]
        x, y = random_point(problem, np.random.default_rng(7))
        for client in range(problem.num_clients):
            indices = np.arange(problem.shard_size(client))
            sx, sy = problem.sample_grads(client, x, y, indices)
            cx, cy = problem.client_grad_full(client, x, y)
            np.testing.assert_allclose(sx.mean(axis=0), cx, rtol=1e-12, atol=1e-12)
            np.testing.assert_allclose(sy.mean(axis=0), cy, rtol=1e-12, atol=1e-12)

    def test_synthetic_noise_mean(self):
        """Test synthetic noise averages out over many draws."""
        problem = SyntheticPLProblem.generate(d=2, num_clients=2, sigma_x=0.5, sigma_y=0.5, seed=3)
        x, y = np.ones(2), np.ones(2)
        rng = np.random.default_rng(8)
        draws = [problem.grad_stoch(0, x, y, rng) for _ in range(20000)]
        cx, cy = problem.client_grad_full(0, x, y)
        np.testing.assert_allclose(np.mean([d[0] for d in draws], axis=0), cx, atol=0.02)
        np.testing.assert_allclose(np.mean([d[1] for d in draws], axis=0), cy, atol=0.02)


class TestRobustLogReg:
    """Tests for RobustLogRegProblem."""

    def test_value_at_uniform_dual(self, logreg_problem):
        """Test f(0, 1/n) = log 2."""
        n = logreg_problem.n
        value = logreg_problem.value(np.zeros(logreg_problem.dim_x), np.full(n, 1.0 / n))
        assert value == pytest.approx(math.log(2.0), rel=1e-12)

    def test_single_sample_dual_gradient(self, logreg_problem):
        """Test the sample-j dual gradient at y = 1/n is n * l_j * e_j."""
        n = logreg_problem.n
        x = np.zeros(logreg_problem.dim_x)
        y = np.full(n, 1.0 / n)
        _, gy = logreg_problem.sample_grads(0, x, y, np.array([2]))
        expected = np.zeros(n)
        expected[2] = n * math.log(2.0)
        np.testing.assert_allclose(gy[0], expected, rtol=1e-12, atol=1e-15)

    def test_lambda1_derived(self, logreg_problem):
        """Test lambda1 = 1 / n^2 and dimensions."""
        assert logreg_problem.n == 6
        assert logreg_problem.lambda1 == pytest.approx(1.0 / 36.0)
        assert (logreg_problem.dim_x, logreg_problem.dim_y) == (3, 6)

    def test_regularizer_bounded(self, logreg_problem):
        """Test each regularizer term stays below lambda2."""
        x = np.array([1e3, -1e3, 0.0])
        assert 0.0 <= logreg_problem.regularizer(x) < 2 * logreg_problem.lambda2

    def test_unequal_shards_rejected(self, make_samples):
        """Test shards of different sizes are rejected."""
        samples = make_samples(7, 2)
        parts = Partition(shards=[[0, 1, 2], [3, 4, 5, 6]], mode=PartitionMode.IID_SHUFFLE)
        with pytest.raises(ProblemError, match="equal shards"):
            RobustLogRegProblem(samples, parts)

    def test_non_binary_labels_rejected(self):
        """Test raw multi-class labels are rejected."""
        samples = [Sample(features=[1.0], label=2.0), Sample(features=[1.0], label=-1.0)]
        parts = Partition(shards=[[0], [1]], mode=PartitionMode.IID_SHUFFLE)
        with pytest.raises(ProblemError, match="labels"):
            RobustLogRegProblem(samples, parts)

    def test_large_margins_finite(self, logreg_problem):
        """Test extreme iterates keep gradients finite."""
        x = np.full(logreg_problem.dim_x, 1e4)
        y = np.full(logreg_problem.dim_y, 0.5)
        gx, gy = logreg_problem.grad_full(x, y)
        assert np.all(np.isfinite(gx)) and np.all(np.isfinite(gy))


class TestAUC:
    """Tests for AUCProblem."""

    def test_dimensions_and_tau(self, auc_problem):
        """Test w = (x, c1, c2), scalar dual and global positive fraction."""
        assert (auc_problem.dim_x, auc_problem.dim_y) == (5, 1)
        assert auc_problem.tau == pytest.approx(0.5)

    def test_tau_is_global(self):
        """Test tau is shared even when a shard holds a single class."""
        samples = [Sample(features=[1.0], label=b) for b in (1.0, 1.0, 1.0, -1.0)]
        parts = partition(samples, 2, PartitionMode.LABEL_SORTED)
        problem = AUCProblem(samples, parts)
        assert problem.tau == pytest.approx(0.75)

    def test_single_class_rejected(self):
        """Test a dataset without negatives is rejected."""
        samples = [Sample(features=[1.0], label=1.0) for _ in range(4)]
        parts = partition(samples, 2, PartitionMode.LABEL_SORTED)
        with pytest.raises(ProblemError, match="both classes"):
            AUCProblem(samples, parts)

    def test_strongly_concave_in_dual(self, auc_problem):
        """Test the dual gradient decreases by 2 tau (1 - tau) per unit of lambda."""
        w = np.random.default_rng(9).standard_normal(auc_problem.dim_x)
        _, g0 = auc_problem.grad_full(w, np.array([0.0]))
        _, g1 = auc_problem.grad_full(w, np.array([1.0]))
        tau = auc_problem.tau
        assert g0[0] - g1[0] == pytest.approx(2 * tau * (1 - tau), rel=1e-10)


class TestSyntheticPL:
    """Tests for SyntheticPLProblem."""

    def test_closed_form_phi(self, synthetic_problem):
        """Test grad Phi equals grad_x f at the maximizer."""
        x = np.random.default_rng(10).standard_normal(3)
        phi, grad = synthetic_problem.phi_analytic(x)
        y_star = synthetic_problem.y_star(x)
        gx, gy = synthetic_problem.grad_full(x, y_star)
        np.testing.assert_allclose(gy, 0.0, atol=1e-12)
        np.testing.assert_allclose(grad, gx, rtol=1e-10, atol=1e-12)
        assert phi == pytest.approx(synthetic_problem.value(x, y_star), rel=1e-10)

    def test_pl_certificate(self):
        """Test ||grad_y f||^2 >= 2 mu (max_y f - f) at 20 random points."""
        problem = SyntheticPLProblem.generate(d=5, num_clients=3, mu=0.7, h=1.0, seed=12)
        rng = np.random.default_rng(13)
        for _ in range(20):
            x, y = random_point(problem, rng)
            _, gy = problem.grad_full(x, y)
            gap = problem.value(x, problem.y_star(x)) - problem.value(x, y)
            lhs = float(gy @ gy)
            assert lhs - 2 * problem.mu * gap >= -1e-9 * max(1.0, lhs)

    def test_average_independent_of_h(self):
        """Test perturbations cancel so the averaged objective ignores h."""
        low = SyntheticPLProblem.generate(d=3, num_clients=5, h=0.0, seed=4)
        high = SyntheticPLProblem.generate(d=3, num_clients=5, h=10.0, seed=4)
        x, y = np.ones(3), -np.ones(3)
        np.testing.assert_allclose(low.grad_full(x, y)[0], high.grad_full(x, y)[0], atol=1e-10)
        assert not np.allclose(low.client_grad_full(0, x, y)[0], high.client_grad_full(0, x, y)[0])

    def test_lipschitz_identity(self):
        """Test L_f for B = I, mu = 1 is the golden ratio."""
        problem = SyntheticPLProblem(np.eye(2), np.zeros(2), mu=1.0, num_clients=2)
        assert problem.lipschitz_bound() == pytest.approx((1 + math.sqrt(5)) / 2, rel=1e-12)

    def test_noiseless_stochastic_is_exact(self, synthetic_problem):
        """Test zero noise levels make stochastic gradients exact."""
        x, y = np.ones(3), np.ones(3)
        gx, gy = synthetic_problem.grad_stoch(2, x, y, np.random.default_rng(0))
        cx, cy = synthetic_problem.client_grad_full(2, x, y)
        np.testing.assert_array_equal(gx, cx)
        np.testing.assert_array_equal(gy, cy)

    def test_invalid_construction(self):
        """Test invalid parameters raise."""
        with pytest.raises(ProblemError):
            SyntheticPLProblem(np.eye(2), np.zeros(2), mu=0.0, num_clients=1)
        with pytest.raises(DimensionMismatchError):
            SyntheticPLProblem(np.eye(3), np.zeros(2), mu=1.0, num_clients=1)
