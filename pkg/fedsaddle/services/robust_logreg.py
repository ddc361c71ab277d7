"""Distributionally robust logistic regression with a nonconvex regularizer."""

import logging
from typing import List, Tuple

import numpy as np

from fedsaddle.errors import ProblemError
from fedsaddle.models import Partition, Sample
from fedsaddle.services.base_problem import DatasetProblem, GradientPair
from fedsaddle.services.linalg import Vector, dot

logger = logging.getLogger(__name__)


class RobustLogRegProblem(DatasetProblem):
    """
    f_i(x, y) = sum_j y_j * l_j(x) - V(y) + g(x) over the n samples of client i.

    l_j(x) = log(1 + exp(-b_j * a_j.x)), V(y) = lambda1/2 * ||n*y - 1||^2 with
    lambda1 = 1/n^2, and g(x) = lambda2 * sum_k alpha*x_k^2 / (1 + alpha*x_k^2).
    The dual y has length n and is shared by every client, so all shards
    must have the same size. The single-sample oracle on sample j is
    F_j = n*y_j*l_j(x) - V(y) + g(x), whose shard average is f_i.
    """

    def __init__(
        self,
        samples: List[Sample],
        parts: Partition,
        lambda2: float = 1e-3,
        alpha: float = 10.0,
    ):
        super().__init__(samples, parts)
        sizes = set(parts.shard_sizes)
        if len(sizes) != 1:
            raise ProblemError(f"robust logistic regression needs equal shards, got sizes {sorted(sizes)}")
        if lambda2 <= 0 or alpha <= 0:
            raise ProblemError("lambda2 and alpha must be positive")
        self.n = sizes.pop()
        self.lambda2 = lambda2
        self.alpha = alpha

    @property
    def dim_x(self) -> int:
        return self.num_features

    @property
    def dim_y(self) -> int:
        return self.n

    @property
    def lambda1(self) -> float:
        """Dual penalty weight, always 1/n^2."""
        return 1.0 / self.n**2

    def regularizer(self, x: Vector) -> float:
        """g(x); each term lies in [0, lambda2)."""
        sq = self.alpha * x * x
        return self.lambda2 * float(np.cumsum(sq / (1.0 + sq))[-1]) if x.size else 0.0

    def regularizer_grad(self, x: Vector) -> Vector:
        return self.lambda2 * 2.0 * self.alpha * x / (1.0 + self.alpha * x * x) ** 2

    def dual_penalty(self, y: Vector) -> float:
        r = self.n * y - 1.0
        return 0.5 * self.lambda1 * dot(r, r)

    def dual_penalty_grad(self, y: Vector) -> Vector:
        return self.lambda1 * self.n * (self.n * y - 1.0)

    def _margins(self, client: int, x: Vector, indices=None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        A = self.features[client] if indices is None else self.features[client][indices]
        b = self.labels[client] if indices is None else self.labels[client][indices]
        return A, b, b * (A @ x)

    def sample_grads(
        self, client: int, x: Vector, y: Vector, indices: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray]:
        A, b, margins = self._margins(client, x, indices)
        losses = np.logaddexp(0.0, -margins)
        # d l_j / d margin = -sigmoid(-margin)
        slope = -np.exp(-np.logaddexp(0.0, margins))

        coef = self.n * y[indices] * b * slope
        gx = coef[:, None] * A + self.regularizer_grad(x)[None, :]

        gy = np.tile(-self.dual_penalty_grad(y), (indices.shape[0], 1))
        gy[np.arange(indices.shape[0]), indices] += self.n * losses
        return gx, gy

    def client_grad_full(self, client: int, x: Vector, y: Vector) -> GradientPair:
        A, b, margins = self._margins(client, x)
        losses = np.logaddexp(0.0, -margins)
        slope = -np.exp(-np.logaddexp(0.0, margins))
        gx = A.T @ (y * b * slope) + self.regularizer_grad(x)
        gy = losses - self.dual_penalty_grad(y)
        return gx, gy

    def client_value(self, client: int, x: Vector, y: Vector) -> float:
        _, _, margins = self._margins(client, x)
        losses = np.logaddexp(0.0, -margins)
        return dot(y, losses) - self.dual_penalty(y) + self.regularizer(x)
