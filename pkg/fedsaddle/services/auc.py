"""AUC maximization as a min-max problem with a linear scorer."""

import logging
from typing import List, Tuple

import numpy as np

from fedsaddle.errors import ProblemError
from fedsaddle.models import Partition, Sample
from fedsaddle.services.base_problem import DatasetProblem
from fedsaddle.services.linalg import Vector

logger = logging.getLogger(__name__)


class AUCProblem(DatasetProblem):
    """
    Square-loss AUC surrogate over w = (x, c1, c2) and a scalar dual lambda.

    Per sample (a, b) with score h = x.a and p = 1{b=+1}, q = 1{b=-1}:

        F = (1-tau)(h-c1)^2 p + tau(h-c2)^2 q
            + 2(1+lambda)(tau*h*q - (1-tau)*h*p) - tau(1-tau) lambda^2

    tau is the positive fraction of the whole training set, shared by all
    clients. F is strongly concave in lambda with curvature 2 tau (1-tau).
    """

    def __init__(self, samples: List[Sample], parts: Partition):
        super().__init__(samples, parts)
        labels = np.concatenate(self.labels)
        self.tau = float(np.count_nonzero(labels > 0)) / labels.shape[0]
        if not 0.0 < self.tau < 1.0:
            raise ProblemError(f"AUC needs both classes present, positive fraction is {self.tau}")
        logger.info(f"AUC problem with tau={self.tau:.4f} over {labels.shape[0]} samples")

    @property
    def dim_x(self) -> int:
        return self.num_features + 2

    @property
    def dim_y(self) -> int:
        return 1

    def _terms(self, client: int, w: Vector, indices: np.ndarray):
        A = self.features[client][indices]
        b = self.labels[client][indices]
        x, c1, c2 = w[:-2], w[-2], w[-1]
        positive = (b > 0).astype(np.float64)
        negative = 1.0 - positive
        return A, A @ x, c1, c2, positive, negative

    def sample_values(self, client: int, w: Vector, lam: Vector, indices: np.ndarray) -> np.ndarray:
        """Per-sample objective F for the given indices."""
        _, h, c1, c2, p, q = self._terms(client, w, indices)
        tau, dual = self.tau, lam[0]
        return (
            (1.0 - tau) * (h - c1) ** 2 * p
            + tau * (h - c2) ** 2 * q
            + 2.0 * (1.0 + dual) * (tau * h * q - (1.0 - tau) * h * p)
            - tau * (1.0 - tau) * dual**2
        )

    def sample_grads(
        self, client: int, w: Vector, lam: Vector, indices: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray]:
        A, h, c1, c2, p, q = self._terms(client, w, indices)
        tau, dual = self.tau, lam[0]

        dh = (
            2.0 * (1.0 - tau) * (h - c1) * p
            + 2.0 * tau * (h - c2) * q
            + 2.0 * (1.0 + dual) * (tau * q - (1.0 - tau) * p)
        )
        gc1 = -2.0 * (1.0 - tau) * (h - c1) * p
        gc2 = -2.0 * tau * (h - c2) * q
        gw = np.hstack([dh[:, None] * A, gc1[:, None], gc2[:, None]])

        glam = 2.0 * (tau * h * q - (1.0 - tau) * h * p) - 2.0 * tau * (1.0 - tau) * dual
        return gw, glam[:, None]

    def client_value(self, client: int, w: Vector, lam: Vector) -> float:
        values = self.sample_values(client, w, lam, np.arange(self.shard_size(client)))
        return float(np.cumsum(values)[-1]) / values.shape[0]
