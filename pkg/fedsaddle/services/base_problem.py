"""Base min-max problem class and shared oracle plumbing."""

from abc import ABC, abstractmethod
from typing import Any, List, Optional, Tuple

import numpy as np

from fedsaddle.errors import DimensionMismatchError, ProblemError
from fedsaddle.models import Partition, Sample
from fedsaddle.services.linalg import Vector, ordered_mean

GradientPair = Tuple[Vector, Vector]


class MinMaxProblem(ABC):
    """
    Federated objective f(x, y) = (1/M) * sum_i f_i(x, y).

    Stochastic oracles are split in two halves: ``draw`` consumes randomness
    from a caller-owned generator and ``grad_at`` evaluates both gradient
    blocks for that draw, so x and y updates share one sample.
    """

    #: True when ``phi_analytic`` is available.
    has_closed_form_phi = False

    @property
    @abstractmethod
    def dim_x(self) -> int:
        """Dimension of the min-side variable."""

    @property
    @abstractmethod
    def dim_y(self) -> int:
        """Dimension of the max-side variable."""

    @property
    @abstractmethod
    def num_clients(self) -> int:
        """Number of clients M."""

    @abstractmethod
    def draw(self, client: int, rng: np.random.Generator, batch: int = 1) -> Any:
        """
        Draw the randomness of one stochastic oracle call.

        Args:
            client: Client index
            rng: Generator owned by the caller
            batch: Mini-batch size

        Returns:
            Opaque draw accepted by ``grad_at``
        """

    @abstractmethod
    def grad_at(self, client: int, x: Vector, y: Vector, draw: Any) -> GradientPair:
        """
        Stochastic gradients of f_i at (x, y) for a given draw.

        Returns:
            Tuple of (grad_x, grad_y)
        """

    @abstractmethod
    def client_grad_full(self, client: int, x: Vector, y: Vector) -> GradientPair:
        """Exact gradients of f_i over the client's whole shard."""

    @abstractmethod
    def client_value(self, client: int, x: Vector, y: Vector) -> float:
        """Exact value of f_i."""

    def lipschitz_bound(self) -> Optional[float]:
        """Exact joint smoothness constant L_f when known."""
        return None

    def grad_stoch(
        self, client: int, x: Vector, y: Vector, rng: np.random.Generator, batch: int = 1
    ) -> GradientPair:
        """Both stochastic gradient blocks from a single draw."""
        self.check_client(client)
        self.check_point(x, y)
        return self.grad_at(client, x, y, self.draw(client, rng, batch))

    def grad_x_stoch(
        self, client: int, x: Vector, y: Vector, rng: np.random.Generator, batch: int = 1
    ) -> Vector:
        return self.grad_stoch(client, x, y, rng, batch)[0]

    def grad_y_stoch(
        self, client: int, x: Vector, y: Vector, rng: np.random.Generator, batch: int = 1
    ) -> Vector:
        return self.grad_stoch(client, x, y, rng, batch)[1]

    def grad_full(self, x: Vector, y: Vector) -> GradientPair:
        """Exact (grad_x f, grad_y f), folded over clients in index order."""
        self.check_point(x, y)
        grads = [self.client_grad_full(i, x, y) for i in range(self.num_clients)]
        return ordered_mean([g[0] for g in grads]), ordered_mean([g[1] for g in grads])

    def value(self, x: Vector, y: Vector) -> float:
        """Exact f(x, y)."""
        self.check_point(x, y)
        values = np.array([self.client_value(i, x, y) for i in range(self.num_clients)])
        return float(np.cumsum(values)[-1]) / self.num_clients

    def check_point(self, x: Vector, y: Vector) -> None:
        """Raise DimensionMismatchError unless (x, y) fits this problem."""
        if x.shape != (self.dim_x,) or y.shape != (self.dim_y,):
            raise DimensionMismatchError(
                f"expected x of length {self.dim_x} and y of length {self.dim_y}, "
                f"got {x.shape} and {y.shape}"
            )

    def check_client(self, client: int) -> None:
        """Raise ProblemError unless client is a valid index."""
        if not 0 <= client < self.num_clients:
            raise ProblemError(f"client {client} out of range [0, {self.num_clients})")


class DatasetProblem(MinMaxProblem):
    """Problem backed by per-client shards of labelled samples."""

    def __init__(self, samples: List[Sample], parts: Partition):
        if not samples:
            raise ProblemError("dataset is empty")
        labels = {s.label for s in samples}
        if not labels <= {-1.0, 1.0}:
            raise ProblemError(f"labels must be +1/-1, found {sorted(labels)[:5]}")

        self.features: List[np.ndarray] = []
        self.labels: List[np.ndarray] = []
        for k, shard in enumerate(parts.shards):
            if not shard:
                raise ProblemError(f"client {k} has an empty shard")
            self.features.append(np.stack([samples[j].features for j in shard]))
            self.labels.append(np.array([samples[j].label for j in shard], dtype=np.float64))
        self.num_features = self.features[0].shape[1]

    @property
    def num_clients(self) -> int:
        return len(self.features)

    def shard_size(self, client: int) -> int:
        return self.labels[client].shape[0]

    def draw(self, client: int, rng: np.random.Generator, batch: int = 1) -> np.ndarray:
        """Sample indices drawn uniformly with replacement from the client's shard."""
        return rng.integers(0, self.shard_size(client), size=batch)

    def grad_at(self, client: int, x: Vector, y: Vector, draw: np.ndarray) -> GradientPair:
        gx, gy = self.sample_grads(client, x, y, draw)
        return gx.mean(axis=0), gy.mean(axis=0)

    def client_grad_full(self, client: int, x: Vector, y: Vector) -> GradientPair:
        return self.grad_at(client, x, y, np.arange(self.shard_size(client)))

    @abstractmethod
    def sample_grads(
        self, client: int, x: Vector, y: Vector, indices: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Per-sample gradient rows (one row per index) for both blocks."""
