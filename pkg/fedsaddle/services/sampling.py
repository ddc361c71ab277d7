"""Seeded random streams and client sampling."""

import logging
from enum import IntEnum
from typing import List

import numpy as np

from fedsaddle.errors import ConfigError

logger = logging.getLogger(__name__)


class Purpose(IntEnum):
    """Purpose codes mixed into every stream seed."""

    SAMPLING = 1
    LOCAL_STEPS = 2
    VARIATE_REFRESH = 3
    VARIATE_INIT = 4
    INIT = 5
    ESTIMATION = 6
    DATA = 7


class RngStreams:
    """
    Independent generators keyed by (seed, purpose, client, round).

    Every stream is built from its own ``SeedSequence`` entropy, so drawing
    from one never shifts another. Turning control variates off leaves the
    sampling and local-step streams untouched.
    """

    def __init__(self, seed: int):
        if seed < 0:
            raise ConfigError(f"seed must be non-negative, got {seed}")
        self.seed = seed

    def stream(self, purpose: Purpose, *keys: int) -> np.random.Generator:
        """Generator for an arbitrary (purpose, keys) combination."""
        return np.random.default_rng([self.seed, int(purpose), *keys])

    def sampling(self, round_index: int) -> np.random.Generator:
        return self.stream(Purpose.SAMPLING, round_index)

    def local_steps(self, client: int, round_index: int) -> np.random.Generator:
        return self.stream(Purpose.LOCAL_STEPS, client, round_index)

    def variate_refresh(self, client: int, round_index: int) -> np.random.Generator:
        return self.stream(Purpose.VARIATE_REFRESH, client, round_index)

    def variate_init(self, client: int) -> np.random.Generator:
        return self.stream(Purpose.VARIATE_INIT, client)

    def init(self) -> np.random.Generator:
        return self.stream(Purpose.INIT)


def sample_clients(M: int, m: int, rng: np.random.Generator) -> List[int]:
    """
    Draw m distinct clients out of M uniformly without replacement.

    Uses a partial Fisher-Yates shuffle; the result is sorted ascending so it
    doubles as the aggregation order.

    Args:
        M: Total number of clients
        m: Number of clients to sample
        rng: Generator owned by the caller for this round

    Returns:
        Sorted list of m client indices

    Raises:
        ConfigError: If m is outside [1, M]
    """
    if not 1 <= m <= M:
        raise ConfigError(f"cannot sample m={m} clients out of M={M}")
    if m == M:
        return list(range(M))

    pool = list(range(M))
    for i in range(m):
        j = int(rng.integers(i, M))
        pool[i], pool[j] = pool[j], pool[i]
    return sorted(pool[:m])
