"""Dense vector arithmetic with fixed-order reductions.

Vectors are one-dimensional ``float64`` numpy arrays. Reductions go through
``np.cumsum``, which accumulates strictly left to right, so results do not
depend on the pairwise/SIMD summation strategy ``np.sum`` picks.
"""

import logging
from typing import Iterable, Sequence

import numpy as np

from fedsaddle.errors import DimensionMismatchError, NonFiniteError

logger = logging.getLogger(__name__)

Vector = np.ndarray


def as_vector(values: Iterable[float] | np.ndarray) -> Vector:
    """
    Copy values into a finite float64 vector.

    Raises:
        NonFiniteError: If any entry is NaN or infinite
        DimensionMismatchError: If values are not one-dimensional
    """
    vector = np.array(values, dtype=np.float64)
    if vector.ndim != 1:
        raise DimensionMismatchError(f"expected a 1-D vector, got shape {vector.shape}")
    ensure_finite(vector)
    return vector


def ensure_finite(vector: Vector, what: str = "vector") -> Vector:
    """Raise NonFiniteError unless every entry of vector is finite."""
    if not np.all(np.isfinite(vector)):
        raise NonFiniteError(f"{what} contains NaN or infinite entries")
    return vector


def _check_same_length(a: Vector, b: Vector) -> None:
    if a.shape != b.shape:
        raise DimensionMismatchError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")


def dot(a: Vector, b: Vector) -> float:
    """Inner product accumulated in ascending index order."""
    _check_same_length(a, b)
    if a.shape[0] == 0:
        return 0.0
    ensure_finite(a)
    ensure_finite(b)
    with np.errstate(over="ignore", invalid="ignore"):
        total = float(np.cumsum(a * b)[-1])
    if not np.isfinite(total):
        raise NonFiniteError("dot product overflowed")
    return total


def norm2_sq(a: Vector) -> float:
    """Squared Euclidean norm; bitwise equal to ``dot(a, a)``."""
    return dot(a, a)


def axpy(alpha: float, x: Vector, y: Vector) -> Vector:
    """
    Return ``alpha * x + y`` as a new vector.

    Raises:
        DimensionMismatchError: If x and y differ in length
        NonFiniteError: If the result has a NaN or infinite entry
    """
    _check_same_length(x, y)
    with np.errstate(over="ignore", invalid="ignore"):
        result = alpha * x + y
    return ensure_finite(result, "axpy result")


def ordered_sum(vectors: Sequence[Vector]) -> Vector:
    """Sum vectors left to right in the given order."""
    if not vectors:
        raise DimensionMismatchError("cannot sum an empty sequence of vectors")
    total = np.array(vectors[0], dtype=np.float64)
    for vector in vectors[1:]:
        _check_same_length(total, vector)
        total = total + vector
    return total


def ordered_mean(vectors: Sequence[Vector]) -> Vector:
    """Average of vectors, summed in the given order."""
    return ordered_sum(vectors) / len(vectors)
