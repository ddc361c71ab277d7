"""Exception hierarchy shared by all fedsaddle services."""

from typing import Optional


class FedSaddleError(Exception):
    """Base exception for fedsaddle errors."""


class ConfigError(FedSaddleError):
    """Invalid configuration or flag combination."""


class DimensionMismatchError(FedSaddleError):
    """Vector or matrix dimensions do not agree."""


class NonFiniteError(FedSaddleError):
    """A NaN or infinite value appeared in a vector."""


class LibsvmParseError(FedSaddleError):
    """Malformed LIBSVM line."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class DatasetError(FedSaddleError):
    """Dataset cannot satisfy a selection or partition request."""


class ProblemError(FedSaddleError):
    """Problem construction or oracle misuse."""


class ControlVariateError(FedSaddleError):
    """Control variates used before initialization."""


class DivergenceError(FedSaddleError):
    """An iterate left the finite/bounded region during a run."""

    def __init__(
        self,
        message: str,
        algorithm: Optional[str] = None,
        round_index: Optional[int] = None,
        client: Optional[int] = None,
        step: Optional[int] = None,
    ):
        context = ", ".join(
            f"{name}={value}"
            for name, value in (
                ("algorithm", algorithm),
                ("round", round_index),
                ("client", client),
                ("step", step),
            )
            if value is not None
        )
        super().__init__(f"{message} ({context})" if context else message)
        self.algorithm = algorithm
        self.round_index = round_index
        self.client = client
        self.step = step


class PhiEstimationError(FedSaddleError):
    """The inner maximization used to evaluate Phi diverged."""


class ConstraintInputError(FedSaddleError):
    """Invalid inputs to the learning-rate constraint checker."""
