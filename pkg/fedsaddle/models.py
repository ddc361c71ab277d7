"""Pydantic models for federated min-max experiments."""

from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeFloat,
    PositiveFloat,
    field_validator,
    model_validator,
)


class Algorithm(str, Enum):
    """Supported federated algorithms."""

    SAGDA_I = "sagda_i"
    SAGDA_II = "sagda_ii"
    FSGDA = "fsgda"
    PARALLEL_SGDA = "parallel_sgda"
    CD_MA = "cd_ma"


class ProblemKind(str, Enum):
    """Supported min-max objectives."""

    LOGREG_ROBUST = "logreg_robust"
    AUC = "auc"
    SYNTHETIC_PL = "synthetic_pl"


class PartitionMode(str, Enum):
    """How samples are split across clients."""

    LABEL_SORTED = "label_sorted"
    IID_SHUFFLE = "iid_shuffle"


class PhiMode(str, Enum):
    """How the surrogate gradient norm is evaluated."""

    ANALYTIC_IF_AVAILABLE = "analytic_if_available"
    INNER_ASCENT = "inner_ascent"


class Sample(BaseModel):
    """One labelled data point with dense features."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    features: np.ndarray = Field(..., description="Dense feature vector of length d")
    label: float = Field(..., description="Raw label, or +1/-1 after binarization")

    @field_validator("features", mode="before")
    @classmethod
    def _as_float_vector(cls, value: Any) -> np.ndarray:
        array = np.asarray(value, dtype=np.float64)
        if array.ndim != 1:
            raise ValueError("features must be one-dimensional")
        return array


class Partition(BaseModel):
    """Assignment of sample indices to clients."""

    shards: List[List[int]] = Field(..., min_length=1, description="One index list per client")
    mode: PartitionMode
    dropped: int = Field(0, ge=0, description="Samples truncated so that M divides N")

    @property
    def num_clients(self) -> int:
        """Number of shards."""
        return len(self.shards)

    @property
    def shard_sizes(self) -> List[int]:
        """Sample count of every shard."""
        return [len(shard) for shard in self.shards]


class DatasetStats(BaseModel):
    """Summary of a parsed (and optionally partitioned) dataset."""

    num_samples: int = Field(..., ge=0)
    num_features: int = Field(..., ge=0)
    class_counts: Dict[str, int] = Field(default_factory=dict)
    shard_sizes: List[int] = Field(default_factory=list)
    dropped: int = Field(0, ge=0)


class LearningRates(BaseModel):
    """Two-sided learning rates; effective rates are derived."""

    eta_xl: NonNegativeFloat = Field(..., description="Local primal rate")
    eta_yl: NonNegativeFloat = Field(..., description="Local dual rate")
    eta_xg: NonNegativeFloat = Field(1.0, description="Global primal rate")
    eta_yg: NonNegativeFloat = Field(1.0, description="Global dual rate")

    @property
    def eta_x(self) -> float:
        """Effective primal rate eta_xl * eta_xg."""
        return self.eta_xl * self.eta_xg

    @property
    def eta_y(self) -> float:
        """Effective dual rate eta_yl * eta_yg."""
        return self.eta_yl * self.eta_yg


class AlgoConfig(BaseModel):
    """Configuration of one federated run."""

    algorithm: Algorithm = Algorithm.SAGDA_II
    eta_xl: NonNegativeFloat = 1e-2
    eta_yl: NonNegativeFloat = 1e-2
    eta_xg: NonNegativeFloat = 1.0
    eta_yg: NonNegativeFloat = 1.0
    K: int = Field(1, ge=1, description="Local steps per round")
    M: int = Field(1, ge=1, description="Total clients")
    m: int = Field(1, ge=1, description="Clients sampled per round")
    T: int = Field(0, ge=0, description="Communication rounds")
    seed: int = Field(0, ge=0, lt=2**64)
    batch: int = Field(1, ge=1, description="Stochastic batch size per local step")
    eval_every: int = Field(1, ge=1)
    init_scale: NonNegativeFloat = Field(1.0, description="Std of the random initial point")
    control_variates: bool = Field(True, description="Disable to collapse SAGDA onto FSGDA")
    workers: int = Field(1, ge=1, description="Client thread pool size")

    @model_validator(mode="before")
    @classmethod
    def _force_baseline_shape(cls, data: Any) -> Any:
        """Parallel-SGDA is K=1, m=M, unit global rates; CD-MA uses unit global rates."""
        if not isinstance(data, dict):
            return data
        algorithm = data.get("algorithm")
        if algorithm in (Algorithm.PARALLEL_SGDA, Algorithm.PARALLEL_SGDA.value):
            data = {**data, "K": 1, "m": data.get("M", 1), "eta_xg": 1.0, "eta_yg": 1.0}
        elif algorithm in (Algorithm.CD_MA, Algorithm.CD_MA.value):
            data = {**data, "eta_xg": 1.0, "eta_yg": 1.0}
        return data

    @model_validator(mode="after")
    def _check_participation(self) -> "AlgoConfig":
        if self.m > self.M:
            raise ValueError(f"m ({self.m}) must not exceed M ({self.M})")
        return self

    @property
    def rates(self) -> LearningRates:
        """Learning rates as a standalone model."""
        return LearningRates(
            eta_xl=self.eta_xl, eta_yl=self.eta_yl, eta_xg=self.eta_xg, eta_yg=self.eta_yg
        )

    @property
    def eta_x(self) -> float:
        """Effective primal rate."""
        return self.eta_xl * self.eta_xg

    @property
    def eta_y(self) -> float:
        """Effective dual rate."""
        return self.eta_yl * self.eta_yg


class RoundRecord(BaseModel):
    """Metrics row for one evaluated round; describes the model after the round."""

    t: int = Field(..., ge=0)
    participants: List[int] = Field(..., description="Sampled client set S_t, ascending")
    grad_norm_phi_sq: Optional[float] = None
    grad_norm_x_sq: Optional[float] = None
    grad_norm_y_sq: Optional[float] = None
    f_value: Optional[float] = None
    phi_residual_sq: Optional[float] = Field(None, description="Inner solve ||grad_y f||^2")
    samples_per_client: float = Field(0.0, ge=0, description="Cumulative draws, client mean")
    comm_sessions: int = Field(0, ge=0, description="Cumulative communication sessions")
    wall_ms: float = Field(0.0, ge=0)

    @field_validator("participants")
    @classmethod
    def _distinct(cls, value: List[int]) -> List[int]:
        if len(set(value)) != len(value):
            raise ValueError("participants must be distinct")
        return value


class PhiEstimatorConfig(BaseModel):
    """Settings of the inner maximization that evaluates Phi."""

    max_inner_steps: int = Field(1000, ge=1)
    inner_step: Optional[PositiveFloat] = Field(
        None, description="Inner ascent step; defaults to 0.5 / L_f_hat"
    )
    tol: PositiveFloat = Field(1e-8, description="Stop when ||grad_y f||^2 <= tol")
    mode: PhiMode = PhiMode.ANALYTIC_IF_AVAILABLE


class ProblemConstants(BaseModel):
    """Smoothness and PL constants fed to the constraint checker."""

    lipschitz: float = Field(..., description="L_f")
    mu: float = Field(..., description="PL modulus")

    @property
    def smoothness_phi(self) -> float:
        """Smoothness of Phi, L = L_f + L_f^2 / mu."""
        return self.lipschitz + self.lipschitz**2 / self.mu


class EstimatedConstants(BaseModel):
    """Empirical lower bounds on the assumption constants."""

    lf_hat: NonNegativeFloat
    sigma_x_sq: NonNegativeFloat
    sigma_y_sq: NonNegativeFloat
    sigma_xg_sq: NonNegativeFloat
    sigma_yg_sq: NonNegativeFloat


class InequalityResult(BaseModel):
    """One evaluated learning-rate inequality."""

    name: str
    lhs: float
    rhs: float
    relation: Literal["<=", ">="]
    satisfied: bool


class ConstraintReport(BaseModel):
    """Outcome of checking a theorem's learning-rate conditions."""

    which: Algorithm
    inequalities: List[InequalityResult]
    satisfied: bool
    best_effort: bool = False
    K: int
    eta_xl: float
    eta_yl: float
    eta_x: float
    eta_y: float
    lipschitz: float
    mu: float
    smoothness_phi: float
    a_constants: Dict[str, float] = Field(default_factory=dict)
    b1: Optional[float] = None


class ExperimentConfig(BaseModel):
    """Fully resolved experiment configuration (config file overlaid by flags)."""

    model_config = ConfigDict(extra="forbid")

    problem: ProblemKind = ProblemKind.SYNTHETIC_PL
    algo: Algorithm = Algorithm.SAGDA_II
    data: Optional[Path] = Field(None, description="LIBSVM file for dataset problems")
    partition: PartitionMode = PartitionMode.LABEL_SORTED
    M: int = Field(16, ge=1)
    m: int = Field(16, ge=1)
    K: int = Field(5, ge=1)
    T: int = Field(..., ge=0, description="Rounds; always explicit")
    batch: int = Field(1, ge=1)
    eta_xl: NonNegativeFloat = 1e-2
    eta_yl: NonNegativeFloat = 1e-2
    eta_xg: NonNegativeFloat = 1.0
    eta_yg: NonNegativeFloat = 1.0
    seed: int = Field(0, ge=0, lt=2**64)
    eval_every: int = Field(1, ge=1)
    smooth_window: int = Field(5, ge=1)
    init_scale: NonNegativeFloat = 1.0
    control_variates: bool = True
    workers: int = Field(1, ge=1)

    # Phi estimator
    phi_mode: PhiMode = PhiMode.ANALYTIC_IF_AVAILABLE
    phi_max_inner_steps: int = Field(1000, ge=1)
    phi_inner_step: Optional[PositiveFloat] = None
    phi_tol: PositiveFloat = 1e-8

    # Dataset selection
    per_class: Optional[int] = Field(None, ge=0, description="Subsample size per class")
    positive_label: Optional[float] = Field(
        None, description="Raw label treated as positive; None keeps labels > 0"
    )

    # Robust logistic regression
    lambda2: PositiveFloat = 1e-3
    alpha: PositiveFloat = 10.0

    # Synthetic problem
    d: int = Field(8, ge=1)
    mu: PositiveFloat = 1.0
    h: NonNegativeFloat = 0.0
    sigma_x: NonNegativeFloat = 0.0
    sigma_y: NonNegativeFloat = 0.0

    @model_validator(mode="after")
    def _check_combination(self) -> "ExperimentConfig":
        if self.m > self.M:
            raise ValueError(f"m ({self.m}) must not exceed M ({self.M})")
        if self.problem != ProblemKind.SYNTHETIC_PL and self.data is None:
            raise ValueError(f"problem {self.problem.value} requires --data")
        return self

    def algo_config(self) -> AlgoConfig:
        """Engine configuration for this experiment."""
        return AlgoConfig(
            algorithm=self.algo,
            eta_xl=self.eta_xl,
            eta_yl=self.eta_yl,
            eta_xg=self.eta_xg,
            eta_yg=self.eta_yg,
            K=self.K,
            M=self.M,
            m=self.m,
            T=self.T,
            seed=self.seed,
            batch=self.batch,
            eval_every=self.eval_every,
            init_scale=self.init_scale,
            control_variates=self.control_variates,
            workers=self.workers,
        )

    def phi_config(self) -> PhiEstimatorConfig:
        """Phi estimator configuration for this experiment."""
        return PhiEstimatorConfig(
            max_inner_steps=self.phi_max_inner_steps,
            inner_step=self.phi_inner_step,
            tol=self.phi_tol,
            mode=self.phi_mode,
        )


class CellResult(BaseModel):
    """Outcome of one sweep cell."""

    algorithm: Algorithm
    m: int
    K: int
    seed: int
    status: Literal["ok", "failed"]
    path: Optional[Path] = None
    rounds: int = 0
    final_grad_norm_phi_sq: Optional[float] = None
    error: Optional[str] = None


class SpeedupCell(BaseModel):
    """Rounds-to-threshold of one (m, K) cell, with its seed-averaged series."""

    m: int
    K: int
    status: Literal["ok", "failed"]
    rounds_to_threshold: Optional[int] = Field(None, description="None when never reached")
    rounds: List[int] = Field(default_factory=list, description="Rounds completed per point")
    smoothed_grad_norm_phi_sq: List[float] = Field(default_factory=list)
    error: Optional[str] = None


class RunSummary(BaseModel):
    """End-of-run report written next to the CSV."""

    problem: ProblemKind
    algorithm: Algorithm
    rounds: int
    evaluated_rounds: int
    samples_per_client: float
    comm_sessions: int
    initial_grad_norm_phi_sq: Optional[float] = None
    final_grad_norm_phi_sq: Optional[float] = None
    final_grad_norm_x_sq: Optional[float] = None
    final_grad_norm_y_sq: Optional[float] = None
    final_f_value: Optional[float] = None
    final_phi_residual_sq: Optional[float] = None
    initial_potential: Optional[float] = None
    final_potential: Optional[float] = None
    wall_seconds: float = 0.0
