"""Synthetic bilinear-quadratic problem with a closed-form primal surrogate."""

import logging
import math
from functools import cached_property
from typing import Optional, Tuple

import numpy as np

from fedsaddle.errors import DimensionMismatchError, ProblemError
from fedsaddle.services.base_problem import GradientPair, MinMaxProblem
from fedsaddle.services.linalg import Vector, dot
from fedsaddle.services.sampling import Purpose

logger = logging.getLogger(__name__)


class SyntheticPLProblem(MinMaxProblem):
    """
    f_i(x, y) = x^T B_i y + c_i^T x - (mu/2) ||y||^2.

    B_i = B_bar + h * E_i and c_i = c_bar + h * u_i where the perturbations sum
    to zero across clients, so the averaged objective (and therefore Phi)
    does not depend on the heterogeneity scale h. Stochastic gradients add
    zero-mean Gaussian noise with per-coordinate std sigma_x / sigma_y.
    """

    has_closed_form_phi = True

    def __init__(
        self,
        b_bar: np.ndarray,
        c_bar: Vector,
        mu: float,
        num_clients: int,
        h: float = 0.0,
        e_perturb: Optional[np.ndarray] = None,
        u_perturb: Optional[np.ndarray] = None,
        sigma_x: float = 0.0,
        sigma_y: float = 0.0,
    ):
        b_bar = np.asarray(b_bar, dtype=np.float64)
        c_bar = np.asarray(c_bar, dtype=np.float64)
        d = c_bar.shape[0]
        if b_bar.shape != (d, d):
            raise DimensionMismatchError(f"B_bar must be {d}x{d}, got {b_bar.shape}")
        if mu <= 0:
            raise ProblemError(f"mu must be positive, got {mu}")
        if num_clients < 1:
            raise ProblemError("need at least one client")
        if h < 0 or sigma_x < 0 or sigma_y < 0:
            raise ProblemError("h and noise levels must be non-negative")

        e_perturb = np.zeros((num_clients, d, d)) if e_perturb is None else e_perturb
        u_perturb = np.zeros((num_clients, d)) if u_perturb is None else u_perturb
        if e_perturb.shape != (num_clients, d, d) or u_perturb.shape != (num_clients, d):
            raise DimensionMismatchError("perturbations must have one entry per client")

        self.b_bar = b_bar
        self.c_bar = c_bar
        self.mu = float(mu)
        self.h = float(h)
        self.sigma_x = float(sigma_x)
        self.sigma_y = float(sigma_y)
        self.b = b_bar[None, :, :] + h * e_perturb
        self.c = c_bar[None, :] + h * u_perturb

    @classmethod
    def generate(
        cls,
        d: int,
        num_clients: int,
        mu: float = 1.0,
        h: float = 0.0,
        sigma_x: float = 0.0,
        sigma_y: float = 0.0,
        seed: int = 0,
        b_bar: Optional[np.ndarray] = None,
        c_bar: Optional[Vector] = None,
    ) -> "SyntheticPLProblem":
        """
        Build a seeded random instance.

        B_bar = Q diag(s) with Q random orthogonal and s uniform in [0.5, 1.5];
        c_bar is normal scaled by 1/sqrt(d). Perturbations are centered across
        clients and scaled so the largest has unit spectral (or Euclidean) norm.
        Passing b_bar or c_bar overrides the random mean while keeping the
        same perturbations.
        """
        rng = np.random.default_rng([seed, int(Purpose.DATA), 3])
        q, _ = np.linalg.qr(rng.standard_normal((d, d)))
        scales = rng.uniform(0.5, 1.5, size=d)
        random_b_bar = q * scales[None, :]
        random_c_bar = rng.standard_normal(d) / math.sqrt(d)

        e_perturb = rng.standard_normal((num_clients, d, d))
        e_perturb -= e_perturb.mean(axis=0, keepdims=True)
        e_scale = max(np.linalg.norm(e, 2) for e in e_perturb)
        if e_scale > 0:
            e_perturb /= e_scale

        u_perturb = rng.standard_normal((num_clients, d))
        u_perturb -= u_perturb.mean(axis=0, keepdims=True)
        u_scale = float(np.max(np.linalg.norm(u_perturb, axis=1)))
        if u_scale > 0:
            u_perturb /= u_scale

        return cls(
            random_b_bar if b_bar is None else b_bar,
            random_c_bar if c_bar is None else c_bar,
            mu,
            num_clients,
            h=h,
            e_perturb=e_perturb,
            u_perturb=u_perturb,
            sigma_x=sigma_x,
            sigma_y=sigma_y,
        )

    @property
    def dim_x(self) -> int:
        return self.c_bar.shape[0]

    @property
    def dim_y(self) -> int:
        return self.c_bar.shape[0]

    @property
    def num_clients(self) -> int:
        return self.b.shape[0]

    def draw(self, client: int, rng: np.random.Generator, batch: int = 1) -> Tuple[Vector, Vector]:
        """Batch-averaged standard normal noise for both blocks."""
        noise_x = rng.standard_normal((batch, self.dim_x))
        noise_y = rng.standard_normal((batch, self.dim_y))
        return noise_x.mean(axis=0), noise_y.mean(axis=0)

    def grad_at(self, client: int, x: Vector, y: Vector, draw: Tuple[Vector, Vector]) -> GradientPair:
        gx, gy = self.client_grad_full(client, x, y)
        noise_x, noise_y = draw
        if self.sigma_x > 0:
            gx = gx + self.sigma_x * noise_x
        if self.sigma_y > 0:
            gy = gy + self.sigma_y * noise_y
        return gx, gy

    def client_grad_full(self, client: int, x: Vector, y: Vector) -> GradientPair:
        b = self.b[client]
        return b @ y + self.c[client], b.T @ x - self.mu * y

    def client_value(self, client: int, x: Vector, y: Vector) -> float:
        return dot(x, self.b[client] @ y) + dot(self.c[client], x) - 0.5 * self.mu * dot(y, y)

    def y_star(self, x: Vector) -> Vector:
        """Maximizer of f(x, .) for the averaged objective."""
        return self.b_bar.T @ x / self.mu

    def phi_analytic(self, x: Vector) -> Tuple[float, Vector]:
        """Return (Phi(x), grad Phi(x)) in closed form."""
        if x.shape != (self.dim_x,):
            raise DimensionMismatchError(f"expected x of length {self.dim_x}, got {x.shape}")
        bt_x = self.b_bar.T @ x
        phi = dot(bt_x, bt_x) / (2.0 * self.mu) + dot(self.c_bar, x)
        return phi, self.b_bar @ bt_x / self.mu + self.c_bar

    @cached_property
    def _lipschitz(self) -> float:
        d = self.dim_x
        best = 0.0
        for b in self.b:
            jacobian = np.block([[np.zeros((d, d)), b], [b.T, -self.mu * np.eye(d)]])
            best = max(best, float(np.linalg.norm(jacobian, 2)))
        return best

    def lipschitz_bound(self) -> float:
        """Exact joint smoothness max_i ||[[0, B_i], [B_i^T, -mu I]]||_2."""
        return self._lipschitz
