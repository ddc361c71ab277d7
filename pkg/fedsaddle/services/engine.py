"""Federated round engine for SAGDA (Options I and II), FSGDA and baselines."""

import logging
import time
from concurrent.futures import Executor, ThreadPoolExecutor
from contextlib import contextmanager
from typing import Callable, Dict, Iterable, Iterator, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from fedsaddle.errors import (
    ConfigError,
    ControlVariateError,
    DimensionMismatchError,
    DivergenceError,
    NonFiniteError,
)
from fedsaddle.models import AlgoConfig, Algorithm, RoundRecord
from fedsaddle.services.base_problem import GradientPair, MinMaxProblem
from fedsaddle.services.linalg import Vector, as_vector, axpy, ordered_mean, ordered_sum
from fedsaddle.services.sampling import RngStreams, sample_clients

logger = logging.getLogger(__name__)

DIVERGENCE_LIMIT = 1e12

RoundHook = Callable[[MinMaxProblem, Vector, Vector], Dict[str, Optional[float]]]


class ServerState(BaseModel):
    """Global model, global control variates and round counters."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    x: np.ndarray
    y: np.ndarray
    v_bar_x: np.ndarray
    v_bar_y: np.ndarray
    t: int = 0
    comm_sessions: int = 0
    pending_deltas: List[Tuple[np.ndarray, np.ndarray]] = Field(
        default_factory=list, description="Option I variate deltas awaiting the next round"
    )


class ClientState(BaseModel):
    """Per-client control variates and sample accounting."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    client_id: int
    v_x: Optional[np.ndarray] = None
    v_y: Optional[np.ndarray] = None
    anchor_round: Optional[int] = Field(None, description="Round of the last variate refresh")
    samples_used: int = 0

    @property
    def initialized(self) -> bool:
        return self.v_x is not None and self.v_y is not None


class ClientUpdate(NamedTuple):
    """What one client sends back at the end of a round."""

    client: int
    x: Vector
    y: Vector
    v_x: Optional[Vector] = None
    v_y: Optional[Vector] = None


def check_iterate(
    x: Vector,
    y: Vector,
    algorithm: Optional[str] = None,
    round_index: Optional[int] = None,
    client: Optional[int] = None,
    step: Optional[int] = None,
) -> None:
    """Raise DivergenceError if an iterate is non-finite or exceeds the magnitude limit."""
    for name, vector in (("x", x), ("y", y)):
        if not np.all(np.isfinite(vector)):
            raise DivergenceError(f"{name} iterate is not finite", algorithm, round_index, client, step)
        if vector.size and float(np.max(np.abs(vector))) > DIVERGENCE_LIMIT:
            raise DivergenceError(
                f"{name} iterate exceeds {DIVERGENCE_LIMIT:g}", algorithm, round_index, client, step
            )


def local_direction(
    gx: Vector,
    gy: Vector,
    v_x: Optional[Vector] = None,
    v_y: Optional[Vector] = None,
    v_bar_x: Optional[Vector] = None,
    v_bar_y: Optional[Vector] = None,
) -> GradientPair:
    """
    Corrected local direction (g - v_i) + v_bar for both blocks.

    Without control variates the raw stochastic gradient is returned, which
    makes the local loop plain SGDA.
    """
    if v_x is None or v_y is None:
        return gx, gy
    return (gx - v_x) + v_bar_x, (gy - v_y) + v_bar_y


def local_sagda_steps(
    problem: MinMaxProblem,
    client: int,
    x: Vector,
    y: Vector,
    cfg: AlgoConfig,
    rng: np.random.Generator,
    v_x: Optional[Vector] = None,
    v_y: Optional[Vector] = None,
    v_bar_x: Optional[Vector] = None,
    v_bar_y: Optional[Vector] = None,
    round_index: Optional[int] = None,
) -> GradientPair:
    """
    Run K simultaneous descent-ascent steps on one client.

    Both gradient blocks at step k come from the same draw at the same
    iterate; x descends with eta_xl and y ascends with eta_yl.

    Args:
        problem: Problem oracle
        client: Client index
        x: Synchronized primal iterate
        y: Synchronized dual iterate
        cfg: Algorithm configuration (K, batch, local rates)
        rng: The client's local-step stream for this round
        v_x: Client primal control variate, or None for plain SGDA
        v_y: Client dual control variate
        v_bar_x: Global primal control variate
        v_bar_y: Global dual control variate
        round_index: Round number used for error context

    Returns:
        Tuple of (x, y) after K local steps

    Raises:
        DimensionMismatchError: If control variates do not match the problem
        DivergenceError: If an iterate leaves the finite region
    """
    if v_x is not None:
        for name, vector, size in (
            ("v_x", v_x, problem.dim_x),
            ("v_y", v_y, problem.dim_y),
            ("v_bar_x", v_bar_x, problem.dim_x),
            ("v_bar_y", v_bar_y, problem.dim_y),
        ):
            if vector is None or vector.shape != (size,):
                raise DimensionMismatchError(f"{name} must have length {size}")

    algorithm = cfg.algorithm.value
    for k in range(cfg.K):
        draw = problem.draw(client, rng, cfg.batch)
        gx, gy = problem.grad_at(client, x, y, draw)
        dx, dy = local_direction(gx, gy, v_x, v_y, v_bar_x, v_bar_y)
        try:
            x_next = axpy(-cfg.eta_xl, dx, x)
            y_next = axpy(cfg.eta_yl, dy, y)
        except NonFiniteError as e:
            raise DivergenceError("local step produced a non-finite iterate", algorithm, round_index, client, k) from e
        check_iterate(x_next, y_next, algorithm, round_index, client, k)
        x, y = x_next, y_next
    return x, y


def server_aggregate(
    server: ServerState, returns: Sequence[Tuple[Vector, Vector]], cfg: AlgoConfig
) -> GradientPair:
    """
    Apply the two-sided global step to the averaged client iterates.

    x_{t+1} = x_t + eta_xg * (mean_i x_i - x_t), and likewise for y with
    eta_yg; returns must be ordered by ascending client id.

    Raises:
        ConfigError: If the number of returns is not m
    """
    if len(returns) != cfg.m:
        raise ConfigError(f"expected {cfg.m} client returns, got {len(returns)}")
    x_avg = ordered_mean([r[0] for r in returns])
    y_avg = ordered_mean([r[1] for r in returns])
    try:
        x_next = axpy(cfg.eta_xg, x_avg - server.x, server.x)
        y_next = axpy(cfg.eta_yg, y_avg - server.y, server.y)
    except NonFiniteError as e:
        raise DivergenceError("aggregation produced a non-finite iterate", cfg.algorithm.value, server.t) from e
    check_iterate(x_next, y_next, cfg.algorithm.value, server.t)
    return x_next, y_next


class FederatedEngine:
    """Server and client state machines sharing one round-loop skeleton."""

    def __init__(
        self,
        problem: MinMaxProblem,
        cfg: AlgoConfig,
        x0: Optional[Vector] = None,
        y0: Optional[Vector] = None,
    ):
        """
        Initialize engine state.

        Args:
            problem: Problem with exactly cfg.M clients
            cfg: Algorithm configuration
            x0: Initial primal point; defaults to init_scale * N(0, I) from the seed
            y0: Initial dual point; same default

        Raises:
            ConfigError: If the problem's client count differs from cfg.M
            NonFiniteError: If x0 or y0 has a NaN or infinite entry
        """
        if problem.num_clients != cfg.M:
            raise ConfigError(f"problem has {problem.num_clients} clients but M={cfg.M}")

        self.problem = problem
        self.cfg = cfg
        self.streams = RngStreams(cfg.seed)

        init_rng = self.streams.init()
        x_init = cfg.init_scale * init_rng.standard_normal(problem.dim_x)
        y_init = cfg.init_scale * init_rng.standard_normal(problem.dim_y)
        x0 = x_init if x0 is None else as_vector(x0)
        y0 = y_init if y0 is None else as_vector(y0)
        problem.check_point(x0, y0)

        self.server = ServerState(
            x=x0, y=y0, v_bar_x=np.zeros(problem.dim_x), v_bar_y=np.zeros(problem.dim_y)
        )
        self.clients = [ClientState(client_id=i) for i in range(cfg.M)]
        self._executor: Optional[Executor] = None

        self._rounds = {
            Algorithm.SAGDA_I: self.option1_round,
            Algorithm.SAGDA_II: self.option2_round,
            Algorithm.FSGDA: self.fsgda_round,
            Algorithm.PARALLEL_SGDA: self.parallel_sgda_round,
            Algorithm.CD_MA: self.cd_ma_round,
        }

    @property
    def samples_per_client(self) -> float:
        """Cumulative stochastic draws averaged over all M clients."""
        return sum(c.samples_used for c in self.clients) / self.cfg.M

    @property
    def variates_initialized(self) -> bool:
        return all(c.initialized for c in self.clients)

    def _map_clients(self, work: Callable[[int], ClientUpdate], clients: Iterable[int]) -> List:
        """Run work per client; results come back in the order of clients."""
        if self._executor is None:
            return [work(i) for i in clients]
        return list(self._executor.map(work, clients))

    @contextmanager
    def _client_pool(self) -> Iterator[None]:
        if self.cfg.workers <= 1 or self._executor is not None:
            yield
            return
        with ThreadPoolExecutor(max_workers=self.cfg.workers) as pool:
            self._executor = pool
            try:
                yield
            finally:
                self._executor = None

    def _draw_variate(self, client: int, rng: np.random.Generator) -> GradientPair:
        """Single-sample stochastic gradient at the current global model."""
        problem = self.problem
        return problem.grad_at(client, self.server.x, self.server.y, problem.draw(client, rng, 1))

    def _finish_round(
        self, participants: List[int], updates: Sequence[ClientUpdate], sessions: int, started: float
    ) -> RoundRecord:
        server = self.server
        server.x, server.y = server_aggregate(server, [(u.x, u.y) for u in updates], self.cfg)
        server.comm_sessions += sessions
        record = RoundRecord(
            t=server.t,
            participants=participants,
            samples_per_client=self.samples_per_client,
            comm_sessions=server.comm_sessions,
            wall_ms=(time.perf_counter() - started) * 1000.0,
        )
        server.t += 1
        return record

    def initialize_variates(self) -> None:
        """
        Option I initialization: one full-participation collection at z_0.

        Every client stores a single-sample gradient as v_i and the server
        sets v_bar to their average. Counts as one communication session.
        """
        grads = self._map_clients(
            lambda i: self._draw_variate(i, self.streams.variate_init(i)), range(self.cfg.M)
        )
        for client, (gx, gy) in zip(self.clients, grads):
            client.v_x, client.v_y = gx, gy
            client.anchor_round = 0
            client.samples_used += 1
        self.server.v_bar_x = ordered_mean([g[0] for g in grads])
        self.server.v_bar_y = ordered_mean([g[1] for g in grads])
        self.server.comm_sessions += 1
        logger.info(f"Initialized control variates for {self.cfg.M} clients")

    def _plain_round(self) -> RoundRecord:
        """Sample, K plain SGDA steps per client, two-sided aggregation."""
        started = time.perf_counter()
        cfg, server = self.cfg, self.server
        t = server.t
        participants = sample_clients(cfg.M, cfg.m, self.streams.sampling(t))
        x_t, y_t = server.x, server.y

        def work(i: int) -> ClientUpdate:
            x, y = local_sagda_steps(
                self.problem, i, x_t, y_t, cfg, self.streams.local_steps(i, t), round_index=t
            )
            return ClientUpdate(i, x, y)

        updates = self._map_clients(work, participants)
        for i in participants:
            self.clients[i].samples_used += cfg.K * cfg.batch
        return self._finish_round(participants, updates, 1, started)

    def option1_round(self) -> RoundRecord:
        """
        SAGDA Option I round with persistent client variates.

        Applies last round's variate deltas to v_bar with 1/M scaling, runs
        corrected local steps, then each participant refreshes v_i with a
        fresh draw at the synchronized point and returns the delta.

        Raises:
            ControlVariateError: If variates were never initialized
        """
        cfg, server = self.cfg, self.server
        if not cfg.control_variates:
            return self._plain_round()
        if not self.variates_initialized:
            raise ControlVariateError("Option I requires initialized control variates")

        started = time.perf_counter()
        t = server.t
        if server.pending_deltas:
            server.v_bar_x = server.v_bar_x + ordered_sum([d[0] for d in server.pending_deltas]) / cfg.M
            server.v_bar_y = server.v_bar_y + ordered_sum([d[1] for d in server.pending_deltas]) / cfg.M
            server.pending_deltas = []

        participants = sample_clients(cfg.M, cfg.m, self.streams.sampling(t))
        x_t, y_t = server.x, server.y
        v_bar_x, v_bar_y = server.v_bar_x, server.v_bar_y

        def work(i: int) -> ClientUpdate:
            state = self.clients[i]
            x, y = local_sagda_steps(
                self.problem, i, x_t, y_t, cfg, self.streams.local_steps(i, t),
                state.v_x, state.v_y, v_bar_x, v_bar_y, round_index=t,
            )
            fresh_x, fresh_y = self._draw_variate(i, self.streams.variate_refresh(i, t))
            return ClientUpdate(i, x, y, fresh_x, fresh_y)

        updates = self._map_clients(work, participants)
        deltas = []
        for update in updates:
            state = self.clients[update.client]
            deltas.append((update.v_x - state.v_x, update.v_y - state.v_y))
            state.v_x, state.v_y = update.v_x, update.v_y
            state.anchor_round = t
            state.samples_used += cfg.K * cfg.batch + 1
        server.pending_deltas = deltas
        return self._finish_round(participants, updates, 1, started)

    def option2_round(self) -> RoundRecord:
        """
        SAGDA Option II round: collect fresh variates, then corrected local steps.

        Phase one gathers v_i at z_t from every participant and sets v_bar to
        their mean; phase two broadcasts v_bar. Costs two sessions.
        """
        cfg, server = self.cfg, self.server
        if not cfg.control_variates:
            return self._plain_round()

        started = time.perf_counter()
        t = server.t
        participants = sample_clients(cfg.M, cfg.m, self.streams.sampling(t))
        x_t, y_t = server.x, server.y

        collected = self._map_clients(
            lambda i: self._draw_variate(i, self.streams.variate_refresh(i, t)), participants
        )
        server.v_bar_x = ordered_mean([v[0] for v in collected])
        server.v_bar_y = ordered_mean([v[1] for v in collected])
        v_bar_x, v_bar_y = server.v_bar_x, server.v_bar_y
        for i, (v_x, v_y) in zip(participants, collected):
            state = self.clients[i]
            state.v_x, state.v_y = v_x, v_y
            state.anchor_round = t

        def work(i: int) -> ClientUpdate:
            state = self.clients[i]
            x, y = local_sagda_steps(
                self.problem, i, x_t, y_t, cfg, self.streams.local_steps(i, t),
                state.v_x, state.v_y, v_bar_x, v_bar_y, round_index=t,
            )
            return ClientUpdate(i, x, y)

        updates = self._map_clients(work, participants)
        for i in participants:
            self.clients[i].samples_used += cfg.K * cfg.batch + 1
        return self._finish_round(participants, updates, 2, started)

    def fsgda_round(self) -> RoundRecord:
        """FSGDA round: plain local SGDA with two-sided global rates."""
        return self._plain_round()

    def parallel_sgda_round(self) -> RoundRecord:
        """One SGDA step on every client, then averaging (K=1, m=M, unit global rates)."""
        return self._plain_round()

    def cd_ma_round(self) -> RoundRecord:
        """K mini-batch SGDA steps per sampled client, then model averaging."""
        return self._plain_round()

    def step(self) -> RoundRecord:
        """Execute one round of the configured algorithm."""
        return self._rounds[self.cfg.algorithm]()

    def evaluate_current(self, hooks: Iterable[RoundHook]) -> Dict[str, Optional[float]]:
        """Merge every hook's metrics at the current global model."""
        metrics: Dict[str, Optional[float]] = {}
        for hook in hooks:
            metrics.update(hook(self.problem, self.server.x, self.server.y))
        return metrics

    def run(self, hooks: Optional[Iterable[RoundHook]] = None) -> List[RoundRecord]:
        """
        Execute cfg.T rounds and return the evaluated records.

        Hooks run after rounds t with t % eval_every == 0 and after the last
        round; each record describes the global model after its round.
        """
        hooks = list(hooks or [])
        cfg = self.cfg
        records: List[RoundRecord] = []

        with self._client_pool():
            if (
                cfg.T > 0
                and cfg.algorithm == Algorithm.SAGDA_I
                and cfg.control_variates
                and not self.variates_initialized
            ):
                self.initialize_variates()

            for _ in range(cfg.T):
                record = self.step()
                if record.t % cfg.eval_every == 0 or record.t == cfg.T - 1:
                    record = record.model_copy(update=self.evaluate_current(hooks))
                    records.append(record)
                    logger.debug(
                        f"round {record.t}: phi={record.grad_norm_phi_sq} "
                        f"samples={record.samples_per_client:g} sessions={record.comm_sessions}"
                    )

        logger.info(
            f"{cfg.algorithm.value} finished {cfg.T} rounds, "
            f"{self.server.comm_sessions} sessions, {self.samples_per_client:g} samples/client"
        )
        return records


def run(
    problem: MinMaxProblem,
    cfg: AlgoConfig,
    metrics_hooks: Optional[Iterable[RoundHook]] = None,
    x0: Optional[Vector] = None,
    y0: Optional[Vector] = None,
) -> List[RoundRecord]:
    """Run cfg.T rounds from a fresh engine and return the evaluated records."""
    return FederatedEngine(problem, cfg, x0, y0).run(metrics_hooks)
