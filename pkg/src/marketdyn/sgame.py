"""Agent-based market game with capital-gain strategy scoring.

N agents each hold s random technical strategies (lookup tables from the last
m binary price moves to buy/sell) plus one fundamental strategy (buy below the
fundamental value, sell above, sell on a tie). Every step each agent plays its
highest-scoring strategy; the summed actions form the excess demand A(t),
which moves the log price by A(t)/liquidity. Strategies are scored by realized
capital gain: yesterday's prescribed action times today's log return, so a
strategy that called the move that then happened gains score. A fraction rho
of the agents may short; the rest abstain instead of selling from a flat book.

The relevant control parameter is the game temperature 2^(m+1)/(N*s), the
ratio of independent strategies (including the fundamental one) to strategies
held by the population. Cold games (large, strategy-rich populations) herd
into self-reinforcing trends and leave the fundamental price; hot games stay
disordered around it. ``speculative_probability`` and ``temperature_sweep``
measure this transition over seeded ensembles, ``quantile_ensemble`` shows how
the short-enabled fraction rho opens the downside, and ``run_slaved`` scores
the same strategy pool against an externally imposed price path to diagnose
when technical strategies decouple from the fundamental one.

Determinism: all randomness flows from counter-based per-run generators (see
``seeds``). Within a run, draws occur in a fixed documented order: strategy
tables, then initial history bits, then the short-assignment shuffle at
initialization; per step, one tie-break key per (agent, strategy) in agent
then strategy index order, and one coin flip only when the excess demand is
exactly zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import LengthError, ParameterError
from .seeds import spawn_generator
from .timeseries import PriceSeries, ReturnSeries

TECHNICAL = "technical"
FUNDAMENTAL = "fundamental"


@dataclass(frozen=True)
class GameConfig:
    """Population and market parameters of one game.

    ``liquidity=None`` resolves to N (unit per-capita price impact), which
    keeps games with equal N*s statistically comparable across different N.
    """

    N: int                          # agents
    s: int                          # technical strategies per agent
    m: int                          # memory bits
    liquidity: float | None = None  # shares per unit log return; None -> N
    rho: float = 0.0                # fraction of agents allowed to short
    v_f: float = 1.0                # fundamental value; also the initial price
    steps: int = 200
    seed: int = 0
    gamma: float = 0.0              # abstention threshold on the score spread
    runs: int = 100                 # ensemble size

    def __post_init__(self):
        if self.N < 1 or self.s < 1 or self.m < 1:
            raise ParameterError(f"need N, s, m >= 1, got N={self.N}, s={self.s}, m={self.m}")
        if self.liquidity is not None and self.liquidity <= 0:
            raise ParameterError(f"liquidity must be > 0, got {self.liquidity}")
        if not 0.0 <= self.rho <= 1.0:
            raise ParameterError(f"rho must be in [0, 1], got {self.rho}")
        if self.v_f <= 0:
            raise ParameterError(f"v_f must be positive, got {self.v_f}")
        if self.steps < 0:
            raise ParameterError(f"steps must be >= 0, got {self.steps}")
        if self.gamma < 0:
            raise ParameterError(f"gamma must be >= 0, got {self.gamma}")
        if self.runs < 1:
            raise ParameterError(f"runs must be >= 1, got {self.runs}")

    @property
    def resolved_liquidity(self) -> float:
        return float(self.N) if self.liquidity is None else float(self.liquidity)

    @property
    def n_histories(self) -> int:
        return 1 << self.m


def temperature(m: int, N: int, s: int) -> float:
    """Game temperature 2^(m+1) / (N*s)."""
    if N < 1 or s < 1 or m < 1:
        raise ParameterError("temperature needs m, N, s >= 1")
    return float(2 ** (m + 1)) / (N * s)


@dataclass(frozen=True)
class Strategy:
    """One strategy of one agent; technical strategies carry a 2^m action table."""

    kind: str
    table: np.ndarray | None = None


@dataclass(frozen=True)
class Agent:
    """Read-only snapshot of one agent (see ``agent_view``)."""

    strategies: tuple[Strategy, ...]
    scores: np.ndarray
    position: int
    allowed_short: bool
    risk_aversion: float


@dataclass
class GameState:
    """Mutable state of one running game; owned by a single worker.

    ``tables`` has shape (N, s, 2^m) with entries in {-1, +1}; ``scores`` and
    ``prev_actions`` have shape (N, s+1) with the fundamental strategy in the
    last column. ``history`` packs the last m price-move bits, newest in bit 0.
    """

    tables: np.ndarray
    scores: np.ndarray
    prev_actions: np.ndarray
    positions: np.ndarray
    allowed_short: np.ndarray
    history: int
    log_price: float
    t: int = 0
    rng: np.random.Generator = field(default_factory=np.random.default_rng)

    @property
    def price(self) -> float:
        return float(np.exp(self.log_price))

    @classmethod
    def initialize(cls, config: GameConfig, rng: np.random.Generator) -> "GameState":
        """Seeded random initial state; draw order: tables, history bits, shuffle."""
        n, s, hist_size = config.N, config.s, config.n_histories
        tables = (rng.integers(0, 2, size=(n, s, hist_size), dtype=np.int8) * 2 - 1).astype(np.int8)
        bits = rng.integers(0, 2, size=config.m)
        history = 0
        for b in bits:
            history = (history << 1) | int(b)
        permutation = rng.permutation(n)
        allowed_short = np.zeros(n, dtype=bool)
        allowed_short[permutation[: int(np.floor(config.rho * n))]] = True
        return cls(
            tables=tables,
            scores=np.zeros((n, s + 1)),
            prev_actions=np.zeros((n, s + 1), dtype=np.int8),
            positions=np.zeros(n, dtype=np.int64),
            allowed_short=allowed_short,
            history=history,
            log_price=float(np.log(config.v_f)),
            rng=rng,
        )


def agent_view(state: GameState, config: GameConfig, i: int) -> Agent:
    """Snapshot of agent i: its strategies, scores, position and permissions."""
    techs = tuple(Strategy(TECHNICAL, state.tables[i, k].copy()) for k in range(config.s))
    return Agent(
        strategies=techs + (Strategy(FUNDAMENTAL),),
        scores=state.scores[i].copy(),
        position=int(state.positions[i]),
        allowed_short=bool(state.allowed_short[i]),
        risk_aversion=config.gamma,
    )


@dataclass(frozen=True)
class StepRecord:
    """Per-step diagnostics: excess demand and strategy-usage counts."""

    a: int               # excess demand, sum of played actions
    n_technical: int     # agents whose argmax strategy was technical
    n_fundamental: int   # agents whose argmax strategy was the fundamental one
    n_abstained: int     # agents that played 0 (risk threshold or empty book)


def _choose(scores: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Argmax strategy per agent, ties broken uniformly via one key per slot."""
    keys = rng.random(scores.shape)
    best = scores.max(axis=1, keepdims=True)
    return np.where(scores == best, keys, -1.0).argmax(axis=1)


def step(state: GameState, config: GameConfig) -> StepRecord:
    """Advance the game one step in place and report the step diagnostics."""
    n, s = config.N, config.s
    actions = np.empty((n, s + 1), dtype=np.int8)
    actions[:, :s] = state.tables[:, :, state.history]
    actions[:, s] = 1 if state.log_price < np.log(config.v_f) else -1

    choice = _choose(state.scores, state.rng)
    played = actions[np.arange(n), choice].astype(np.int64)
    if config.gamma > 0.0:
        spread = state.scores.max(axis=1) - state.scores.min(axis=1)
        played[spread < config.gamma] = 0
    played[(~state.allowed_short) & (played == -1) & (state.positions <= 0)] = 0

    a = int(played.sum())
    log_return = a / config.resolved_liquidity
    state.scores += state.prev_actions * log_return
    state.prev_actions = actions
    if a > 0:
        bit = 1
    elif a < 0:
        bit = 0
    else:
        bit = int(state.rng.integers(0, 2))
    state.history = ((state.history << 1) | bit) & (config.n_histories - 1)
    state.positions += played
    state.log_price += log_return
    state.t += 1

    n_tech = int((choice < s).sum())
    return StepRecord(
        a=a,
        n_technical=n_tech,
        n_fundamental=n - n_tech,
        n_abstained=int((played == 0).sum()),
    )


@dataclass(frozen=True)
class GameDiagnostics:
    """Arrays of per-step diagnostics for one game."""

    n_agents: int
    a_t: np.ndarray
    n_technical: np.ndarray
    n_fundamental: np.ndarray
    n_abstained: np.ndarray


def run_game(config: GameConfig, run_index: int = 0) -> tuple[PriceSeries, GameDiagnostics]:
    """One seeded game; run_index k selects ensemble member k's RNG stream."""
    rng = spawn_generator(config.seed, run_index)
    state = GameState.initialize(config, rng)
    log_prices = np.empty(config.steps + 1)
    log_prices[0] = state.log_price
    a_t = np.empty(config.steps, dtype=np.int64)
    n_tech = np.empty(config.steps, dtype=np.int64)
    n_abst = np.empty(config.steps, dtype=np.int64)
    for k in range(config.steps):
        rec = step(state, config)
        log_prices[k + 1] = state.log_price
        a_t[k] = rec.a
        n_tech[k] = rec.n_technical
        n_abst[k] = rec.n_abstained
    prices = PriceSeries(np.arange(config.steps + 1), np.exp(log_prices))
    diag = GameDiagnostics(
        n_agents=config.N,
        a_t=a_t,
        n_technical=n_tech,
        n_fundamental=config.N - n_tech,
        n_abstained=n_abst,
    )
    return prices, diag


def order_imbalance(diag: GameDiagnostics) -> ReturnSeries:
    """Normalized excess demand A(t)/N in [-1, 1], the order parameter proxy."""
    return ReturnSeries(np.arange(len(diag.a_t)), diag.a_t / diag.n_agents)


@dataclass(frozen=True)
class EnsembleStats:
    """Summary of a seeded ensemble at one parameter point."""

    probability: float          # fraction of runs ending above twice the fundamental value
    stderr: float               # binomial standard error of that fraction
    mean_abs_imbalance: float   # time-averaged |A|/N over the second half, averaged over runs


def ensemble_stats(config: GameConfig) -> EnsembleStats:
    """Run the config's ensemble and summarize speculative outcomes."""
    threshold = np.log(2.0 * config.v_f)
    hits = 0
    imbalance_sum = 0.0
    half = max(1, config.steps // 2)
    for k in range(config.runs):
        prices, diag = run_game(config, run_index=k)
        if np.log(prices.values[-1]) > threshold:
            hits += 1
        imbalance_sum += float(np.mean(np.abs(diag.a_t[-half:]))) / config.N
    p = hits / config.runs
    stderr = float(np.sqrt(p * (1.0 - p) / config.runs))
    return EnsembleStats(p, stderr, imbalance_sum / config.runs)


def speculative_probability(config: GameConfig) -> float:
    """Probability that a game's final price exceeds twice the fundamental value."""
    return ensemble_stats(config).probability


@dataclass(frozen=True)
class SweepRow:
    T: float
    N: int
    s: int
    probability: float
    stderr: float
    mean_abs_imbalance: float


def temperature_sweep(base: GameConfig, points) -> list[SweepRow]:
    """Ensemble statistics per (N, s) point, sorted by game temperature."""
    rows = []
    for n, s in points:
        config = replace(base, N=int(n), s=int(s))
        stats = ensemble_stats(config)
        rows.append(
            SweepRow(
                T=temperature(config.m, config.N, config.s),
                N=config.N,
                s=config.s,
                probability=stats.probability,
                stderr=stats.stderr,
                mean_abs_imbalance=stats.mean_abs_imbalance,
            )
        )
    rows.sort(key=lambda row: (row.T, row.N))
    return rows


def quantile_ensemble(config: GameConfig) -> tuple[PriceSeries, PriceSeries, PriceSeries]:
    """Per-step 5%, 50% and 95% empirical quantile paths over the ensemble."""
    if config.runs < 20:
        raise ParameterError(f"quantile ensembles need runs >= 20, got {config.runs}")
    paths = np.empty((config.runs, config.steps + 1))
    for k in range(config.runs):
        prices, _ = run_game(config, run_index=k)
        paths[k] = prices.values
    q05, q50, q95 = np.quantile(paths, [0.05, 0.50, 0.95], axis=0)
    index = np.arange(config.steps + 1)
    return PriceSeries(index, q05), PriceSeries(index, q50), PriceSeries(index, q95)


@dataclass(frozen=True)
class SlavedDiagnostics:
    """Decoupling series from a slaved run: fraction of agents on technical strategies."""

    index: np.ndarray
    technical_fraction: np.ndarray


def run_slaved(external: PriceSeries, config: GameConfig) -> SlavedDiagnostics:
    """Score the strategy pool against an imposed price path; agents do not trade.

    The history bits and all payoffs come from the external series: the first
    m returns initialize the history, every later return credits each
    strategy's prescribed action with that realized log return. The decoupling
    proxy at each step is the fraction of agents whose current best-scoring
    strategy (ties broken uniformly) is technical rather than fundamental.
    """
    n_points = len(external)
    if n_points < config.m + 2:
        raise LengthError(f"external series needs at least m+2 = {config.m + 2} points")
    rets = np.diff(np.log(external.values))
    rng = spawn_generator(config.seed)
    n, s = config.N, config.s
    tables = (rng.integers(0, 2, size=(n, s, config.n_histories), dtype=np.int8) * 2 - 1).astype(np.int8)
    scores = np.zeros((n, s + 1))

    def shift(history: int, ret: float) -> int:
        if ret > 0:
            bit = 1
        elif ret < 0:
            bit = 0
        else:
            bit = int(rng.integers(0, 2))
        return ((history << 1) | bit) & (config.n_histories - 1)

    history = 0
    for k in range(config.m):
        history = shift(history, rets[k])

    log_vf = np.log(config.v_f)
    fractions = np.empty(n_points - config.m)
    out_index = external.index[config.m:]
    for j, k in enumerate(range(config.m, n_points - 1)):
        choice = _choose(scores, rng)
        fractions[j] = float((choice < s).sum()) / n
        actions = np.empty((n, s + 1), dtype=np.int8)
        actions[:, :s] = tables[:, :, history]
        actions[:, s] = 1 if np.log(external.values[k]) < log_vf else -1
        scores += actions * rets[k]
        history = shift(history, rets[k])
    choice = _choose(scores, rng)
    fractions[-1] = float((choice < s).sum()) / n
    return SlavedDiagnostics(out_index, fractions)
