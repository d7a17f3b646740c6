"""Two-asset fluctuation-ratchet trader around quasi-static support levels.

Both asset prices fluctuate around slowly moving support levels (estimated
here by a trailing moving average). The joint placement of the two prices
relative to their supports defines four configurations:

    X1: asset 1 above its support, asset 2 below
    X2: both above
    X3: both below
    X4: asset 1 below, asset 2 above

The trading rule breaks the symmetry by holding only assets in profitable
(undervalued) positions: buy asset 2 in X1, asset 1 in X4, flip a coin when
the configuration gives no edge. Given empirical occupancy, transition and
per-configuration price distributions, the expected per-trade return and its
standard deviation have exact expressions as sums over the discrete
distributions; a market-neutral backtester applies the same rule to real
series with a long/short equal-notional pair so portfolio drift cancels.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import ConsistencyError, LengthError, ParameterError, ValidationError
from .seeds import spawn_generator
from .timeseries import PriceSeries, moving_average

_PROB_TOL = 1e-12

ASSET_1 = 1
ASSET_2 = 2

BUY = "buy"
SELL = "sell"


class Configuration(IntEnum):
    """Joint above/below placement of the two prices; equality counts as below."""

    X1 = 0
    X2 = 1
    X3 = 2
    X4 = 3


def classify_configuration(a1: float, abar1: float, a2: float, abar2: float) -> Configuration:
    """Which of the four configurations the price pair is in right now."""
    for name, v in (("a1", a1), ("abar1", abar1), ("a2", a2), ("abar2", abar2)):
        if v <= 0:
            raise ValidationError(f"{name} must be positive, got {v}")
    above1 = a1 > abar1
    above2 = a2 > abar2
    if above1:
        return Configuration.X2 if above2 else Configuration.X1
    return Configuration.X4 if above2 else Configuration.X3


@dataclass(frozen=True)
class RatchetPolicy:
    """Conditional choice table: row i gives (P(asset 1 | X_{i+1}), P(asset 2 | X_{i+1}))."""

    choose: np.ndarray

    def __post_init__(self):
        table = np.asarray(self.choose, dtype=np.float64).copy()
        table.flags.writeable = False
        object.__setattr__(self, "choose", table)
        if table.shape != (4, 2):
            raise ValidationError(f"policy table must be 4x2, got {table.shape}")
        if np.any(table < 0) or np.any(table > 1):
            raise ValidationError("policy entries must lie in [0, 1]")
        if np.any(np.abs(table.sum(axis=1) - 1.0) > _PROB_TOL):
            raise ValidationError("each policy row must sum to 1")

    def probability(self, asset: int, config: Configuration) -> float:
        return float(self.choose[int(config), asset - 1])


def default_policy() -> RatchetPolicy:
    """Hold only undervalued assets: asset 2 in X1, asset 1 in X4, coin in X2/X3."""
    return RatchetPolicy(
        np.array(
            [
                [0.0, 1.0],   # X1: asset 1 never, asset 2 always
                [0.5, 0.5],   # X2
                [0.5, 0.5],   # X3
                [1.0, 0.0],   # X4: asset 1 always, asset 2 never
            ]
        )
    )


@dataclass(frozen=True)
class DiscreteDist:
    """Finite distribution of strictly positive prices."""

    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).copy()
        probs = np.asarray(self.probs, dtype=np.float64).copy()
        values.flags.writeable = False
        probs.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", probs)
        if values.shape != probs.shape or values.ndim != 1 or len(values) == 0:
            raise ValidationError("distribution needs matching 1-d values and probs")
        if np.any(values <= 0):
            raise ValidationError("price values must be strictly positive")
        if np.any(probs < 0):
            raise ValidationError("probabilities must be non-negative")
        if abs(probs.sum() - 1.0) > _PROB_TOL:
            raise ValidationError(f"probabilities sum to {probs.sum()}, not 1")


@dataclass(frozen=True)
class ConfigurationStats:
    """Empirical inputs of the analytic return/risk formulas.

    ``price_dist[s][i]`` is the price distribution of asset s+1 conditional on
    configuration X_{i+1} (2 assets x 4 configurations).
    """

    occupancy: np.ndarray                                  # P(X_i), length 4
    transition: np.ndarray                                 # P(X_i -> X_j), 4x4 row-stochastic
    price_dist: tuple[tuple[DiscreteDist, ...], ...]

    def __post_init__(self):
        occ = np.asarray(self.occupancy, dtype=np.float64).copy()
        tra = np.asarray(self.transition, dtype=np.float64).copy()
        occ.flags.writeable = False
        tra.flags.writeable = False
        object.__setattr__(self, "occupancy", occ)
        object.__setattr__(self, "transition", tra)
        if occ.shape != (4,):
            raise ValidationError("occupancy must have length 4")
        if np.any(occ < 0) or abs(occ.sum() - 1.0) > _PROB_TOL:
            raise ValidationError("occupancy must be a probability vector summing to 1")
        if tra.shape != (4, 4):
            raise ValidationError("transition matrix must be 4x4")
        if np.any(tra < 0) or np.any(np.abs(tra.sum(axis=1) - 1.0) > _PROB_TOL):
            raise ValidationError("every transition row must sum to 1")
        dists = tuple(tuple(row) for row in self.price_dist)
        object.__setattr__(self, "price_dist", dists)
        if len(dists) != 2 or any(len(row) != 4 for row in dists):
            raise ValidationError("price_dist must be 2 assets x 4 configurations")

    def dist(self, asset: int, config: Configuration | int) -> DiscreteDist:
        return self.price_dist[asset - 1][int(config)]


def _log_moments(stats: ConfigurationStats) -> tuple[np.ndarray, np.ndarray]:
    """First and second moments of ln(price) per (asset, configuration)."""
    m1 = np.empty((2, 4))
    m2 = np.empty((2, 4))
    for s in range(2):
        for i in range(4):
            d = stats.price_dist[s][i]
            logs = np.log(d.values)
            m1[s, i] = np.dot(d.probs, logs)
            m2[s, i] = np.dot(d.probs, logs * logs)
    return m1, m2


def _trade_weights(stats: ConfigurationStats, policy: RatchetPolicy) -> np.ndarray:
    """w[i, j, s] = P(X_i) P(X_i -> X_j) P(asset s+1 | X_i); sums to 1."""
    occ = stats.occupancy[:, None, None]
    tra = stats.transition[:, :, None]
    pol = policy.choose[:, None, :]
    return occ * tra * pol


def expected_return(stats: ConfigurationStats, policy: RatchetPolicy, cost: float = 0.0) -> float:
    """Average per-trade log return of the ratchet rule.

    A trade holds the policy-chosen asset s: bought from its price distribution
    in the configuration where the position opened (X_i) and sold from its
    distribution in the following configuration (X_j), then weighted by
    occupancy, transition and choice probabilities. Costs enter as a flat
    fraction per leg, two legs per completed trade.
    """
    if cost < 0:
        raise ParameterError("cost must be >= 0")
    m1, _ = _log_moments(stats)
    w = _trade_weights(stats, policy)
    sell_minus_buy = m1.T[None, :, :] - m1.T[:, None, :]   # [i, j, s] = m1[s, j] - m1[s, i]
    return float(np.sum(w * sell_minus_buy)) - 2.0 * cost


def risk(stats: ConfigurationStats, policy: RatchetPolicy, cost: float = 0.0) -> float:
    """Standard deviation of the per-trade return under the same weighting.

    Per-trade return is ln(sell/buy) - 2*cost; buy and sell prices draw
    independently from their configuration distributions.
    """
    if cost < 0:
        raise ParameterError("cost must be >= 0")
    m1, m2 = _log_moments(stats)
    w = _trade_weights(stats, policy)
    mean_diff = m1.T[None, :, :] - m1.T[:, None, :]
    # E[(ln sell - ln buy)^2] = m2_sell - 2 m1_sell m1_buy + m2_buy, per [i, j, s]
    second = m2.T[None, :, :] + m2.T[:, None, :] - 2.0 * m1.T[None, :, :] * m1.T[:, None, :]
    # shift by the per-trade cost: E[(x - 2c)^2] = E[x^2] - 4c E[x] + 4c^2
    second_with_cost = second - 4.0 * cost * mean_diff + 4.0 * cost * cost
    r_av = float(np.sum(w * mean_diff)) - 2.0 * cost
    radicand = float(np.sum(w * second_with_cost)) - r_av * r_av
    if radicand < -1e-12:
        raise ConsistencyError(f"variance radicand {radicand} is significantly negative")
    return float(np.sqrt(max(radicand, 0.0)))


def estimate_stats(p1: PriceSeries, p2: PriceSeries, m: int) -> ConfigurationStats:
    """Empirical occupancy, transitions and price distributions from two series.

    Supports are trailing moving averages over window m, so configurations are
    defined from step m-1 onward. Configurations with no observed outgoing
    transition get a uniform transition row (the smoothing needed to keep the
    matrix stochastic); a configuration never visited at all also gets a
    placeholder single-atom price distribution at the asset's mean price, which
    carries zero weight in the analytic formulas because its occupancy and
    inbound transitions are zero.
    """
    if len(p1) != len(p2):
        raise LengthError(f"series lengths differ: {len(p1)} vs {len(p2)}")
    if len(p1) < m + 2:
        raise LengthError(f"need at least m+2 = {m + 2} points, have {len(p1)}")
    ma1 = moving_average(p1, m).values
    ma2 = moving_average(p2, m).values
    v1 = p1.values[m - 1:]
    v2 = p2.values[m - 1:]
    configs = np.empty(len(v1), dtype=np.int64)
    for k in range(len(v1)):
        configs[k] = int(classify_configuration(v1[k], ma1[k], v2[k], ma2[k]))

    occupancy = np.bincount(configs, minlength=4).astype(np.float64)
    occupancy /= occupancy.sum()

    counts = np.zeros((4, 4))
    np.add.at(counts, (configs[:-1], configs[1:]), 1.0)
    transition = np.empty((4, 4))
    for i in range(4):
        row_sum = counts[i].sum()
        transition[i] = counts[i] / row_sum if row_sum > 0 else 0.25

    dists = []
    for values in (v1, v2):
        per_config = []
        for i in range(4):
            atoms = values[configs == i]
            if len(atoms) == 0:
                per_config.append(DiscreteDist(np.array([values.mean()]), np.array([1.0])))
                continue
            uniq, cnt = np.unique(atoms, return_counts=True)
            per_config.append(DiscreteDist(uniq, cnt / cnt.sum()))
        dists.append(tuple(per_config))
    return ConfigurationStats(occupancy, transition, (dists[0], dists[1]))


@dataclass(frozen=True)
class TradeRecord:
    time: int
    asset: int    # 1 or 2
    side: str     # BUY or SELL
    price: float
    cost: float   # fraction charged on this leg

    def __post_init__(self):
        if self.price <= 0:
            raise ValidationError("trade price must be positive")


@dataclass(frozen=True)
class BacktestReport:
    equity: PriceSeries
    trades: tuple[TradeRecord, ...]
    total_return: float

    @property
    def sharpe(self) -> float:
        """Annualized Sharpe ratio of the daily equity returns (sqrt(252) factor)."""
        rets = np.diff(np.log(self.equity.values))
        if len(rets) < 2:
            raise ConsistencyError("too few returns for a Sharpe ratio")
        sd = rets.std(ddof=1)
        if sd == 0.0:
            raise ConsistencyError("zero return variance; Sharpe ratio undefined")
        return float(rets.mean() / sd * np.sqrt(252.0))


def backtest(
    p1: PriceSeries,
    p2: PriceSeries,
    policy: RatchetPolicy | None,
    m: int,
    cost: float = 0.0,
    seed: int = 0,
) -> BacktestReport:
    """Market-neutral backtest of the configuration rule on two price series.

    At every step the current configuration is classified against the trailing
    m-step supports. The portfolio holds an equal-notional pair, long the
    policy-chosen asset and short the other, so any common drift cancels; the
    choice is re-sampled only when the configuration changes, and the pair is
    re-traded only when that choice differs from the held one. Equity
    compounds the log-return spread of the pair. Costs are charged as a
    fraction per leg on the long side's position changes (one leg at the
    initial entry, two per switch: sell the old asset, buy the new), so a full
    buy/sell round trip of an asset costs 2*cost, matching the analytic
    convention. ``policy=None`` is the hold-nothing baseline (no trades,
    constant equity).
    """
    if len(p1) != len(p2):
        raise LengthError(f"series lengths differ: {len(p1)} vs {len(p2)}")
    if len(p1) <= m:
        raise LengthError(f"need more than m = {m} points, have {len(p1)}")
    if not 0.0 <= cost < 1.0:
        raise ParameterError(f"cost must be in [0, 1), got {cost}")
    ma1 = moving_average(p1, m).values
    ma2 = moving_average(p2, m).values
    v1 = p1.values[m - 1:]
    v2 = p2.values[m - 1:]
    steps = p1.index[m - 1:]
    log1 = np.log(v1)
    log2 = np.log(v2)

    rng = spawn_generator(seed)

    def sample_choice(config: Configuration) -> int:
        p_asset1 = policy.probability(ASSET_1, config)
        if p_asset1 >= 1.0:
            return ASSET_1
        if p_asset1 <= 0.0:
            return ASSET_2
        return ASSET_1 if rng.random() < p_asset1 else ASSET_2

    equity = np.empty(len(v1))
    equity[0] = 1.0
    trades: list[TradeRecord] = []

    if policy is None:
        equity[:] = 1.0
        series = PriceSeries(steps, equity)
        return BacktestReport(series, (), 0.0)

    config = classify_configuration(v1[0], ma1[0], v2[0], ma2[0])
    held = sample_choice(config)
    log_equity = 0.0
    entry_price = v1[0] if held == ASSET_1 else v2[0]
    trades.append(TradeRecord(int(steps[0]), held, BUY, float(entry_price), cost))
    log_equity += np.log1p(-cost)

    for k in range(1, len(v1)):
        spread = (log1[k] - log1[k - 1]) - (log2[k] - log2[k - 1])
        log_equity += spread if held == ASSET_1 else -spread
        new_config = classify_configuration(v1[k], ma1[k], v2[k], ma2[k])
        if new_config != config:
            config = new_config
            choice = sample_choice(config)
            if choice != held:
                sell_price = v1[k] if held == ASSET_1 else v2[k]
                buy_price = v1[k] if choice == ASSET_1 else v2[k]
                trades.append(TradeRecord(int(steps[k]), held, SELL, float(sell_price), cost))
                trades.append(TradeRecord(int(steps[k]), choice, BUY, float(buy_price), cost))
                log_equity += 2.0 * np.log1p(-cost)
                held = choice
        equity[k] = np.exp(log_equity)

    series = PriceSeries(steps, equity)
    return BacktestReport(series, tuple(trades), float(equity[-1] - 1.0))


def select_window(p1: PriceSeries, p2: PriceSeries, candidates, cost: float = 0.0, seed: int = 0) -> int:
    """In-sample window selection: best Sharpe on the first half, ties to smaller m.

    Uses the symmetry-breaking default policy throughout.
    """
    candidates = sorted(set(int(m) for m in candidates))
    if not candidates:
        raise ParameterError("candidate list must be non-empty")
    policy = default_policy()
    half = len(p1) // 2
    first1 = PriceSeries(p1.index[:half], p1.values[:half])
    first2 = PriceSeries(p2.index[:half], p2.values[:half])
    best_m = None
    best_sharpe = -np.inf
    for m in candidates:
        sharpe = backtest(first1, first2, policy, m, cost, seed).sharpe
        if sharpe > best_sharpe:
            best_m, best_sharpe = m, sharpe
    return best_m
