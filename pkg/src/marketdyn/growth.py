"""Cash-flow model of a single dominant fund driving constant market growth.

The fund buys shares at a constant rate, which moves the log price linearly
(P(t) = exp(alpha*t) with alpha = demand rate / liquidity). Buying drains cash,
interest and dividends replenish it. All cash quantities are renormalized by
the liquidity (cash = C/liquidity) and P(0) = 1, so the solvency criterion is
simply cash(t) >= P(t): the fund stays able to trade while its renormalized
cash covers the market price.

Two dividend modes: ``constant`` (flat dividend rate; no super-interest growth
is sustainable) and ``wealth_effect`` (dividends scale with price; sustainable
given enough initial cash). The wealth-effect balance equation has a closed
form, implemented here with the exponential-of-interest homogeneous term that
both satisfies the equation and matches the initial condition.

The mirrored case of a fund shorting the market at a steady rate is the same
model with the demand rate (and alpha) negated.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ParameterError, ValidationError

CONSTANT = "constant"
WEALTH_EFFECT = "wealth_effect"

LONG_ACCUMULATION = "long_accumulation"
SHORT_ACCUMULATION = "short_accumulation"


@dataclass(frozen=True)
class FundParams:
    a_demand: float       # excess demand rate, shares per unit time (signed)
    liquidity: float      # shares per unit log return, > 0
    alpha: float          # market growth rate a_demand / liquidity (signed)
    r: float              # interest rate on cash
    d0: float             # initial dividend yield
    c0: float             # initial renormalized cash
    dividend_mode: str = WEALTH_EFFECT
    direction: str = LONG_ACCUMULATION

    def __post_init__(self):
        if self.liquidity <= 0:
            raise ParameterError(f"liquidity must be > 0, got {self.liquidity}")
        implied = self.a_demand / self.liquidity
        if abs(implied - self.alpha) > 1e-12 * max(1.0, abs(self.alpha)):
            raise ValidationError(
                f"alpha {self.alpha} inconsistent with a_demand/liquidity = {implied}"
            )
        if self.dividend_mode not in (CONSTANT, WEALTH_EFFECT):
            raise ParameterError(f"unknown dividend mode {self.dividend_mode!r}")
        if self.direction not in (LONG_ACCUMULATION, SHORT_ACCUMULATION):
            raise ParameterError(f"unknown direction {self.direction!r}")
        if self.direction == LONG_ACCUMULATION and self.alpha < 0:
            raise ValidationError("long accumulation requires alpha >= 0")
        if self.direction == SHORT_ACCUMULATION and self.alpha > 0:
            raise ValidationError("short accumulation requires alpha <= 0")

    @staticmethod
    def from_alpha(
        alpha: float,
        r: float,
        d0: float,
        c0: float,
        liquidity: float = 1.0,
        dividend_mode: str = WEALTH_EFFECT,
    ) -> "FundParams":
        """Build params from the growth rate directly (a_demand = alpha * liquidity)."""
        direction = SHORT_ACCUMULATION if alpha < 0 else LONG_ACCUMULATION
        return FundParams(
            a_demand=alpha * liquidity,
            liquidity=liquidity,
            alpha=alpha,
            r=r,
            d0=d0,
            c0=c0,
            dividend_mode=dividend_mode,
            direction=direction,
        )


@dataclass(frozen=True)
class FundState:
    """Snapshot along an integration: shares, price, renormalized cash and wealth."""

    t: float
    n: float        # shares held = a_demand * t (negative while shorting)
    price: float
    cash: float
    wealth: float   # (n/liquidity) * price + cash, same renormalized units as cash


@dataclass(frozen=True)
class SustainabilityReport:
    sustainable: bool
    failure_time: float | None   # first t with cash < price, None if sustainable
    t_max: float


def price_path(alpha: float, t) -> float | np.ndarray:
    """P(t) = exp(alpha * t) with P(0) = 1; negative alpha is the shorting mirror."""
    return np.exp(alpha * np.asarray(t, dtype=np.float64)) if np.ndim(t) else float(np.exp(alpha * t))


def cash_rhs(params: FundParams, t: float, c: float) -> float:
    """Rate of change of renormalized cash: buying cost, interest, dividends."""
    a = params.alpha
    outflow = -a * np.exp(a * t)
    interest = c * params.r
    if params.dividend_mode == CONSTANT:
        dividends = a * t * params.d0
    else:
        dividends = a * t * np.exp(a * t) * params.d0
    return float(outflow + interest + dividends)


def _state(params: FundParams, t: float, cash: float) -> FundState:
    price = float(np.exp(params.alpha * t))
    n = params.a_demand * t
    wealth = (n / params.liquidity) * price + cash
    return FundState(t=t, n=n, price=price, cash=cash, wealth=wealth)


def integrate_cash(params: FundParams, t_max: float, dt: float) -> list[FundState]:
    """Fourth-order fixed-step integration of the cash balance from c0.

    Returns the state at every grid point 0, dt, 2*dt, ..., including t = 0.
    """
    if dt <= 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    if t_max < 0:
        raise ParameterError(f"t_max must be >= 0, got {t_max}")
    steps = int(round(t_max / dt))
    states = [_state(params, 0.0, params.c0)]
    c = params.c0
    for k in range(steps):
        t = k * dt
        k1 = cash_rhs(params, t, c)
        k2 = cash_rhs(params, t + 0.5 * dt, c + 0.5 * dt * k1)
        k3 = cash_rhs(params, t + 0.5 * dt, c + 0.5 * dt * k2)
        k4 = cash_rhs(params, t + dt, c + dt * k3)
        c = c + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        states.append(_state(params, (k + 1) * dt, c))
    return states


def closed_form_cash(params: FundParams, t) -> float | np.ndarray:
    """Exact wealth-effect cash balance.

    cash(t) = alpha*exp(alpha*t) * [ (t*d0 - 1)/(alpha-r) - d0/(alpha-r)^2 ]
            + exp(r*t) * [ (-r*alpha + alpha^2 + alpha*d0)/(alpha-r)^2 + c0 ]

    The second bracket multiplies exp(r*t), the homogeneous solution of the
    linear balance equation; this also makes cash(0) = c0 an algebraic
    identity. The resonant band |alpha - r| <= 1e-9 is rejected.
    """
    if params.dividend_mode != WEALTH_EFFECT:
        raise ParameterError("closed form exists only for the wealth-effect dividend mode")
    a, r, d0 = params.alpha, params.r, params.d0
    if abs(a - r) <= 1e-9:
        raise ParameterError(f"alpha - r = {a - r:g} is inside the singular band |alpha-r| <= 1e-9")
    t = np.asarray(t, dtype=np.float64)
    gap = a - r
    particular = a * np.exp(a * t) * ((t * d0 - 1.0) / gap - d0 / gap**2)
    homogeneous = np.exp(r * t) * ((-r * a + a * a + a * d0) / gap**2 + params.c0)
    out = particular + homogeneous
    return float(out) if out.ndim == 0 else out


def sustainability(params: FundParams, t_max: float, dt: float) -> SustainabilityReport:
    """Scan the integrated cash path for the first time cash drops below price."""
    for state in integrate_cash(params, t_max, dt):
        if state.cash < state.price:
            return SustainabilityReport(False, state.t, t_max)
    return SustainabilityReport(True, None, t_max)


def mirror_short(params: FundParams) -> FundParams:
    """The short-selling mirror: demand rate and growth rate negated."""
    direction = SHORT_ACCUMULATION if params.direction == LONG_ACCUMULATION else LONG_ACCUMULATION
    return replace(
        params,
        a_demand=-params.a_demand,
        alpha=-params.alpha,
        direction=direction,
    )
