"""Two-support-level price dynamics: dP/dt = alpha * (P - a) * (P - b).

The quadratic right-hand side has two equilibria, the support levels a and b.
For alpha > 0 and a > b the upper level a is unstable and the lower level b is
stable, so any small fluctuation near a sends the price toward b (or, above a,
into finite-time blow-up). ``linearize`` gives the analytic perturbation growth
rates, ``perturbation_growth_rate`` measures them from simulated trajectories.

The reverse transition b -> a is deliberately not modeled; the optional
additive noise hook exists so callers can force transitions externally, but it
is outside the deterministic model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, RegimeError, ValidationError
from .seeds import spawn_generator
from .timeseries import PriceSeries

STABLE = "stable"
UNSTABLE = "unstable"

AT_A = "at_a"
AT_B = "at_b"


@dataclass(frozen=True)
class SupportLevelModel:
    """Rate constant and the two support levels of the price-velocity equation."""

    alpha: float
    a: float
    b: float

    def __post_init__(self):
        if self.a == self.b:
            raise ParameterError("support levels a and b must differ")
        if self.alpha == 0.0:
            raise ParameterError("alpha = 0 gives no dynamics and no stability classification")


@dataclass(frozen=True)
class EquilibriumReport:
    equilibrium: float
    mu: float          # linear growth rate of a small perturbation (1/time)
    stability: str     # STABLE or UNSTABLE

    def __post_init__(self):
        if (self.stability == UNSTABLE) != (self.mu > 0):
            raise ValidationError("stability label inconsistent with the sign of mu")


@dataclass(frozen=True)
class SimulationResult:
    """Fixed-step trajectory plus a blow-up flag.

    ``times[k] = k * dt``; if ``blew_up`` the trajectory is truncated at the
    last step before the cap was exceeded and ``blow_up_time`` records when the
    cap was hit.
    """

    times: np.ndarray
    prices: np.ndarray
    blew_up: bool
    blow_up_time: float | None

    def to_price_series(self) -> PriceSeries:
        """Trajectory as a PriceSeries on the step grid (values must be positive)."""
        return PriceSeries(np.arange(len(self.prices)), self.prices)


def price_velocity(model: SupportLevelModel, p: float) -> float:
    """Right-hand side alpha * (p - a) * (p - b)."""
    return model.alpha * (p - model.a) * (p - model.b)


def default_cap(model: SupportLevelModel) -> float:
    return 1e6 * max(abs(model.a), abs(model.b))


def simulate(
    model: SupportLevelModel,
    p0: float,
    dt: float,
    steps: int,
    noise_amplitude: float = 0.0,
    seed: int = 0,
    cap: float | None = None,
) -> SimulationResult:
    """Classical fourth-order fixed-step integration from p0.

    The quadratic velocity diverges in finite time above the unstable level, so
    integration halts with ``blew_up`` set once |p| exceeds ``cap`` (default
    1e6 * max(|a|, |b|)). ``noise_amplitude`` adds seeded Gaussian increments of
    size amplitude*sqrt(dt) after each step; this is an external forcing hook,
    not part of the support-level equation.
    """
    if dt <= 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    if steps < 1:
        raise ParameterError(f"steps must be >= 1, got {steps}")
    if cap is None:
        cap = default_cap(model)
    rng = spawn_generator(seed) if noise_amplitude > 0.0 else None

    alpha, a, b = model.alpha, model.a, model.b

    def f(p):
        return alpha * (p - a) * (p - b)

    prices = np.empty(steps + 1)
    prices[0] = p0
    p = float(p0)
    blew_up = False
    blow_up_time = None
    n_emitted = 1
    for k in range(steps):
        k1 = f(p)
        k2 = f(p + 0.5 * dt * k1)
        k3 = f(p + 0.5 * dt * k2)
        k4 = f(p + dt * k3)
        p = p + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if rng is not None:
            p += noise_amplitude * np.sqrt(dt) * rng.standard_normal()
        if not np.isfinite(p) or abs(p) > cap:
            blew_up = True
            blow_up_time = (k + 1) * dt
            break
        prices[n_emitted] = p
        n_emitted += 1
    times = np.arange(n_emitted) * dt
    return SimulationResult(times, prices[:n_emitted].copy(), blew_up, blow_up_time)


def linearize(model: SupportLevelModel, which: str) -> EquilibriumReport:
    """Analytic linear-response rate at one equilibrium.

    The perturbation rate is the derivative of the velocity at the equilibrium:
    mu = alpha*(a-b) at a, mu = alpha*(b-a) at b; positive mu means unstable.
    """
    if which == AT_A:
        eq, mu = model.a, model.alpha * (model.a - model.b)
    elif which == AT_B:
        eq, mu = model.b, model.alpha * (model.b - model.a)
    else:
        raise ParameterError(f"which must be {AT_A!r} or {AT_B!r}, got {which!r}")
    return EquilibriumReport(eq, mu, UNSTABLE if mu > 0 else STABLE)


def perturbation_growth_rate(
    model: SupportLevelModel,
    which: str,
    epsilon0: float,
    dt: float,
    steps: int,
    regime_fraction: float = 0.1,
) -> float:
    """Measured exponential rate of a small perturbation, from a least-squares fit.

    Simulates from equilibrium + epsilon0 for ``steps`` steps and fits
    ln|p(t) - equilibrium| against t. The perturbation must stay within
    ``regime_fraction * |a - b|`` of the equilibrium for the whole window,
    otherwise the linear-response fit is meaningless and a RegimeError is
    raised.
    """
    if epsilon0 == 0.0:
        raise ParameterError("epsilon0 must be nonzero")
    gap = abs(model.a - model.b)
    if abs(epsilon0) > 1e-3 * gap:
        raise ParameterError(f"|epsilon0| should be <= 1e-3*|a-b| = {1e-3 * gap:g} for a linear fit")
    eq = linearize(model, which).equilibrium
    result = simulate(model, eq + epsilon0, dt, steps)
    eps = result.prices - eq
    if result.blew_up or np.max(np.abs(eps)) > regime_fraction * gap:
        raise RegimeError("perturbation escaped the linear regime before the fit window completed")
    if np.any(eps == 0.0):
        raise RegimeError("perturbation underflowed to zero inside the fit window")
    slope, _ = np.polyfit(result.times, np.log(np.abs(eps)), 1)
    return float(slope)
