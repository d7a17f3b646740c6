"""Quartic free-energy landscape for the market-mood transition.

F(T, o) = C + a*(T - T_c)*o^2 + (b/2)*o^4 over an order parameter o (here:
normalized order imbalance). Above the critical temperature the only minimum
is the disordered state o = 0; below it the symmetric pair +-sqrt((a/b)(T_c-T))
takes over and the zero state turns into a local maximum. The expansion has no
odd terms: long and short profits enter symmetrically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FitError, ParameterError

DISORDERED = "disordered"
ORDERED_PLUS = "ordered_plus"
ORDERED_MINUS = "ordered_minus"

MINIMUM = "minimum"
MAXIMUM = "maximum"


@dataclass(frozen=True)
class GLParams:
    a_coef: float   # quadratic coefficient scale, > 0
    b_coef: float   # quartic coefficient, > 0
    t_c: float      # critical temperature
    c_offset: float = 0.0

    def __post_init__(self):
        if self.a_coef <= 0:
            raise ParameterError(f"a_coef must be > 0, got {self.a_coef}")
        if self.b_coef <= 0:
            raise ParameterError(f"b_coef must be > 0, got {self.b_coef}")


@dataclass(frozen=True)
class OrderParameterSolution:
    branch: str   # DISORDERED, ORDERED_PLUS or ORDERED_MINUS
    value: float
    kind: str     # MINIMUM or MAXIMUM of the free energy at this temperature


def free_energy(params: GLParams, T: float, o) -> float | np.ndarray:
    """F(T, o); accepts scalar or array o. Even in o by construction."""
    o2 = np.square(o)
    return params.c_offset + params.a_coef * (T - params.t_c) * o2 + 0.5 * params.b_coef * o2 * o2


def free_energy_derivative(params: GLParams, T: float, o) -> float | np.ndarray:
    """dF/do = 2a(T - T_c) o + 2b o^3, the stationarity condition."""
    return 2.0 * params.a_coef * (T - params.t_c) * o + 2.0 * params.b_coef * np.power(o, 3)


def stationary_points(params: GLParams, T: float) -> list[OrderParameterSolution]:
    """All solutions of dF/do = 0 at temperature T, labeled by branch and kind.

    T >= T_c: only the disordered minimum at 0. T < T_c: the symmetric ordered
    pair +-sqrt((a/b)(T_c - T)) are the minima and 0 becomes a local maximum.
    """
    if T >= params.t_c:
        return [OrderParameterSolution(DISORDERED, 0.0, MINIMUM)]
    magnitude = float(np.sqrt((params.a_coef / params.b_coef) * (params.t_c - T)))
    return [
        OrderParameterSolution(DISORDERED, 0.0, MAXIMUM),
        OrderParameterSolution(ORDERED_PLUS, magnitude, MINIMUM),
        OrderParameterSolution(ORDERED_MINUS, -magnitude, MINIMUM),
    ]


def default_scan_limit(params: GLParams) -> float:
    """Safely beyond any minimizer: 2*sqrt((a/b)*T_c), floored at 1."""
    return max(1.0, 2.0 * float(np.sqrt((params.a_coef / params.b_coef) * max(params.t_c, 0.0))))


def minimize_numerically(
    params: GLParams,
    T: float,
    grid_points: int = 1001,
    tolerance: float = 1e-10,
    o_max: float | None = None,
) -> float:
    """Global minimizer of F (non-negative representative), found numerically.

    Coarse grid scan over [0, o_max] (F is even, so the non-negative half
    suffices) followed by bisection of dF/do inside the bracketing grid cell.
    Independent numerical route against the closed-form branch solutions.
    """
    if tolerance <= 0:
        raise ParameterError("tolerance must be positive")
    if grid_points < 3:
        raise ParameterError("grid needs at least 3 points")
    if o_max is None:
        o_max = default_scan_limit(params)
    grid = np.linspace(0.0, o_max, grid_points)
    fvals = free_energy(params, T, grid)
    i = int(np.argmin(fvals))
    if i == 0:
        # minimum at the origin; confirm F is locally increasing
        if free_energy_derivative(params, T, grid[1]) < 0.0:
            raise ParameterError("grid too coarse to bracket the minimum near 0")
        return 0.0
    if i == grid_points - 1:
        raise ParameterError("minimum at scan boundary; increase o_max")
    lo, hi = grid[i - 1], grid[i + 1]
    dlo = free_energy_derivative(params, T, lo)
    dhi = free_energy_derivative(params, T, hi)
    if not (dlo < 0.0 < dhi):
        raise ParameterError("failed to bracket a sign change of dF/do")
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if free_energy_derivative(params, T, mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def fit_tc(samples, noise_floor: float | None = None) -> tuple[float, float]:
    """Fit (T_c, a/b) to (temperature, |o|) samples via the ordered-branch law.

    Below the transition the squared order parameter is linear in temperature,
    o^2 = (a/b)*(T_c - T), so a least-squares line through (T, o^2) on samples
    with |o| above the noise floor recovers both the slope a/b and the
    intercept-derived T_c. ``noise_floor`` defaults to 5% of the largest |o|.
    """
    samples = [(float(t), abs(float(o))) for t, o in samples]
    if not samples:
        raise FitError("no samples")
    max_o = max(o for _, o in samples)
    if max_o == 0.0:
        raise FitError("all order-parameter samples are zero")
    if noise_floor is None:
        noise_floor = 0.05 * max_o
    usable = [(t, o) for t, o in samples if o > noise_floor]
    if len(usable) < 3 or len({t for t, _ in usable}) < 3:
        raise FitError(f"need >= 3 usable samples with distinct temperatures, have {len(usable)}")
    t_arr = np.array([t for t, _ in usable])
    o2_arr = np.array([o * o for _, o in usable])
    slope, intercept = np.polyfit(t_arr, o2_arr, 1)
    a_over_b = -float(slope)
    if a_over_b <= 0.0:
        raise FitError("fitted slope is non-negative; samples do not follow the ordered branch")
    t_c = float(intercept) / a_over_b
    return t_c, a_over_b
