import math

import numpy as np
import pytest

from marketdyn.errors import ParameterError, ValidationError
from marketdyn.growth import (
    CONSTANT,
    LONG_ACCUMULATION,
    SHORT_ACCUMULATION,
    WEALTH_EFFECT,
    FundParams,
    cash_rhs,
    closed_form_cash,
    integrate_cash,
    mirror_short,
    price_path,
    sustainability,
)

BASE = FundParams.from_alpha(alpha=0.20, r=0.10, d0=0.08, c0=10.0)


def closed_form_derivative(params, t):
    """Analytic d(cash)/dt of the closed form; independent oracle route."""
    a, r, d0 = params.alpha, params.r, params.d0
    gap = a - r
    b1 = (t * d0 - 1.0) / gap - d0 / gap**2
    k = (-r * a + a * a + a * d0) / gap**2 + params.c0
    return a * np.exp(a * t) * (a * b1 + d0 / gap) + r * np.exp(r * t) * k


def random_wealth_effect_params(rng):
    while True:
        alpha = float(rng.uniform(-0.3, 0.5))
        r = float(rng.uniform(0.0, 0.3))
        if abs(alpha - r) > 0.01:
            return FundParams.from_alpha(
                alpha=alpha, r=r,
                d0=float(rng.uniform(0.0, 0.2)),
                c0=float(rng.uniform(0.0, 100.0)),
            )


class TestParams:
    def test_alpha_consistency_enforced(self):
        with pytest.raises(ValidationError):
            FundParams(a_demand=1.0, liquidity=2.0, alpha=0.9, r=0.1, d0=0.0, c0=1.0)

    def test_direction_consistency_enforced(self):
        with pytest.raises(ValidationError):
            FundParams(a_demand=-1.0, liquidity=1.0, alpha=-1.0, r=0.1, d0=0.0, c0=1.0,
                       direction=LONG_ACCUMULATION)

    def test_liquidity_positive(self):
        with pytest.raises(ParameterError):
            FundParams(a_demand=1.0, liquidity=0.0, alpha=1.0, r=0.1, d0=0.0, c0=1.0)


class TestPricePath:
    def test_flat_at_zero_growth(self):
        for t in (0.0, 1.0, 100.0):
            assert price_path(0.0, t) == 1.0

    def test_unit_exponent(self):
        assert price_path(0.2, 5.0) == pytest.approx(math.e, rel=1e-15)

    def test_short_mirror_is_reciprocal(self):
        assert price_path(-0.2, 5.0) == pytest.approx(1.0 / math.e, rel=1e-15)


class TestCashRhs:
    def test_initial_time(self):
        for mode in (CONSTANT, WEALTH_EFFECT):
            p = FundParams.from_alpha(alpha=0.2, r=0.1, d0=0.08, c0=10.0, dividend_mode=mode)
            assert cash_rhs(p, 0.0, p.c0) == pytest.approx(-0.2 + 10.0 * 0.1, rel=1e-14)

    def test_zero_growth_leaves_pure_interest(self):
        p = FundParams.from_alpha(alpha=0.0, r=0.07, d0=0.05, c0=3.0)
        for c in (0.0, 1.0, 42.0):
            assert cash_rhs(p, 12.0, c) == pytest.approx(c * 0.07, rel=1e-14)

    def test_wealth_effect_hand_value(self):
        p = FundParams.from_alpha(alpha=0.2, r=0.1, d0=0.08, c0=5.0)
        expected = -0.2 * math.e**2 + 0.5 + 0.16 * math.e**2
        assert cash_rhs(p, 10.0, 5.0) == pytest.approx(expected, rel=1e-14)


class TestIntegrateCash:
    def test_pure_interest_is_exponential(self):
        p = FundParams.from_alpha(alpha=0.0, r=0.1, d0=0.0, c0=1.0)
        states = integrate_cash(p, 10.0, 0.01)
        final = states[-1]
        assert final.cash == pytest.approx(math.exp(0.1 * 10.0), rel=1e-8)

    def test_wealth_identity_holds_at_every_state(self):
        params = FundParams.from_alpha(alpha=0.2, r=0.1, d0=0.08, c0=10.0, liquidity=3.0)
        for state in integrate_cash(params, 20.0, 0.05):
            expected = (state.n / params.liquidity) * state.price + state.cash
            assert state.wealth == pytest.approx(expected, rel=1e-9)

    def test_dt_validation(self):
        with pytest.raises(ParameterError):
            integrate_cash(BASE, 10.0, 0.0)


class TestClosedForm:
    def test_initial_condition_is_algebraic(self):
        assert abs(closed_form_cash(BASE, 0.0) - BASE.c0) <= 1e-12

    def test_matches_integration(self):
        states = integrate_cash(BASE, 50.0, 1e-3)
        ts = np.array([s.t for s in states])
        numeric = np.array([s.cash for s in states])
        exact = closed_form_cash(BASE, ts)
        np.testing.assert_allclose(numeric, exact, rtol=1e-6)

    def test_analytic_derivative_residual(self):
        grid = np.linspace(0.0, 50.0, 1000)
        cash = closed_form_cash(BASE, grid)
        residual = closed_form_derivative(BASE, grid) - np.array(
            [cash_rhs(BASE, t, c) for t, c in zip(grid, cash)]
        )
        assert np.max(np.abs(residual)) < 1e-8

    def test_residual_for_random_parameter_sets(self, rng):
        grid = np.linspace(0.0, 20.0, 1000)
        for _ in range(50):
            params = random_wealth_effect_params(rng)
            cash = closed_form_cash(params, grid)
            residual = closed_form_derivative(params, grid) - np.array(
                [cash_rhs(params, t, c) for t, c in zip(grid, cash)]
            )
            assert np.max(np.abs(residual)) < 1e-8
            assert abs(closed_form_cash(params, 0.0) - params.c0) <= 1e-12 * max(1.0, params.c0)

    def test_singular_band_rejected(self):
        p = FundParams.from_alpha(alpha=0.1, r=0.1, d0=0.05, c0=1.0)
        with pytest.raises(ParameterError):
            closed_form_cash(p, 1.0)

    def test_constant_mode_has_no_closed_form(self):
        p = FundParams.from_alpha(alpha=0.2, r=0.1, d0=0.05, c0=1.0, dividend_mode=CONSTANT)
        with pytest.raises(ParameterError):
            closed_form_cash(p, 1.0)


class TestSustainability:
    def test_super_interest_with_constant_dividends_always_fails(self):
        for c0 in (1.0, 100.0, 1e4, 1e6):
            p = FundParams.from_alpha(alpha=0.2, r=0.1, d0=0.05, c0=c0, dividend_mode=CONSTANT)
            report = sustainability(p, 250.0, 0.01)
            assert not report.sustainable
            assert report.failure_time is not None

    def test_wealth_effect_with_enough_cash_sustains(self):
        report = sustainability(BASE, 100.0, 0.01)
        assert report.sustainable

    def test_cash_threshold_exists_and_failure_time_shrinks(self):
        failures = []
        for c0 in (6.0, 4.0, 2.0):
            p = FundParams.from_alpha(alpha=0.2, r=0.1, d0=0.08, c0=c0)
            report = sustainability(p, 100.0, 0.01)
            assert not report.sustainable
            failures.append(report.failure_time)
        assert failures[0] > failures[1] > failures[2]

    def test_failure_time_weakly_increases_with_cash(self):
        times = []
        for c0 in (1.5, 2.0, 3.0, 5.0, 6.5):
            p = FundParams.from_alpha(alpha=0.2, r=0.1, d0=0.08, c0=c0)
            report = sustainability(p, 100.0, 0.01)
            times.append(np.inf if report.sustainable else report.failure_time)
        assert all(t2 >= t1 for t1, t2 in zip(times, times[1:]))

    def test_no_dividends_super_interest_fails_in_both_modes(self):
        for mode in (CONSTANT, WEALTH_EFFECT):
            p = FundParams.from_alpha(alpha=0.2, r=0.1, d0=0.0, c0=1e4, dividend_mode=mode)
            assert not sustainability(p, 300.0, 0.01).sustainable


class TestMirrorShort:
    def test_involution(self):
        assert mirror_short(mirror_short(BASE)) == BASE

    def test_direction_flips(self):
        mirrored = mirror_short(BASE)
        assert mirrored.direction == SHORT_ACCUMULATION
        assert mirrored.alpha == -BASE.alpha

    def test_price_paths_are_reciprocal(self):
        mirrored = mirror_short(BASE)
        for t in np.linspace(0.0, 30.0, 7):
            assert price_path(mirrored.alpha, t) == pytest.approx(
                1.0 / price_path(BASE.alpha, t), rel=1e-12
            )

    def test_sub_interest_sustainability_in_both_directions(self):
        long_p = FundParams.from_alpha(alpha=0.05, r=0.1, d0=0.0, c0=3.0)
        short_p = mirror_short(long_p)
        assert sustainability(long_p, 100.0, 0.01).sustainable
        assert sustainability(short_p, 100.0, 0.01).sustainable
        # starving either direction of cash breaks it
        poor_long = FundParams.from_alpha(alpha=0.05, r=0.1, d0=0.0, c0=0.2)
        poor_short = mirror_short(poor_long)
        assert not sustainability(poor_long, 100.0, 0.01).sustainable
        assert not sustainability(poor_short, 100.0, 0.01).sustainable
