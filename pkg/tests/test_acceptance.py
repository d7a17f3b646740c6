"""Acceptance suite: one test per release criterion, each printing a verdict line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines. Every tolerance and runtime budget is asserted, not just reported.
"""

import math
import subprocess
import sys
import time
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from conftest import oscillating_pair
from marketdyn import gl, growth, ratchet, sgame, support
from marketdyn.seeds import spawn_generator
from marketdyn.timeseries import save_csv
from test_ratchet import random_stats, simulate_trades


@contextmanager
def criterion(number, budget_seconds, description):
    start = time.monotonic()
    try:
        yield
    except BaseException:
        print(f"[criterion {number:02d}] FAIL  {description}")
        raise
    elapsed = time.monotonic() - start
    verdict = "PASS" if elapsed < budget_seconds else "FAIL"
    print(f"[criterion {number:02d}] {verdict}  ({elapsed:.2f}s / {budget_seconds:g}s)  {description}")
    assert elapsed < budget_seconds, f"runtime {elapsed:.2f}s exceeded budget {budget_seconds}s"


def test_criterion_01_stability_rates():
    with criterion(1, 1.0, "measured perturbation rates match +1/-1 within 5%"):
        model = support.SupportLevelModel(alpha=1.0, a=2.0, b=1.0)
        rate_a = support.perturbation_growth_rate(model, support.AT_A, 1e-4, 1e-3, 4000)
        rate_b = support.perturbation_growth_rate(model, support.AT_B, 1e-4, 1e-3, 4000)
        assert rate_a == pytest.approx(+1.0, rel=0.05)
        assert rate_b == pytest.approx(-1.0, rel=0.05)
        assert support.linearize(model, support.AT_A).mu == +1.0
        assert support.linearize(model, support.AT_B).mu == -1.0


def test_criterion_02_ratchet_analytic_vs_enumeration():
    from test_ratchet import enumerate_return_and_risk

    with criterion(2, 5.0, "expected return and risk match enumeration to 1e-12 on 100 stats"):
        rng = np.random.default_rng(2202)
        policy = ratchet.default_policy()
        for _ in range(100):
            stats = random_stats(rng, max_support=3)
            cost = float(rng.uniform(0.0, 0.01))
            mean_oracle, sigma_oracle = enumerate_return_and_risk(stats, policy, cost)
            assert abs(ratchet.expected_return(stats, policy, cost) - mean_oracle) <= 1e-12
            assert abs(ratchet.risk(stats, policy, cost) - sigma_oracle) <= 1e-12


def test_criterion_03_ratchet_analytic_vs_monte_carlo():
    with criterion(3, 30.0, "1e6-trade Monte Carlo mean within 3 standard errors on 10 stats"):
        rng = np.random.default_rng(3303)
        policy = ratchet.default_policy()
        for trial in range(10):
            stats = random_stats(rng, max_support=3)
            analytic = ratchet.expected_return(stats, policy, cost=0.0)
            mean, stderr = simulate_trades(stats, policy, 0.0, 1_000_000, seed=trial)
            assert abs(mean - analytic) <= 3.0 * stderr


def test_criterion_04_synthetic_ratchet_profitability():
    with criterion(4, 1.0, "oscillating pair: rising zero-cost equity; 0.2% drag per round trip"):
        p1, p2 = oscillating_pair(1000)
        policy = ratchet.default_policy()
        free = ratchet.backtest(p1, p2, policy, m=2, cost=0.0, seed=0)
        assert np.all(np.diff(free.equity.values) > 0)
        assert free.sharpe > 0
        cost = 0.001
        priced = ratchet.backtest(p1, p2, policy, m=2, cost=cost, seed=0)
        assert len(priced.trades) == len(free.trades)
        legs = np.zeros(len(free.equity), dtype=int)
        start = int(free.equity.index[0])
        for trade in priced.trades:
            offset = trade.time - start + 1 if trade.time == start else trade.time - start
            legs[offset:] += 1
        np.testing.assert_allclose(
            priced.equity.values, free.equity.values * (1.0 - cost) ** legs, rtol=1e-9
        )
        # each switch sells one asset and buys the other: a completed round trip
        # of an asset is exactly two legs
        per_round_trip = 1.0 - (1.0 - cost) ** 2
        assert abs(per_round_trip - 0.002) < 2e-6


def test_criterion_05_gl_closed_form():
    with criterion(5, 5.0, "numeric minimizer matches the ordered branch; exponent 1/2"):
        rng = np.random.default_rng(5505)
        for _ in range(100):
            params = gl.GLParams(
                a_coef=float(rng.uniform(0.1, 10.0)),
                b_coef=float(rng.uniform(0.1, 10.0)),
                t_c=float(rng.uniform(0.1, 5.0)),
            )
            T = float(rng.uniform(-params.t_c, 2.0 * params.t_c))
            closed = math.sqrt(params.a_coef / params.b_coef * (params.t_c - T)) if T < params.t_c else 0.0
            assert abs(gl.minimize_numerically(params, T) - closed) < 1e-6
        unit = gl.GLParams(1.0, 1.0, 1.0)
        temps = np.linspace(0.05, 0.995, 80)
        mags = np.sqrt(unit.t_c - temps)
        slope, _ = np.polyfit(np.log(unit.t_c - temps), np.log(mags), 1)
        assert slope == pytest.approx(0.5, abs=1e-6)


def test_criterion_06_temperature_collapse_and_trend():
    with criterion(6, 120.0, "equal-T ensembles agree within 3 sigma; cold beats hot by > 3 sigma"):
        base = sgame.GameConfig(N=10, s=4, m=2, steps=50, seed=7, gamma=0.0, runs=200)
        pair_a = sgame.ensemble_stats(base)                      # T = 0.2
        pair_b = sgame.ensemble_stats(replace(base, N=20, s=2))  # T = 0.2
        assert sgame.temperature(2, 10, 4) == sgame.temperature(2, 20, 2) == pytest.approx(0.2)
        spread = abs(pair_a.probability - pair_b.probability)
        assert spread <= 3.0 * math.hypot(pair_a.stderr, pair_b.stderr) + 1e-12

        cold = sgame.ensemble_stats(replace(base, N=25, s=2))    # T = 0.16
        hot = sgame.ensemble_stats(replace(base, N=5, s=1))      # T = 1.6
        gap = cold.probability - hot.probability
        assert gap > 3.0 * math.hypot(cold.stderr, hot.stderr)


def test_criterion_07_short_fraction_quantiles():
    with criterion(7, 120.0, "final 5% quantile strictly falls with rho; long-only floor holds"):
        base = sgame.GameConfig(N=25, s=2, m=2, steps=200, seed=7, runs=200)
        finals = []
        for rho in (0.0, 0.2, 0.4):
            q05, q50, q95 = sgame.quantile_ensemble(replace(base, rho=rho))
            assert np.all(q05.values <= q50.values) and np.all(q50.values <= q95.values)
            finals.append(q05.values[-1])
        assert finals[0] > finals[1] > finals[2]

        long_only = replace(base, rho=0.0)
        for run_index in range(long_only.runs):
            state = sgame.GameState.initialize(long_only, spawn_generator(long_only.seed, run_index))
            for _ in range(long_only.steps):
                sgame.step(state, long_only)
                if int(state.positions.min()) < 0:
                    raise AssertionError(f"negative position in run {run_index}")


def test_criterion_08_growth_closed_form():
    with criterion(8, 1.0, "closed-form cash matches integration, initial condition, residual"):
        params = growth.FundParams.from_alpha(alpha=0.20, r=0.10, d0=0.08, c0=10.0)
        states = growth.integrate_cash(params, 50.0, 1e-3)
        ts = np.array([s.t for s in states])
        numeric = np.array([s.cash for s in states])
        np.testing.assert_allclose(numeric, growth.closed_form_cash(params, ts), rtol=1e-6)
        assert abs(growth.closed_form_cash(params, 0.0) - params.c0) <= 1e-12

        from test_growth import closed_form_derivative

        grid = np.linspace(0.0, 50.0, 1000)
        cash = growth.closed_form_cash(params, grid)
        residual = closed_form_derivative(params, grid) - np.array(
            [growth.cash_rhs(params, t, c) for t, c in zip(grid, cash)]
        )
        assert np.max(np.abs(residual)) < 1e-8


def test_criterion_09_super_interest_impossibility():
    with criterion(9, 5.0, "constant dividends cannot fund super-interest growth; wealth effect can"):
        for c0 in np.geomspace(1.0, 1e6, 10):
            params = growth.FundParams.from_alpha(
                alpha=0.20, r=0.10, d0=0.08, c0=float(c0), dividend_mode=growth.CONSTANT
            )
            report = growth.sustainability(params, 250.0, 0.02)
            assert not report.sustainable, f"c0={c0} unexpectedly sustainable"
            assert report.failure_time is not None
        wealthy = growth.FundParams.from_alpha(alpha=0.20, r=0.10, d0=0.08, c0=10.0)
        assert growth.sustainability(wealthy, 100.0, 0.01).sustainable


def test_criterion_10_cli_byte_determinism(tmp_path):
    with criterion(10, 60.0, "every CLI subcommand is byte-identical across repeat runs"):
        p1, p2 = oscillating_pair(300)
        save_csv(p1, tmp_path / "a1.csv")
        save_csv(p2, tmp_path / "a2.csv")
        ext = np.exp(0.004 * np.arange(60))
        (tmp_path / "ext.csv").write_text(
            "date,close\n" + "\n".join(f"d{k},{repr(float(v))}" for k, v in enumerate(ext)) + "\n"
        )
        invocations = {
            "support-sim": ["support-sim", "--alpha", "1", "--a", "2", "--b", "1",
                            "--p0", "1.5", "--dt", "0.01", "--steps", "200", "--noise", "0.01"],
            "ratchet-backtest": ["ratchet-backtest", "--csv1", "a1.csv", "--csv2", "a2.csv",
                                 "--m", "2", "--cost", "0.001"],
            "sgame-run": ["sgame-run", "--N", "15", "--s", "2", "--m", "2", "--steps", "60"],
            "sgame-sweep": ["sgame-sweep", "--points", "10:2,5:1", "--runs", "20", "--steps", "30"],
            "sgame-quantiles": ["sgame-quantiles", "--N", "10", "--s", "2", "--m", "2",
                                "--steps", "30", "--runs", "20", "--rho", "0.2"],
            "sgame-slaved": ["sgame-slaved", "--input", "ext.csv", "--N", "10", "--s", "2", "--m", "2"],
            "gl-analyze": ["gl-analyze", "--t-points", "21"],
            "growth-solve": ["growth-solve", "--t-max", "20", "--dt", "0.02"],
        }
        for name, args in invocations.items():
            outputs = []
            for tag in ("x", "y"):
                out_dir = tmp_path / f"{name}-{tag}"
                result = subprocess.run(
                    [sys.executable, "-m", "marketdyn.cli", *args,
                     "--seed", "11", "--out-dir", str(out_dir)],
                    cwd=tmp_path, capture_output=True, text=True,
                )
                assert result.returncode == 0, f"{name}: {result.stderr}"
                outputs.append(sorted(out_dir.iterdir(), key=lambda p: p.name))
            names_x = [p.name for p in outputs[0]]
            names_y = [p.name for p in outputs[1]]
            assert names_x == names_y and names_x, f"{name}: output sets differ"
            for fx, fy in zip(outputs[0], outputs[1]):
                assert fx.read_bytes() == fy.read_bytes(), f"{name}: {fx.name} differs"
