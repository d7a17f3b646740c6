"""Command-line entry point: one subcommand per experiment, CSV + SVG outputs.

Subcommands: support-sim, ratchet-backtest, sgame-run, sgame-sweep,
sgame-quantiles, sgame-slaved, gl-analyze, growth-solve.

Parameter precedence is flags over config file over defaults. A config file is
flat UTF-8 ``key=value`` lines with ``#`` comments; keys are the parameter
names of the chosen subcommand (plus ``seed``). Every run echoes its effective
configuration to ``run-config.txt`` in the output directory, and identical
(flags, seed) invocations produce byte-identical output files.

Exit codes: 0 success; 2 usage/domain errors (unknown flags or keys, bad value
types, missing files, parameters outside their domain); 1 runtime errors.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import gl, growth, ratchet, sgame, support
from .errors import (
    LengthError,
    MarketDynError,
    ParameterError,
    ParseError,
    ValidationError,
)
from .reports import ChartSeries, ChartSpec, render_svg, write_table
from .timeseries import PriceSeries, load_csv

USAGE_EXIT = 2
RUNTIME_EXIT = 1


@dataclass(frozen=True)
class Param:
    name: str
    type: type
    default: object = None
    required: bool = False
    help: str = ""
    choices: tuple | None = None
    aliases: tuple[str, ...] = ()


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated CLI invocation: subcommand, parameter map, output location."""

    command: str
    params: dict
    out_dir: Path
    seed: int
    config_path: Path | None = None


_SGAME_PARAMS = [
    Param("N", int, 25, help="number of agents"),
    Param("s", int, 2, help="technical strategies per agent"),
    Param("m", int, 2, help="memory bits"),
    Param("liquidity", float, None, help="shares per unit log return (default: N)",
          aliases=("--lambda",)),
    Param("rho", float, 0.0, help="fraction of agents allowed to short"),
    Param("v_f", float, 1.0, help="fundamental value (and initial price)"),
    Param("steps", int, 200, help="game length"),
    Param("gamma", float, 0.0, help="abstention threshold on the score spread"),
    Param("runs", int, 100, help="ensemble size"),
]

SUBCOMMANDS: dict[str, list[Param]] = {
    "support-sim": [
        Param("alpha", float, required=True, help="rate constant of the price velocity"),
        Param("a", float, required=True, help="upper support level"),
        Param("b", float, required=True, help="lower support level"),
        Param("p0", float, required=True, help="initial price"),
        Param("dt", float, 0.01, help="integration step"),
        Param("steps", int, 1000, help="number of steps"),
        Param("noise", float, 0.0, help="additive noise amplitude (external forcing hook)"),
    ],
    "ratchet-backtest": [
        Param("csv1", str, required=True, help="price CSV of asset 1"),
        Param("csv2", str, required=True, help="price CSV of asset 2"),
        Param("m", int, None, help="support window; omit to select from candidates"),
        Param("candidates", str, "5,10,15", help="comma-separated candidate windows"),
        Param("cost", float, 0.0, help="transaction cost fraction per leg"),
    ],
    "sgame-run": list(_SGAME_PARAMS),
    "sgame-sweep": list(_SGAME_PARAMS) + [
        Param("points", str, "25:2,10:4,20:2,10:2,5:2,5:1,4:1,2:1",
              help="comma-separated N:s ensemble points"),
    ],
    "sgame-quantiles": list(_SGAME_PARAMS),
    "sgame-slaved": list(_SGAME_PARAMS) + [
        Param("input", str, required=True, help="external price CSV to slave the game to"),
    ],
    "gl-analyze": [
        Param("a_coef", float, 1.0, help="quadratic coefficient scale"),
        Param("b_coef", float, 1.0, help="quartic coefficient"),
        Param("t_c", float, 1.0, help="critical temperature"),
        Param("c_offset", float, 0.0, help="free-energy offset"),
        Param("t_min", float, 0.0, help="lowest temperature of the branch table"),
        Param("t_max", float, 2.0, help="highest temperature of the branch table"),
        Param("t_points", int, 41, help="temperatures in the branch table"),
        Param("sweep_csv", str, None,
              help="sgame-sweep output CSV; fit the critical temperature instead"),
        Param("noise_floor", float, None, help="order-parameter noise floor for the fit"),
    ],
    "growth-solve": [
        Param("alpha", float, 0.2, help="market growth rate (negative = short accumulation)"),
        Param("r", float, 0.1, help="interest rate"),
        Param("d0", float, 0.08, help="initial dividend yield"),
        Param("c0", float, 10.0, help="initial renormalized cash"),
        Param("liquidity", float, 1.0, help="market liquidity", aliases=("--lambda",)),
        Param("dividend_mode", str, growth.WEALTH_EFFECT,
              choices=(growth.CONSTANT, growth.WEALTH_EFFECT), help="dividend model"),
        Param("t_max", float, 100.0, help="horizon"),
        Param("dt", float, 0.01, help="integration step"),
    ],
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="marketdyn",
        description="Simulation and backtesting experiments; each subcommand emits CSV tables "
                    "and SVG charts into --out-dir.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="subcommand")
    for name, params in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=f"run the {name} experiment")
        for prm in params:
            flag = "--" + prm.name.replace("_", "-")
            names = (flag,) + prm.aliases
            kwargs = dict(dest=prm.name, default=None, help=prm.help)
            if prm.choices is not None:
                kwargs["choices"] = prm.choices
            if prm.type is not str:
                kwargs["type"] = prm.type
            p.add_argument(*names, **kwargs)
        p.add_argument("--seed", dest="seed", type=int, default=None, help="master RNG seed")
        p.add_argument("--out-dir", dest="out_dir", default=None, help="output directory")
        p.add_argument("--config", dest="config", default=None, help="key=value config file")
    return parser


def _read_config_file(path: Path, valid_keys) -> dict[str, str]:
    if not path.exists():
        raise ParseError(f"config file not found: {path}")
    values: dict[str, str] = {}
    for line_no, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"{path}:{line_no}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in valid_keys:
            raise ParameterError(
                f"{path}:{line_no}: unknown key {key!r}; valid keys: {', '.join(sorted(valid_keys))}"
            )
        values[key] = value
    return values


def _convert(param: Param, raw: str):
    try:
        value = param.type(raw)
    except ValueError:
        raise ParameterError(
            f"parameter {param.name!r} expects {param.type.__name__}, got {raw!r}"
        ) from None
    if param.choices is not None and value not in param.choices:
        raise ParameterError(f"parameter {param.name!r} must be one of {param.choices}, got {value!r}")
    return value


def parse_args(argv) -> ExperimentConfig:
    """Parse and merge flags, config file and defaults into a validated config."""
    namespace = _build_parser().parse_args(argv)
    command = namespace.command
    params_spec = SUBCOMMANDS[command]
    valid_keys = {p.name for p in params_spec} | {"seed"}

    merged = {p.name: p.default for p in params_spec}
    seed = 0
    config_path = Path(namespace.config) if namespace.config else None
    if config_path is not None:
        file_values = _read_config_file(config_path, valid_keys)
        by_name = {p.name: p for p in params_spec}
        for key, raw in file_values.items():
            if key == "seed":
                seed = _convert(Param("seed", int), raw)
            else:
                merged[key] = _convert(by_name[key], raw)
    for prm in params_spec:
        flag_value = getattr(namespace, prm.name)
        if flag_value is not None:
            merged[prm.name] = flag_value
    if namespace.seed is not None:
        seed = namespace.seed

    missing = [p.name for p in params_spec if p.required and merged[p.name] is None]
    if missing:
        raise ParameterError(f"{command}: missing required parameters: {', '.join(missing)}")
    out_dir = Path(namespace.out_dir) if namespace.out_dir else Path("out")
    return ExperimentConfig(command, merged, out_dir, seed, config_path)


def _echo_config(cfg: ExperimentConfig) -> None:
    lines = [f"command={cfg.command}", f"seed={cfg.seed}"]
    for key in sorted(cfg.params):
        lines.append(f"{key}={cfg.params[key]}")
    (cfg.out_dir / "run-config.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _load_series(path_str: str) -> PriceSeries:
    path = Path(path_str)
    if not path.exists():
        raise ParseError(f"input file not found: {path}")
    return load_csv(path)


def _game_config(cfg: ExperimentConfig) -> sgame.GameConfig:
    p = cfg.params
    return sgame.GameConfig(
        N=p["N"], s=p["s"], m=p["m"], liquidity=p["liquidity"], rho=p["rho"],
        v_f=p["v_f"], steps=p["steps"], seed=cfg.seed, gamma=p["gamma"], runs=p["runs"],
    )


def _run_support_sim(cfg: ExperimentConfig) -> None:
    p = cfg.params
    model = support.SupportLevelModel(alpha=p["alpha"], a=p["a"], b=p["b"])
    result = support.simulate(
        model, p0=p["p0"], dt=p["dt"], steps=p["steps"],
        noise_amplitude=p["noise"], seed=cfg.seed,
    )
    rows = [(repr(float(t)), repr(float(price))) for t, price in zip(result.times, result.prices)]
    write_table(cfg.out_dir / "trajectory.csv", ["date", "close"], rows)
    write_table(
        cfg.out_dir / "summary.csv",
        ["blew_up", "blow_up_time", "final_price"],
        [(result.blew_up, result.blow_up_time if result.blew_up else "", result.prices[-1])],
    )
    level_a = ChartSeries("support a", result.times[[0, -1]], np.array([p["a"], p["a"]]))
    level_b = ChartSeries("support b", result.times[[0, -1]], np.array([p["b"], p["b"]]))
    render_svg(
        ChartSpec(
            series=(ChartSeries("price", result.times, result.prices), level_a, level_b),
            title="Support-level dynamics", xlabel="time", ylabel="price",
        ),
        cfg.out_dir / "trajectory.svg",
    )


def _run_ratchet_backtest(cfg: ExperimentConfig) -> None:
    p = cfg.params
    p1 = _load_series(p["csv1"])
    p2 = _load_series(p["csv2"])
    policy = ratchet.default_policy()
    if p["m"] is not None:
        m = p["m"]
    else:
        candidates = [int(c) for c in str(p["candidates"]).split(",") if c.strip()]
        m = ratchet.select_window(p1, p2, candidates, cost=p["cost"], seed=cfg.seed)
    report = ratchet.backtest(p1, p2, policy, m, cost=p["cost"], seed=cfg.seed)
    eq = report.equity
    labels = tuple(str(int(i)) for i in eq.index)
    write_table(cfg.out_dir / "equity.csv", ["date", "close"],
                [(lbl, repr(float(v))) for lbl, v in zip(labels, eq.values)])
    write_table(
        cfg.out_dir / "trades.csv",
        ["time", "asset", "side", "price", "cost"],
        [(t.time, t.asset, t.side, t.price, t.cost) for t in report.trades],
    )
    try:
        sharpe = report.sharpe
    except MarketDynError:
        sharpe = float("nan")
    write_table(
        cfg.out_dir / "summary.csv",
        ["m", "sharpe", "total_return", "n_trades"],
        [(m, sharpe, report.total_return, len(report.trades))],
    )
    render_svg(
        ChartSpec(
            series=(ChartSeries("equity", eq.index.astype(float), eq.values),),
            title=f"Ratchet pair backtest (m={m})", xlabel="step", ylabel="equity",
        ),
        cfg.out_dir / "equity.svg",
    )


def _run_sgame_run(cfg: ExperimentConfig) -> None:
    config = _game_config(cfg)
    prices, diag = sgame.run_game(config)
    write_table(cfg.out_dir / "price.csv", ["date", "close"],
                [(str(int(i)), repr(float(v))) for i, v in zip(prices.index, prices.values)])
    imbalance = sgame.order_imbalance(diag)
    write_table(
        cfg.out_dir / "diagnostics.csv",
        ["t", "a", "n_technical", "n_fundamental", "n_abstained", "imbalance"],
        [
            (int(t), int(a), int(nt), int(nf), int(na), float(x))
            for t, a, nt, nf, na, x in zip(
                imbalance.index, diag.a_t, diag.n_technical, diag.n_fundamental,
                diag.n_abstained, imbalance.values,
            )
        ],
    )
    render_svg(
        ChartSpec(
            series=(ChartSeries("price", prices.index.astype(float), prices.values),),
            title=f"Game price path (N={config.N}, s={config.s}, m={config.m})",
            xlabel="step", ylabel="price", logy=True,
        ),
        cfg.out_dir / "price.svg",
    )


def _parse_points(raw: str) -> list[tuple[int, int]]:
    points = []
    for chunk in str(raw).split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            n_str, s_str = chunk.split(":")
            points.append((int(n_str), int(s_str)))
        except ValueError:
            raise ParameterError(f"points entries must look like N:s, got {chunk!r}") from None
    if not points:
        raise ParameterError("points list is empty")
    return points


def _run_sgame_sweep(cfg: ExperimentConfig) -> None:
    config = _game_config(cfg)
    rows = sgame.temperature_sweep(config, _parse_points(cfg.params["points"]))
    write_table(
        cfg.out_dir / "sweep.csv",
        ["T", "N", "s", "probability", "stderr", "mean_abs_imbalance"],
        [(r.T, r.N, r.s, r.probability, r.stderr, r.mean_abs_imbalance) for r in rows],
    )
    ts = np.array([r.T for r in rows])
    render_svg(
        ChartSpec(
            series=(ChartSeries("speculative probability", ts,
                                np.array([r.probability for r in rows])),),
            title=f"Speculative transitions vs game temperature (m={config.m}, runs={config.runs})",
            xlabel="temperature 2^(m+1)/(N s)", ylabel="probability",
        ),
        cfg.out_dir / "sweep.svg",
    )


def _run_sgame_quantiles(cfg: ExperimentConfig) -> None:
    config = _game_config(cfg)
    q05, q50, q95 = sgame.quantile_ensemble(config)
    write_table(
        cfg.out_dir / "quantiles.csv",
        ["t", "q05", "q50", "q95"],
        [
            (int(t), float(a), float(b), float(c))
            for t, a, b, c in zip(q05.index, q05.values, q50.values, q95.values)
        ],
    )
    x = q05.index.astype(float)
    render_svg(
        ChartSpec(
            series=(
                ChartSeries("5% quantile", x, q05.values),
                ChartSeries("median", x, q50.values),
                ChartSeries("95% quantile", x, q95.values),
            ),
            title=f"Ensemble price quantiles (rho={config.rho}, runs={config.runs})",
            xlabel="step", ylabel="price", logy=True,
        ),
        cfg.out_dir / "quantiles.svg",
    )


def _run_sgame_slaved(cfg: ExperimentConfig) -> None:
    config = _game_config(cfg)
    external = _load_series(cfg.params["input"])
    diag = sgame.run_slaved(external, config)
    write_table(
        cfg.out_dir / "decoupling.csv",
        ["t", "technical_fraction"],
        [(int(t), float(f)) for t, f in zip(diag.index, diag.technical_fraction)],
    )
    render_svg(
        ChartSpec(
            series=(ChartSeries("technical fraction", diag.index.astype(float),
                                diag.technical_fraction),),
            title="Strategy decoupling under a slaved price path",
            xlabel="step", ylabel="fraction on technical strategies",
        ),
        cfg.out_dir / "decoupling.svg",
    )


def _run_gl_analyze(cfg: ExperimentConfig) -> None:
    p = cfg.params
    if p["sweep_csv"] is not None:
        _gl_fit_mode(cfg)
        return
    params = gl.GLParams(a_coef=p["a_coef"], b_coef=p["b_coef"], t_c=p["t_c"], c_offset=p["c_offset"])
    if p["t_points"] < 2 or p["t_max"] <= p["t_min"]:
        raise ParameterError("need t_points >= 2 and t_max > t_min")
    temps = np.linspace(p["t_min"], p["t_max"], p["t_points"])
    rows = []
    for T in temps:
        points = gl.stationary_points(params, T)
        plus = max((s.value for s in points if s.kind == gl.MINIMUM), key=abs)
        rows.append((float(T), float(plus), float(-plus), gl.minimize_numerically(params, T)))
    write_table(cfg.out_dir / "branches.csv", ["T", "o_plus", "o_minus", "o_numeric"], rows)
    o_grid = np.linspace(-gl.default_scan_limit(params), gl.default_scan_limit(params), 301)
    landscape_temps = [0.5 * params.t_c, params.t_c, 1.5 * params.t_c]
    write_table(
        cfg.out_dir / "landscape.csv",
        ["o"] + [f"F_at_T_{T:g}" for T in landscape_temps],
        [
            (float(o),) + tuple(float(gl.free_energy(params, T, o)) for T in landscape_temps)
            for o in o_grid
        ],
    )
    rows_arr = np.array([[r[0], r[1], r[2]] for r in rows])
    render_svg(
        ChartSpec(
            series=(
                ChartSeries("ordered branch +", rows_arr[:, 0], rows_arr[:, 1]),
                ChartSeries("ordered branch -", rows_arr[:, 0], rows_arr[:, 2]),
            ),
            title="Order parameter vs temperature", xlabel="temperature", ylabel="order parameter",
        ),
        cfg.out_dir / "branches.svg",
    )
    render_svg(
        ChartSpec(
            series=tuple(
                ChartSeries(f"T = {T:g}", o_grid, np.asarray(gl.free_energy(params, T, o_grid)))
                for T in landscape_temps
            ),
            title="Free-energy landscape", xlabel="order parameter", ylabel="free energy",
        ),
        cfg.out_dir / "landscape.svg",
    )


def _gl_fit_mode(cfg: ExperimentConfig) -> None:
    path = Path(cfg.params["sweep_csv"])
    if not path.exists():
        raise ParseError(f"sweep CSV not found: {path}")
    import csv as _csv

    with path.open("r", newline="", encoding="utf-8") as fh:
        reader = _csv.DictReader(fh)
        if reader.fieldnames is None or not {"T", "mean_abs_imbalance"} <= set(reader.fieldnames):
            raise ParseError(f"{path}: expected columns T and mean_abs_imbalance")
        samples = [(float(row["T"]), float(row["mean_abs_imbalance"])) for row in reader]
    t_c, a_over_b = gl.fit_tc(samples, noise_floor=cfg.params["noise_floor"])
    write_table(cfg.out_dir / "fit.csv", ["t_c", "a_over_b", "n_samples"],
                [(t_c, a_over_b, len(samples))])
    t_arr = np.array([t for t, _ in samples])
    o2_arr = np.array([o * o for _, o in samples])
    fit_line = a_over_b * (t_c - t_arr)
    render_svg(
        ChartSpec(
            series=(
                ChartSeries("measured o^2", t_arr, o2_arr),
                ChartSeries("fitted branch", t_arr, np.maximum(fit_line, 0.0)),
            ),
            title=f"Critical-temperature fit: t_c = {t_c:.4g}",
            xlabel="temperature", ylabel="squared order parameter",
        ),
        cfg.out_dir / "fit.svg",
    )


def _run_growth_solve(cfg: ExperimentConfig) -> None:
    p = cfg.params
    params = growth.FundParams.from_alpha(
        alpha=p["alpha"], r=p["r"], d0=p["d0"], c0=p["c0"],
        liquidity=p["liquidity"], dividend_mode=p["dividend_mode"],
    )
    states = growth.integrate_cash(params, p["t_max"], p["dt"])
    write_table(
        cfg.out_dir / "solution.csv",
        ["t", "price", "cash", "wealth", "n"],
        [(s.t, s.price, s.cash, s.wealth, s.n) for s in states],
    )
    report = growth.sustainability(params, p["t_max"], p["dt"])
    write_table(cfg.out_dir / "summary.csv", ["sustainable", "failure_time"],
                [(report.sustainable, "" if report.failure_time is None else report.failure_time)])
    t_arr = np.array([s.t for s in states])
    markers = ()
    if not report.sustainable:
        markers = ((report.failure_time, float(np.exp(params.alpha * report.failure_time)),
                    "cash falls below price"),)
    render_svg(
        ChartSpec(
            series=(
                ChartSeries("price", t_arr, np.array([s.price for s in states])),
                ChartSeries("cash", t_arr, np.array([s.cash for s in states])),
            ),
            title=f"Fund growth at alpha={params.alpha:g}, r={params.r:g} "
                  f"({params.dividend_mode} dividends)",
            xlabel="time", ylabel="renormalized units",
            markers=markers,
        ),
        cfg.out_dir / "growth.svg",
    )


_RUNNERS = {
    "support-sim": _run_support_sim,
    "ratchet-backtest": _run_ratchet_backtest,
    "sgame-run": _run_sgame_run,
    "sgame-sweep": _run_sgame_sweep,
    "sgame-quantiles": _run_sgame_quantiles,
    "sgame-slaved": _run_sgame_slaved,
    "gl-analyze": _run_gl_analyze,
    "growth-solve": _run_growth_solve,
}

_USAGE_ERRORS = (ParameterError, ValidationError, LengthError, ParseError)


def run(cfg: ExperimentConfig) -> None:
    """Execute a validated experiment config, writing outputs into its out_dir."""
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    _echo_config(cfg)
    _RUNNERS[cfg.command](cfg)


def main(argv=None) -> int:
    try:
        cfg = parse_args(sys.argv[1:] if argv is None else argv)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    try:
        run(cfg)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except MarketDynError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return RUNTIME_EXIT
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return RUNTIME_EXIT
    return 0


if __name__ == "__main__":
    sys.exit(main())
