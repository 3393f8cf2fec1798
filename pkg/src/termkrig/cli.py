"""Command-line front end.

Subcommands::

    termkrig calibrate --input FILE --asof YYYY-MM-DD [--gamma G]
                       [--no-seasonality] --out DIR
    termkrig band      (--model FILE | --input FILE --asof DATE)
                       [--seed S] [--samples N] [--quantiles L,U]
                       [--plain] --out DIR
    termkrig price     --model FILE --window YYYY-MM:YYYY-MM
                       [--plain] [--band [--seed S] [--samples N]]

Exit codes: 0 success, 2 parse/input error, 3 infeasible quotes,
4 numerical failure, 5 configuration error.

Defaults honour the environment variables TERMKRIG_GAMMA, TERMKRIG_SEED,
TERMKRIG_SAMPLES, TERMKRIG_QUANTILES and TERMKRIG_OUT.
"""

from __future__ import annotations

import argparse
import datetime as dt
import os
import sys
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .calibrate import (
    build_constraints,
    build_season_penalty,
    fit_hyperparams,
    posterior_precision,
    solve_map,
)
from .classic import benchmark_window, fit_benchmark
from .curve import DT, CurveModel, TimeGrid, price_window, window_weights
from .errors import (
    ConfigError,
    InfeasibleMarketError,
    NumericalError,
    QuoteParseError,
    TermkrigError,
)
from .market import Month, delivery_months, parse_snapshot
from .persist import load_model, model_document, save_model
from .uncertainty import DEFAULT_QUANTILES, PosteriorSpec, band_for_window, sample_posterior

CSV_FORMAT_HELP = """\
input CSV schema (UTF-8, header required):
  kind,window,window2,bid,ask,id
  kind    M | Q | S | Y | MS | QS
  window  YYYY-MM (M/MS), YYYY-Qn (Q/QS), SUM-YY or WIN-YY (S), YYYY (Y);
          summer = Apr-Sep, winter = Oct-Mar of the following year
  window2 second leg for MS/QS rows, empty otherwise; a spread is worth
          later-window price minus earlier-window price
  bid,ask decimal prices with '.' separator (bid <= ask)
  id      optional unique identifier (generated from kind/window if empty)
The observation date is given with --asof, not in the file.
"""

BAND_PERIODS = (1, 3, 6, 12)

EXIT_PARSE = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4
EXIT_CONFIG = 5


@dataclass
class RunConfig:
    """Validated invocation parameters shared by the subcommands."""

    input: str | None = None
    asof: dt.date | None = None
    gamma: float | None = None
    seasonality: bool = True
    seed: int = 0
    n_samples: int = 10_000
    quantiles: tuple[float, float] = DEFAULT_QUANTILES
    out_dir: str | None = None
    table_format: str = "csv"
    model_path: str | None = None
    window: str | None = None
    plain: bool = False
    with_band: bool = False

    def validate(self) -> None:
        if self.gamma is not None and not self.gamma >= 0:
            raise ConfigError(f"gamma must be nonnegative, got {self.gamma}")
        if self.n_samples < 100:
            raise ConfigError(f"need at least 100 samples, got {self.n_samples}")
        ql, qu = self.quantiles
        if not (0.0 < ql < qu < 1.0):
            raise ConfigError(f"quantiles must satisfy 0 < lower < upper < 1, got {ql},{qu}")
        if self.table_format != "csv":
            raise ConfigError(f"unsupported output format {self.table_format!r}")


@dataclass
class PriceTable:
    """Rows (id, bid, ask, F, F_K, F_B) in input quote order; F is the
    penalized model, F_K the unpenalized one, F_B classical kriging."""

    rows: list[tuple[str, float, float, float, float, float]]

    def to_csv(self) -> str:
        lines = ["id,bid,ask,F,F_K,F_B"]
        for rid, bid, ask, f, fk, fb in self.rows:
            lines.append(f"{rid},{bid!r},{ask!r},{f!r},{fk!r},{fb!r}")
        return "\n".join(lines) + "\n"


def default_gamma(sigma2_diag: np.ndarray) -> float:
    """Penalty weight at which curvature mismatch competes with the data
    term: 1e4 * dt^4 / median observation variance."""
    med = float(np.median(sigma2_diag))
    if med <= 0:
        raise ConfigError("cannot scale default gamma: zero observation variance")
    return 1e4 * DT**4 / med


def _calibrate_pipeline(config: RunConfig):
    if config.input is None or config.asof is None:
        raise ConfigError("calibration needs --input and --asof")
    snapshot = parse_snapshot(config.input, config.asof)
    grid = TimeGrid.for_snapshot(snapshot)
    cs = build_constraints(snapshot, grid)
    params, mle_report = fit_hyperparams(cs, grid)
    gamma = config.gamma
    if gamma is None:
        gamma = default_gamma(cs.sigma2) if config.seasonality else 0.0
    if not config.seasonality:
        gamma = 0.0
    model_plain, map_plain = solve_map(cs, grid, params, None)
    if gamma > 0:
        penalty = build_season_penalty(grid, gamma)
        model, map_report = solve_map(cs, grid, params, penalty)
    else:
        model, map_report = model_plain, map_plain
    return snapshot, grid, cs, params, gamma, model, model_plain, mle_report, map_report


def cmd_calibrate(config: RunConfig) -> PriceTable:
    config.validate()
    if config.out_dir is None:
        raise ConfigError("calibrate needs --out DIR")
    (snapshot, grid, cs, params, gamma, model, model_plain,
     mle_report, map_report) = _calibrate_pipeline(config)
    bench = fit_benchmark(snapshot, params)

    rows = []
    for q in snapshot.quotes:
        months = delivery_months(q)
        rows.append(
            (
                q.id,
                q.bid,
                q.ask,
                price_window(model, months),
                price_window(model_plain, months),
                benchmark_window(bench, months),
            )
        )
    table = PriceTable(rows)

    os.makedirs(config.out_dir, exist_ok=True)
    table_path = os.path.join(config.out_dir, "table.csv")
    with open(table_path, "w", encoding="utf-8") as fh:
        fh.write(table.to_csv())
    doc = model_document(snapshot, params, gamma, model, model_plain, mle_report, map_report)
    model_path = os.path.join(config.out_dir, "model.json")
    save_model(model_path, doc)
    print(
        f"calibrated {len(snapshot.quotes)} quotes on {grid.n} nodes: "
        f"sigma={params.sigma:.6g} theta={params.theta:.6g} gamma={gamma:.6g}"
    )
    print(f"wrote {table_path} and {model_path}")
    return table


def _posterior_for(loaded, plain: bool):
    cs = build_constraints(loaded.snapshot, loaded.grid)
    gamma = 0.0 if plain else loaded.gamma
    penalty = build_season_penalty(loaded.grid, gamma) if gamma > 0 else None
    H = posterior_precision(cs, loaded.grid, loaded.params, penalty)
    if cs.n:
        rhs = cs.A.T @ (cs.q_mid / cs.sigma2)
        mean = sla.solve(H, rhs, assume_a="pos", check_finite=False)
    else:
        mean = np.zeros(loaded.grid.n)
    return cs, H, mean


def _load_or_calibrate(config: RunConfig):
    if config.model_path is not None:
        return load_model(config.model_path)
    (snapshot, _, _, params, gamma, model, model_plain,
     mle_report, map_report) = _calibrate_pipeline(config)
    doc = model_document(snapshot, params, gamma, model, model_plain, mle_report, map_report)
    from .persist import LoadedModel

    return LoadedModel(
        snapshot=snapshot,
        grid=model.grid,
        params=params,
        gamma=gamma,
        seasonality=model.seasonality_enabled,
        model=model,
        model_plain=model_plain,
    )


def cmd_band(config: RunConfig) -> None:
    config.validate()
    if config.out_dir is None:
        raise ConfigError("band needs --out DIR")
    loaded = _load_or_calibrate(config)
    cs, H, mean = _posterior_for(loaded, config.plain)
    spec = PosteriorSpec(mean=mean, precision=H, seed=config.seed, n_samples=config.n_samples)
    band = sample_posterior(spec, cs, config.quantiles)

    grid = loaded.grid
    node_months = grid.node_months
    os.makedirs(config.out_dir, exist_ok=True)
    for period in BAND_PERIODS:
        path = os.path.join(config.out_dir, f"band_{period}m.csv")
        lines = ["t,lower,mean,upper"]
        for start in range(grid.n - period + 1):
            months = [(m, m.days()) for m in node_months[start : start + period]]
            idx, w = window_weights(grid, months)
            prices = band.samples[:, idx] @ w
            lo, hi = band_for_window(band, grid, months)
            lines.append(
                f"{float(grid.times[start])!r},{lo!r},{float(prices.mean())!r},{hi!r}"
            )
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    print(
        f"kept {band.samples_kept}/{config.n_samples} samples "
        f"(acceptance {band.acceptance_rate:.3f}); wrote band files to {config.out_dir}"
    )


def _parse_window_arg(text: str) -> tuple[Month, Month]:
    try:
        a, b = text.split(":")
        start, end = Month.parse(a), Month.parse(b)
    except (ValueError, QuoteParseError):
        raise ConfigError(f"invalid window {text!r}, expected YYYY-MM:YYYY-MM")
    if end < start:
        raise ConfigError(f"window {text!r} ends before it starts")
    return start, end


def cmd_price(config: RunConfig) -> float:
    config.validate()
    if config.model_path is None:
        raise ConfigError("price needs --model FILE")
    if config.window is None:
        raise ConfigError("price needs --window YYYY-MM:YYYY-MM")
    loaded = load_model(config.model_path)
    start, end = _parse_window_arg(config.window)
    months = [(start.plus(i), start.plus(i).days()) for i in range(end.diff(start) + 1)]
    model: CurveModel = loaded.model_plain if config.plain else loaded.model
    value = price_window(model, months)
    if config.with_band:
        cs, H, mean = _posterior_for(loaded, config.plain)
        spec = PosteriorSpec(mean=mean, precision=H, seed=config.seed, n_samples=config.n_samples)
        band = sample_posterior(spec, cs, config.quantiles)
        lo, hi = band_for_window(band, loaded.grid, months)
        print(f"{value!r} {lo!r} {hi!r}")
    else:
        print(f"{value!r}")
    return value


def _env_float(name: str) -> float | None:
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return None
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"environment variable {name} is not a number: {raw!r}")


def _env_int(name: str, fallback: int) -> int:
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return fallback
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"environment variable {name} is not an integer: {raw!r}")


def _parse_quantiles(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(p) for p in text.split(","))
    except ValueError:
        raise ConfigError(f"invalid quantile pair {text!r}, expected LOWER,UPPER")
    return lo, hi


def _parse_asof(text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise ConfigError(f"invalid observation date {text!r}, expected YYYY-MM-DD")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="termkrig",
        description="Arbitrage-consistent futures term structures from bid/ask quotes.",
        epilog=CSV_FORMAT_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    env_out = os.environ.get("TERMKRIG_OUT")

    cal = sub.add_parser(
        "calibrate",
        help="fit both model variants and the kriging baseline, write table + model",
        epilog=CSV_FORMAT_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    cal.add_argument("--input", required=True, help="quote CSV file")
    cal.add_argument("--asof", required=True, help="observation date YYYY-MM-DD")
    cal.add_argument("--gamma", type=float, default=None, help="seasonality penalty weight")
    cal.add_argument(
        "--no-seasonality", action="store_true", help="disable the seasonality penalty"
    )
    cal.add_argument("--out", default=env_out, help="output directory")
    cal.add_argument("--format", default="csv", help="table format (csv)")

    band = sub.add_parser("band", help="posterior uncertainty bands for 1/3/6/12m windows")
    band.add_argument("--model", default=None, help="persisted model JSON")
    band.add_argument("--input", default=None, help="quote CSV (inline calibration)")
    band.add_argument("--asof", default=None, help="observation date for --input")
    band.add_argument("--gamma", type=float, default=None)
    band.add_argument("--no-seasonality", action="store_true")
    band.add_argument("--seed", type=int, default=None)
    band.add_argument("--samples", type=int, default=None)
    band.add_argument("--quantiles", default=None, help="pair LOWER,UPPER")
    band.add_argument("--plain", action="store_true", help="band the unpenalized model")
    band.add_argument("--out", default=env_out, help="output directory")

    price = sub.add_parser("price", help="price an arbitrary delivery window")
    price.add_argument("--model", required=True, help="persisted model JSON")
    price.add_argument("--window", required=True, help="YYYY-MM:YYYY-MM inclusive")
    price.add_argument("--plain", action="store_true", help="use the unpenalized model")
    price.add_argument("--band", action="store_true", help="append band columns")
    price.add_argument("--seed", type=int, default=None)
    price.add_argument("--samples", type=int, default=None)
    price.add_argument("--quantiles", default=None)
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    cfg.seed = _env_int("TERMKRIG_SEED", 0)
    cfg.n_samples = _env_int("TERMKRIG_SAMPLES", 10_000)
    env_q = os.environ.get("TERMKRIG_QUANTILES")
    if env_q:
        cfg.quantiles = _parse_quantiles(env_q)
    env_gamma = _env_float("TERMKRIG_GAMMA")
    if env_gamma is not None:
        cfg.gamma = env_gamma

    if getattr(args, "input", None) is not None:
        cfg.input = args.input
    if getattr(args, "asof", None) is not None:
        cfg.asof = _parse_asof(args.asof)
    if getattr(args, "gamma", None) is not None:
        cfg.gamma = args.gamma
    if getattr(args, "no_seasonality", False):
        cfg.seasonality = False
    if getattr(args, "out", None) is not None:
        cfg.out_dir = args.out
    if getattr(args, "format", None) is not None:
        cfg.table_format = args.format
    if getattr(args, "model", None) is not None:
        cfg.model_path = args.model
    if getattr(args, "window", None) is not None:
        cfg.window = args.window
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "samples", None) is not None:
        cfg.n_samples = args.samples
    if getattr(args, "quantiles", None) is not None:
        cfg.quantiles = _parse_quantiles(args.quantiles)
    cfg.plain = getattr(args, "plain", False)
    cfg.with_band = getattr(args, "band", False)
    return cfg


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        if args.command == "calibrate":
            cmd_calibrate(cfg)
        elif args.command == "band":
            cmd_band(cfg)
        elif args.command == "price":
            cmd_price(cfg)
        return 0
    except InfeasibleMarketError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except QuoteParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TermkrigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())
