"""Batch command-line front end.

Wires the pipeline (ingestion -> ESG adjustment -> sign-walk construction ->
calibration -> pricing) into reproducible runs. Every run resolves to a
single RunConfig record; its SHA-256 hash names the artifacts and is embedded
in each one together with the full parameter echo, so re-running an identical
config byte-reproduces every output.

Exit codes: 0 success, 1 configuration/usage error, 2 data error (unreadable
or inconsistent inputs), 3 model-validity error (negative conditional
volatility or a risk-neutral probability outside (0, 1)).
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
from dataclasses import dataclass
from datetime import date
from pathlib import Path

import numpy as np

from .calibrate import (
    RisklessParams,
    build_beta_series,
    calibration_report,
    export_density_pair,
    fit_riskless_params,
    fit_risky_params,
    kde_compare,
    model_change_series,
    riskless_report,
)
from .csyip import (
    FilterSpec,
    MarketIndexParams,
    build_csy_path,
    export_csy_path,
    price_changes,
    simulate_market_index,
    simulate_stock_prices,
)
from .errors import DATA_ERRORS, MODEL_VALIDITY_ERRORS, ConfigError
from .esg import (
    EsgSeries,
    SmootherConfig,
    esg_adjusted_prices,
    index_esg,
    interpolate_esg_daily,
    load_esg_series,
    relative_esg,
)
from .ingest import (
    ManifestEntry,
    align_calendars,
    load_esg_fiscal_scores,
    load_manifest,
    load_price_series,
    load_treasury_rates,
    save_price_series,
    slice_series,
)
from .pricer import (
    OptionSpec,
    PricingConfig,
    export_price_surface,
    price_surface,
    riskless_price_path,
)

__all__ = ["RunConfig", "MAX_PRICING_MATURITY", "main", "run"]

# 2^26 node visits per traversal is the largest tolerable budget at a daily
# step; longer maturities need a coarser time step, not a bigger tree.
MAX_PRICING_MATURITY = 26

_SUBCOMMANDS = ("csyip", "calibrate", "price", "simulate", "diagnose")
_FILTER_KINDS = ("power", "gaussian", "linear", "unit")


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved options for one run; hashable to a stable artifact id."""

    subcommand: str
    out: str = "artifacts"
    config_path: str | None = None
    index: str | None = None
    manifest: str | None = None
    ticker: tuple[str, ...] | None = None
    prices: str | None = None
    esg: str | None = None
    rates: str | None = None
    percent: bool = False
    market_esg: str | None = None
    weights: str | None = None
    gamma_esg: tuple[float, ...] = (0.0,)
    esg_window: int = 126
    esg_sigma: float = 31.5
    d: float = 10.0
    filter: str = "power"
    delta: float = 1.0
    start: str | None = None
    end: str | None = None
    strikes: tuple[float, ...] | None = None
    maturities: tuple[int, ...] | None = None
    payoff: str = "call"
    split_depth: int = 4
    workers: int | None = None
    x_init: float | None = None
    bandwidth: float | None = None
    kind: str = "index"
    n: int = 2000
    seed: int = 0
    a0: float = 100.0
    a: float = 0.0
    mu: float = 0.0
    v: float = 1.0
    sigma: float = 0.0
    gamma: float = 0.0
    p: float = 0.5
    noise_std: float = 0.0

    def canonical(self) -> dict:
        record = dataclasses.asdict(self)
        # Where the artifacts land does not change what was computed, so the
        # output directory and config file path stay out of the hash.
        record.pop("config_path")
        record.pop("out")
        for key, value in record.items():
            if isinstance(value, tuple):
                record[key] = list(value)
        return record

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


# --------------------------------------------------------------------------
# Argument parsing and config resolution
# --------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; the documented contract
    # reserves 2 for data errors, so route usage problems through ConfigError.
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="bbsm", description="Path-dependent binomial pricing pipeline")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_common(sp):
        sp.add_argument("--config", dest="config_path", default=None,
                        help="JSON file supplying any of these options; explicit flags win")
        sp.add_argument("--out", default=None, help="output directory (default: artifacts)")
        sp.add_argument("--seed", type=int, default=None)

    def add_window(sp):
        sp.add_argument("--start", default=None, help="first date kept, ISO format")
        sp.add_argument("--end", default=None, help="last date kept, ISO format")

    def add_path_opts(sp):
        sp.add_argument("--d", type=float, default=None, help="filter length scale")
        sp.add_argument("--filter", choices=_FILTER_KINDS, default=None)
        sp.add_argument("--delta", type=float, default=None, help="step size in trading days")

    def add_data_opts(sp):
        sp.add_argument("--index", default=None, help="market index price CSV")
        sp.add_argument("--manifest", default=None, help="JSON mapping ticker -> {prices, esg}")
        sp.add_argument("--ticker", default=None, help="comma list restricting manifest tickers")
        sp.add_argument("--prices", default=None, help="single-ticker price CSV (alternative to manifest)")
        sp.add_argument("--esg", default=None, help="single-ticker fiscal ESG CSV")
        sp.add_argument("--rates", default=None, help="treasury yield CSV")
        sp.add_argument("--percent", action="store_true", default=None,
                        help="yields are quoted in percent")
        sp.add_argument("--market-esg", dest="market_esg", default=None,
                        help="daily market ESG score CSV (overrides the composite)")
        sp.add_argument("--weights", default=None, help="JSON {ticker: weight} for the market ESG composite")
        sp.add_argument("--gamma-esg", dest="gamma_esg", default=None,
                        help="comma list of ESG affinities, e.g. -1,0,1")
        sp.add_argument("--esg-window", dest="esg_window", type=int, default=None,
                        help="smoothing window in trading days")
        sp.add_argument("--esg-sigma", dest="esg_sigma", type=float, default=None,
                        help="smoothing kernel width in trading days")

    sp = sub.add_parser("csyip", help="build and export the sign-walk path of a market index")
    add_common(sp); add_window(sp); add_path_opts(sp)
    sp.add_argument("--index", default=None, required=False)

    sp = sub.add_parser("calibrate", help="fit dynamics coefficients per ticker and ESG affinity")
    add_common(sp); add_window(sp); add_path_opts(sp); add_data_opts(sp)

    sp = sub.add_parser("price", help="calibrate then price option surfaces")
    add_common(sp); add_window(sp); add_path_opts(sp); add_data_opts(sp)
    sp.add_argument("--strikes", default=None, help="comma list of strikes")
    sp.add_argument("--maturities", default=None, help="comma list of maturities in trading days")
    sp.add_argument("--payoff", choices=("call", "put", "forward"), default=None)
    sp.add_argument("--split-depth", dest="split_depth", type=int, default=None,
                    help="parallel subtree split depth")
    sp.add_argument("--workers", type=int, default=None,
                    help="worker processes (default: BBSM_WORKERS or 1)")
    sp.add_argument("--x-init", dest="x_init", type=float, default=None,
                    help="override the pricing-date path seed (default: final historical value)")

    sp = sub.add_parser("simulate", help="generate synthetic index or stock fixtures")
    add_common(sp); add_path_opts(sp)
    sp.add_argument("--kind", choices=("index", "stock"), default=None)
    sp.add_argument("--index", default=None, help="market CSV driving a stock simulation")
    sp.add_argument("--n", type=int, default=None, help="number of steps")
    sp.add_argument("--a0", type=float, default=None)
    sp.add_argument("--a", type=float, default=None)
    sp.add_argument("--mu", type=float, default=None)
    sp.add_argument("--v", type=float, default=None)
    sp.add_argument("--sigma", type=float, default=None)
    sp.add_argument("--gamma", type=float, default=None, help="path-dependence coefficient (stock only)")
    sp.add_argument("--p", type=float, default=None, help="up-move probability (index only)")
    sp.add_argument("--noise-std", dest="noise_std", type=float, default=None,
                    help="regression noise for stock fixtures")

    sp = sub.add_parser("diagnose", help="export density-comparison and path CSVs")
    add_common(sp); add_window(sp); add_path_opts(sp); add_data_opts(sp)
    sp.add_argument("--bandwidth", type=float, default=None, help="density bandwidth override")

    return parser


# Flags whose comma-list values may begin with a minus sign; argparse would
# otherwise read "-1,0,1" as an unknown option, so these pairs are rewritten
# to the --flag=value form before parsing.
_LIST_FLAGS = ("--gamma-esg", "--strikes", "--maturities")


def _normalize_argv(argv: list[str]) -> list[str]:
    out = []
    i = 0
    while i < len(argv):
        token = argv[i]
        if (
            token in _LIST_FLAGS
            and i + 1 < len(argv)
            and argv[i + 1].startswith("-")
            and len(argv[i + 1]) > 1
            and (argv[i + 1][1].isdigit() or argv[i + 1][1] == ".")
        ):
            out.append(f"{token}={argv[i + 1]}")
            i += 2
        else:
            out.append(token)
            i += 1
    return out


def _parse_list(raw, convert, flag: str) -> tuple:
    if isinstance(raw, (list, tuple)):
        items = list(raw)
    else:
        items = [piece for piece in str(raw).split(",") if piece.strip()]
    if not items:
        raise ConfigError(f"{flag} must contain at least one value")
    try:
        return tuple(convert(item) for item in items)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"cannot parse {flag} value {raw!r}: {exc}") from exc


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge defaults <- --config JSON <- explicit flags into a RunConfig."""
    merged: dict = {"subcommand": args.subcommand}
    if getattr(args, "config_path", None):
        config_path = Path(args.config_path)
        if not config_path.is_file():
            raise ConfigError(f"config file not found: {config_path}")
        try:
            loaded = json.loads(config_path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{config_path}: invalid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"{config_path}: config must be a JSON object")
        merged["config_path"] = str(config_path)
        field_names = {f.name for f in dataclasses.fields(RunConfig)}
        for key, value in loaded.items():
            if key not in field_names:
                raise ConfigError(f"{config_path}: unknown config key {key!r}")
            if key in ("subcommand",) and value != args.subcommand:
                raise ConfigError(
                    f"{config_path}: config is for subcommand {value!r}, not {args.subcommand!r}"
                )
            merged[key] = value
    for key, value in vars(args).items():
        if key in ("subcommand", "config_path"):
            continue
        if value is not None:
            merged[key] = value

    for key, flag, convert in (
        ("ticker", "--ticker", str),
        ("gamma_esg", "--gamma-esg", float),
        ("strikes", "--strikes", float),
        ("maturities", "--maturities", int),
    ):
        if merged.get(key) is not None:
            merged[key] = _parse_list(merged[key], convert, flag)

    try:
        config = RunConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    _validate_config(config)
    return config


def _validate_config(config: RunConfig) -> None:
    if config.subcommand not in _SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {config.subcommand!r}")
    if config.d <= 0:
        raise ConfigError(f"--d must be positive, got {config.d}")
    if config.delta <= 0:
        raise ConfigError(f"--delta must be positive, got {config.delta}")
    if config.filter not in _FILTER_KINDS:
        raise ConfigError(f"--filter must be one of {', '.join(_FILTER_KINDS)}")
    if config.esg_window < 0:
        raise ConfigError(f"--esg-window must be nonnegative, got {config.esg_window}")
    if config.esg_sigma <= 0:
        raise ConfigError(f"--esg-sigma must be positive, got {config.esg_sigma}")
    if config.split_depth < 0:
        raise ConfigError(f"--split-depth must be nonnegative, got {config.split_depth}")
    if config.workers is not None and config.workers < 1:
        raise ConfigError(f"--workers must be at least 1, got {config.workers}")
    for attr in ("start", "end"):
        value = getattr(config, attr)
        if value is not None:
            try:
                date.fromisoformat(value)
            except ValueError as exc:
                raise ConfigError(f"--{attr} must be an ISO date, got {value!r}") from exc
    for attr in ("index", "manifest", "prices", "esg", "rates", "market_esg", "weights"):
        value = getattr(config, attr)
        if value is not None and not Path(value).is_file():
            raise ConfigError(f"--{attr.replace('_', '-')} file not found: {value}")
    if config.subcommand == "csyip" and config.index is None:
        raise ConfigError("csyip requires --index")
    if config.subcommand in ("calibrate", "price", "diagnose"):
        if config.index is None:
            raise ConfigError(f"{config.subcommand} requires --index")
        if config.manifest is None and config.prices is None:
            raise ConfigError(f"{config.subcommand} requires --manifest or --prices")
    if config.subcommand == "price":
        if not config.strikes:
            raise ConfigError("price requires --strikes")
        if not config.maturities:
            raise ConfigError("price requires --maturities")
        worst = max(config.maturities)
        if worst > MAX_PRICING_MATURITY:
            raise ConfigError(
                f"maturity {worst} exceeds the 2^T traversal budget "
                f"(a {worst}-day tree has 2^{worst} leaves; the cap is T = "
                f"{MAX_PRICING_MATURITY}); use a coarser --delta instead"
            )
        if any(t < 0 for t in config.maturities):
            raise ConfigError("maturities must be nonnegative")
    if config.subcommand == "simulate":
        if config.kind not in ("index", "stock"):
            raise ConfigError(f"--kind must be index or stock, got {config.kind!r}")
        if config.kind == "stock" and config.index is None:
            raise ConfigError("simulate --kind stock requires --index")
        if config.n < 1:
            raise ConfigError(f"--n must be at least 1, got {config.n}")
        if config.noise_std < 0:
            raise ConfigError(f"--noise-std must be nonnegative, got {config.noise_std}")


# --------------------------------------------------------------------------
# Shared pipeline pieces
# --------------------------------------------------------------------------

def _provenance(config: RunConfig) -> list[str]:
    echo = json.dumps(config.canonical(), sort_keys=True, separators=(",", ":"))
    return [f"config_hash: {config.config_hash}", f"config: {echo}"]


def _out_dir(config: RunConfig) -> Path:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _window(config: RunConfig):
    start = date.fromisoformat(config.start) if config.start else None
    end = date.fromisoformat(config.end) if config.end else None
    return start, end


def _gamma_tag(gamma: float) -> str:
    text = f"{gamma:+g}".replace("+", "p").replace("-", "m").replace(".", "_")
    return f"gamma{text}"


def _filter_spec(config: RunConfig) -> FilterSpec:
    return FilterSpec(d=config.d, kind=config.filter)


def _ticker_entries(config: RunConfig) -> dict[str, ManifestEntry]:
    if config.manifest is not None:
        entries = load_manifest(config.manifest)
        if config.ticker:
            missing = [t for t in config.ticker if t not in entries]
            if missing:
                raise ConfigError(
                    f"tickers {', '.join(missing)} not present in {config.manifest}"
                )
            entries = {t: entries[t] for t in config.ticker}
        if not entries:
            raise ConfigError(f"manifest {config.manifest} lists no tickers")
        return entries
    name = config.ticker[0] if config.ticker else "STOCK"
    return {name: ManifestEntry(prices=Path(config.prices), esg=Path(config.esg) if config.esg else None)}


def _load_weights(config: RunConfig) -> dict[str, float] | None:
    if config.weights is None:
        return None
    try:
        raw = json.loads(Path(config.weights).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{config.weights}: invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{config.weights}: weights must be a JSON object")
    return {str(k): float(v) for k, v in raw.items()}


def _market_esg_series(config, calendar, entries, smoother):
    """Daily market ESG scores on `calendar`, or None without ESG inputs."""
    if config.market_esg is not None:
        series = load_esg_series(config.market_esg)
        lookup = dict(zip(series.calendar.dates, series.score))
        missing = [day for day in calendar if day not in lookup]
        if missing:
            raise ConfigError(
                f"--market-esg does not cover {len(missing)} trading days "
                f"(first missing: {missing[0]})"
            )
        return EsgSeries(calendar, np.array([lookup[day] for day in calendar]))
    scored = {t: e for t, e in entries.items() if e.esg is not None}
    if not scored:
        return None
    weights = _load_weights(config)
    components = []
    for ticker, entry in sorted(scored.items()):
        table = load_esg_fiscal_scores(entry.esg)
        daily = interpolate_esg_daily(table, calendar, smoother)
        weight = 1.0 if weights is None else weights.get(ticker, 0.0)
        components.append((daily, weight))
    return index_esg(components)


def _calibrate_one(config, market, rates, entries, ticker):
    """Full per-ticker calibration; returns one record per gamma value."""
    start, end = _window(config)
    stock = slice_series(load_price_series(entries[ticker].prices), start, end)
    spec = _filter_spec(config)
    smoother = SmootherConfig(window_days=config.esg_window, gaussian_sigma_days=config.esg_sigma)

    series = [market, stock] + ([rates] if rates is not None else [])
    aligned, dropped = align_calendars(series)
    market_a, stock_a = aligned[0], aligned[1]
    rates_a = aligned[2] if rates is not None else None
    calendar = stock_a.calendar

    path = build_csy_path(market_a, spec, config.delta)

    rel = None
    needs_esg = any(g != 0.0 for g in config.gamma_esg)
    if needs_esg:
        if entries[ticker].esg is None:
            raise ConfigError(
                f"nonzero --gamma-esg requires an ESG table for {ticker}"
            )
        market_esg = _market_esg_series(config, calendar, entries, smoother)
        if market_esg is None:
            raise ConfigError("nonzero --gamma-esg requires ESG inputs for the market composite")
        stock_esg = interpolate_esg_daily(
            load_esg_fiscal_scores(entries[ticker].esg), calendar, smoother
        )
        rel = relative_esg(stock_esg, market_esg)

    records = []
    for gamma in config.gamma_esg:
        adjusted = esg_adjusted_prices(stock_a, rel, gamma) if rel is not None else stock_a
        changes = price_changes(adjusted)
        lagged = adjusted.values[:-1]
        params = fit_risky_params(changes, lagged, path, config.delta)
        report = calibration_report(ticker, gamma, params)

        riskless = None
        if rates_a is not None:
            beta = build_beta_series(rates_a, beta0=float(adjusted.values[0]), delta=config.delta)
            riskless = fit_riskless_params(beta, beta0=float(adjusted.values[0]), delta=config.delta)

        records.append(
            {
                "report": report,
                "riskless": riskless_report(riskless) if riskless is not None else None,
                "pricing_context": {
                    "a_final": float(adjusted.values[-1]),
                    "x_final": float(path.x[-1]),
                    "up_prob": path.up_prob,
                    "d": config.d,
                    "filter": config.filter,
                    "delta": config.delta,
                    "dropped_days": dropped,
                },
                "_params": params,
                "_riskless": riskless,
                "_changes": changes,
                "_lagged": lagged,
                "_path": path,
                "gamma_esg": gamma,
            }
        )
    return records


def _artifact_json(config: RunConfig, payload: dict) -> dict:
    return {"config_hash": config.config_hash, "config": config.canonical(), **payload}


def _write_json(path: Path, record: dict) -> None:
    with open(path, "w") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------

def _cmd_csyip(config: RunConfig) -> int:
    start, end = _window(config)
    market = slice_series(load_price_series(config.index), start, end)
    path = build_csy_path(market, _filter_spec(config), config.delta)
    out = _out_dir(config) / f"csyip_{config.config_hash}.csv"
    export_csy_path(path, market.calendar, out, preamble=_provenance(config))
    print(out)
    return 0


def _cmd_calibrate(config: RunConfig) -> int:
    start, end = _window(config)
    market = slice_series(load_price_series(config.index), start, end)
    rates = (
        slice_series(load_treasury_rates(config.rates, percent=bool(config.percent)), start, end)
        if config.rates
        else None
    )
    entries = _ticker_entries(config)
    out_dir = _out_dir(config)
    for ticker in sorted(entries):
        for record in _calibrate_one(config, market, rates, entries, ticker):
            artifact = _artifact_json(
                config,
                {
                    "calibration": record["report"],
                    "riskless": record["riskless"],
                    "pricing_context": record["pricing_context"],
                },
            )
            tag = _gamma_tag(record["gamma_esg"])
            path = out_dir / f"calibrate_{ticker}_{tag}_{config.config_hash}.json"
            _write_json(path, artifact)
            print(path)
    return 0


def _cmd_price(config: RunConfig) -> int:
    start, end = _window(config)
    market = slice_series(load_price_series(config.index), start, end)
    rates = (
        slice_series(load_treasury_rates(config.rates, percent=bool(config.percent)), start, end)
        if config.rates
        else None
    )
    entries = _ticker_entries(config)
    out_dir = _out_dir(config)
    horizon = max(config.maturities)
    for ticker in sorted(entries):
        for record in _calibrate_one(config, market, rates, entries, ticker):
            params = record["_params"]
            context = record["pricing_context"]
            a_final = context["a_final"]
            riskless = record["_riskless"]
            if riskless is None:
                # No rate data: price under a flat riskless account.
                riskless = RisklessParams(rho=0.0, r=0.0, beta0=a_final, adj_r2=0.0)
            beta_path = riskless_price_path(riskless, horizon, config.delta, beta0=a_final)
            x_init = config.x_init if config.x_init is not None else context["x_final"]
            pricing = PricingConfig(
                delta=config.delta,
                up_prob=context["up_prob"],
                x_init=x_init,
                filter=_filter_spec(config),
                a0=a_final,
                beta_path=beta_path,
            )
            template = OptionSpec(
                payoff=config.payoff, strike=None, maturity=0, gamma_esg=record["gamma_esg"]
            )
            surface = price_surface(
                list(config.strikes),
                list(config.maturities),
                template,
                params,
                riskless,
                pricing,
                split_depth=config.split_depth,
                workers=config.workers,
            )
            tag = _gamma_tag(record["gamma_esg"])
            dest = out_dir / f"price_{ticker}_{tag}_{config.config_hash}.csv"
            preamble = _provenance(config) + [
                f"pricing_context: {json.dumps({**context, 'x_init': x_init, 'riskless': riskless_report(riskless)}, sort_keys=True, separators=(',', ':'))}"
            ]
            export_price_surface(surface, dest, ticker=ticker, preamble=preamble)
            print(dest)
    return 0


def _cmd_simulate(config: RunConfig) -> int:
    out_dir = _out_dir(config)
    dest = out_dir / f"simulate_{config.kind}_{config.config_hash}.csv"
    if config.kind == "index":
        params = MarketIndexParams(
            a=config.a, mu=config.mu, v=config.v, sigma=config.sigma,
            p0=config.p, a0=config.a0,
        )
        series = simulate_market_index(params, config.n, config.delta, config.seed)
    else:
        market = load_price_series(config.index)
        series = simulate_stock_prices(
            market,
            a=config.a, mu=config.mu, v=config.v, sigma=config.sigma,
            gamma=config.gamma, a0=config.a0,
            spec=_filter_spec(config), delta=config.delta,
            noise_std=config.noise_std, seed=config.seed,
        )
    save_price_series(series, dest, preamble=_provenance(config))
    print(dest)
    return 0


def _cmd_diagnose(config: RunConfig) -> int:
    start, end = _window(config)
    market = slice_series(load_price_series(config.index), start, end)
    rates = (
        slice_series(load_treasury_rates(config.rates, percent=bool(config.percent)), start, end)
        if config.rates
        else None
    )
    entries = _ticker_entries(config)
    out_dir = _out_dir(config)

    # The market path behind the construction figures, on the full window.
    market_path = build_csy_path(market, _filter_spec(config), config.delta)
    path_dest = out_dir / f"diagnose_csypath_{config.config_hash}.csv"
    export_csy_path(market_path, market.calendar, path_dest, preamble=_provenance(config))
    print(path_dest)

    for ticker in sorted(entries):
        for record in _calibrate_one(config, market, rates, entries, ticker):
            params = record["_params"]
            model = model_change_series(params, record["_lagged"], record["_path"])
            pair = kde_compare(record["_changes"].change, model, bandwidth=config.bandwidth)
            tag = _gamma_tag(record["gamma_esg"])
            dest = out_dir / f"diagnose_density_{ticker}_{tag}_{config.config_hash}.csv"
            export_density_pair(pair, dest, preamble=tuple(_provenance(config)))
            print(dest)
    return 0


_DISPATCH = {
    "csyip": _cmd_csyip,
    "calibrate": _cmd_calibrate,
    "price": _cmd_price,
    "simulate": _cmd_simulate,
    "diagnose": _cmd_diagnose,
}


def run(config: RunConfig) -> int:
    """Execute a resolved RunConfig; returns the process exit status."""
    _validate_config(config)
    return _DISPATCH[config.subcommand](config)


def main(argv=None) -> int:
    parser = _build_parser()
    if argv is None:
        argv = sys.argv[1:]
    try:
        args = parser.parse_args(_normalize_argv(list(argv)))
        config = _resolve_config(args)
        return _DISPATCH[config.subcommand](config)
    except ConfigError as exc:
        print(f"error code=1 kind={type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except DATA_ERRORS as exc:
        print(f"error code=2 kind={type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except MODEL_VALIDITY_ERRORS as exc:
        print(f"error code=3 kind={type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error code=1 kind={type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
