"""Published reference outputs bundled as documented fixtures.

These values summarize a 10-ticker empirical study whose inputs (vendor
price, ESG-rating and option-quote feeds) are proprietary and cannot be
redistributed, so none of them are recomputable from data bundled here.
They exist to document the schema and realistic magnitudes of calibration
artifacts; the tests around them are format-level round-trips only, never
value reproduction.

Conventions in the fit table: `mu` is per day, `sigma` is per day, and both
are stored at face value (the published display scaled them by 1e3 and 1e2
respectively). `a0` is not part of the published record; it is implied as
a / (a/A0) from the two published scalings and carried only so fixture
records have the same shape as locally generated calibration reports. The
normalized block stores the published values verbatim, so it is rounding-
consistent with the raw block only to the published precision (three
significant figures).
"""

from __future__ import annotations

import json
from pathlib import Path

from .ingest import FiscalEsgTable

__all__ = [
    "REFERENCE_TICKERS",
    "REFERENCE_FISCAL_ESG",
    "REFERENCE_RISKY_FITS",
    "REFERENCE_NORMALIZED_FITS",
    "REFERENCE_RISKLESS",
    "REFERENCE_UP_PROB",
    "REFERENCE_SURFACE_LAYOUT",
    "reference_fiscal_esg_table",
    "reference_calibration_reports",
    "reference_riskless_report",
    "save_reference_fixtures",
    "load_reference_fixtures",
]

REFERENCE_TICKERS = (
    "AAPL", "AMAT", "AMD", "AMZN", "ASML",
    "GOOGL", "INTC", "NVDA", "PANW", "TEAM",
)

_FISCAL_YEARS = (2015, 2016, 2017, 2018, 2019, 2020, 2021, 2022)

REFERENCE_FISCAL_ESG = {
    "AAPL": (3.77, 4.31, 4.31, 4.45, 5.18, 5.16, 5.75, 5.75),
    "AMAT": (4.22, 4.47, 5.76, 6.80, 6.70, 6.85, 6.21, 6.53),
    "AMD": (5.25, 5.92, 6.02, 6.11, 6.56, 6.64, 6.28, 6.24),
    "AMZN": (1.91, 2.43, 2.48, 2.38, 3.52, 3.98, 4.15, 4.17),
    "ASML": (4.73, 4.80, 5.53, 5.73, 6.39, 6.43, 7.29, 7.12),
    "GOOGL": (2.87, 2.58, 2.78, 3.18, 3.55, 4.31, 4.35, 4.30),
    "INTC": (6.16, 6.27, 5.87, 6.05, 5.80, 6.18, 6.00, 5.99),
    "NVDA": (5.17, 5.38, 5.50, 6.34, 6.29, 6.61, 6.56, 6.59),
    "PANW": (1.01, 1.22, 1.31, 1.20, 2.17, 3.29, 4.81, 5.63),
    "TEAM": (0.90, 1.27, 1.41, 1.56, 3.06, 2.93, 3.11, 2.92),
}

# Fitted per-day dynamics coefficients at gamma_esg = 0, as published.
REFERENCE_RISKY_FITS = {
    "AAPL": {"a": 0.0666, "mu": 0.210e-3, "v": 0.418, "sigma": 0.796e-2, "gamma": 0.172, "adj_r2": 0.384},
    "AMAT": {"a": 0.117, "mu": -0.641e-3, "v": 0.287, "sigma": 1.15e-2, "gamma": 0.162, "adj_r2": 0.294},
    "AMD": {"a": 0.0852, "mu": -0.448e-3, "v": 0.0731, "sigma": 1.73e-2, "gamma": 0.0766, "adj_r2": 0.313},
    "AMZN": {"a": 0.271, "mu": -2.19e-3, "v": 0.293, "sigma": 1.01e-2, "gamma": 0.126, "adj_r2": 0.331},
    "ASML": {"a": 0.564, "mu": -675e-3, "v": 1.92, "sigma": 0.999e-2, "gamma": 1.01, "adj_r2": 0.327},
    "GOOGL": {"a": 0.0849, "mu": -0.434e-3, "v": -0.0179, "sigma": 1.15e-2, "gamma": 0.0401, "adj_r2": 0.358},
    "INTC": {"a": 0.257, "mu": -6.34e-3, "v": -0.191, "sigma": 1.47e-2, "gamma": 0.000845, "adj_r2": 0.204},
    "NVDA": {"a": 0.136, "mu": 0.755e-3, "v": 0.746, "sigma": 1.49e-2, "gamma": 0.409, "adj_r2": 0.357},
    "PANW": {"a": 0.0168, "mu": 1.01e-3, "v": -0.0616, "sigma": 1.08e-2, "gamma": 0.0800, "adj_r2": 0.171},
    "TEAM": {"a": 0.380, "mu": -2.03e-3, "v": 0.716, "sigma": 1.13e-2, "gamma": 0.389, "adj_r2": 0.192},
}

# Initial-value-normalized coefficients at gamma_esg = 0, as published.
REFERENCE_NORMALIZED_FITS = {
    "AAPL": {"a_over_a0": 0.278e-2, "v_over_a0": 1.74e-2, "gamma_over_a0": 0.719e-2},
    "AMAT": {"a_over_a0": 0.699e-2, "v_over_a0": 1.72e-2, "gamma_over_a0": 0.969e-2},
    "AMD": {"a_over_a0": 3.07e-2, "v_over_a0": 2.64e-2, "gamma_over_a0": 2.77e-2},
    "AMZN": {"a_over_a0": 0.850e-2, "v_over_a0": 0.920e-2, "gamma_over_a0": 0.394e-2},
    "ASML": {"a_over_a0": 0.703e-2, "v_over_a0": 2.39e-2, "gamma_over_a0": 1.25e-2},
    "GOOGL": {"a_over_a0": 0.224e-2, "v_over_a0": -0.0471e-2, "gamma_over_a0": 0.105e-2},
    "INTC": {"a_over_a0": 0.946e-2, "v_over_a0": -0.702e-2, "gamma_over_a0": 0.00311e-2},
    "NVDA": {"a_over_a0": 1.72e-2, "v_over_a0": 9.45e-2, "gamma_over_a0": 5.17e-2},
    "PANW": {"a_over_a0": 0.0294e-2, "v_over_a0": -0.108e-2, "gamma_over_a0": 0.140e-2},
    "TEAM": {"a_over_a0": 1.39e-2, "v_over_a0": 2.61e-2, "gamma_over_a0": 1.42e-2},
}

# Published riskless fit on 3-month yields; beta0 was pinned to the
# valuation-date asset value per ticker and is not part of the record.
REFERENCE_RISKLESS = {"rho": -0.00139, "r": 0.00140, "adj_r2": 0.418}

# Published fraction of nonnegative standardized index changes.
REFERENCE_UP_PROB = 0.524

# Grid layout of the published option-price exhibits; the strike grids came
# from vendor option quotes and are not redistributable.
REFERENCE_SURFACE_LAYOUT = {
    "maturities": (2, 7, 11, 17, 21, 26),
    "plotted_maturities": (17, 21, 26),
    "gamma_esg_levels": (-1.0, 0.0, 1.0),
}


def reference_fiscal_esg_table(ticker: str) -> FiscalEsgTable:
    """Fiscal-year ESG marks for one reference ticker."""
    scores = REFERENCE_FISCAL_ESG[ticker]
    return FiscalEsgTable(entries=tuple(zip(_FISCAL_YEARS, scores)))


def reference_calibration_reports() -> list[dict]:
    """Fixture records shaped like locally generated calibration reports.

    The normalized block carries the published values verbatim; `mu` and
    `sigma` have no published normalization (they multiply the price level
    and are already scale-free), so they repeat the raw values.
    """
    reports = []
    for ticker in REFERENCE_TICKERS:
        fit = REFERENCE_RISKY_FITS[ticker]
        normalized = REFERENCE_NORMALIZED_FITS[ticker]
        implied_a0 = fit["a"] / normalized["a_over_a0"]
        reports.append(
            {
                "ticker": ticker,
                "gamma_esg": 0.0,
                "a": fit["a"],
                "mu": fit["mu"],
                "v": fit["v"],
                "sigma": fit["sigma"],
                "gamma": fit["gamma"],
                "delta": 1.0,
                "adj_r2": fit["adj_r2"],
                "a0": implied_a0,
                "normalized": {
                    "a_over_a0": normalized["a_over_a0"],
                    "mu": fit["mu"],
                    "v_over_a0": normalized["v_over_a0"],
                    "sigma": fit["sigma"],
                    "gamma_over_a0": normalized["gamma_over_a0"],
                },
            }
        )
    return reports


def reference_riskless_report() -> dict:
    """Fixture record shaped like a locally generated riskless report;
    beta0 is null because the published record does not include it."""
    return {
        "rho": REFERENCE_RISKLESS["rho"],
        "r": REFERENCE_RISKLESS["r"],
        "beta0": None,
        "adj_r2": REFERENCE_RISKLESS["adj_r2"],
    }


def save_reference_fixtures(directory) -> dict[str, Path]:
    """Serialize every fixture to JSON under `directory`; returns the paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    payload = {
        "calibration_reference.json": reference_calibration_reports(),
        "riskless_reference.json": reference_riskless_report(),
        "esg_reference.json": {
            ticker: dict(zip((str(y) for y in _FISCAL_YEARS), scores))
            for ticker, scores in REFERENCE_FISCAL_ESG.items()
        },
        "surface_layout_reference.json": {
            "maturities": list(REFERENCE_SURFACE_LAYOUT["maturities"]),
            "plotted_maturities": list(REFERENCE_SURFACE_LAYOUT["plotted_maturities"]),
            "gamma_esg_levels": list(REFERENCE_SURFACE_LAYOUT["gamma_esg_levels"]),
            "up_prob": REFERENCE_UP_PROB,
        },
    }
    paths = {}
    for name, data in payload.items():
        path = directory / name
        with open(path, "w") as fh:
            json.dump(data, fh, indent=2, sort_keys=True)
            fh.write("\n")
        paths[name] = path
    return paths


def load_reference_fixtures(directory) -> dict[str, object]:
    """Reload fixtures written by save_reference_fixtures, keyed by filename."""
    directory = Path(directory)
    out = {}
    for name in (
        "calibration_reference.json",
        "riskless_reference.json",
        "esg_reference.json",
        "surface_layout_reference.json",
    ):
        with open(directory / name) as fh:
            out[name] = json.load(fh)
    return out
