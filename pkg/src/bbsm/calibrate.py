"""Parameter fits for the risky and riskless dynamics, plus fit diagnostics.

The risky fit regresses one-step price changes on
(1, A_k, xi_{k+1}, A_k*xi_{k+1}, h(X_k)*xi_{k+1}) under the volatility
constraint v~ + sigma~*A_k + gamma~*h(X_k) >= 0 per observation, then
rescales the tilde coefficients (a*delta, mu*delta, v*sqrt(delta),
sigma*sqrt(delta), gamma*sqrt(delta)) back to per-day units. The riskless
fit is ordinary least squares of the scaled increments of a treasury-driven
account on (beta0, beta_k); using beta0 itself as the intercept column makes
the fitted (rho, r) invariant to rescaling of beta0.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .csyip import ChangeSeries, CsyPath
from .errors import (
    DegenerateDenominator,
    Infeasible,
    LengthMismatch,
    NonpositiveA0,
    NonpositiveBandwidth,
    NonpositiveVolatility,
    RankDeficient,
    TooFewObservations,
    TooShort,
)
from .ingest import PriceSeries, RateSeries
from .qp import constrained_lstsq

__all__ = [
    "RiskyParams",
    "RisklessParams",
    "NormalizedRiskyParams",
    "DensityPair",
    "RiskPremiumWarning",
    "fit_risky_params",
    "build_beta_series",
    "fit_riskless_params",
    "reparameterize",
    "adjusted_r2",
    "adjusted_r2_from_r2",
    "market_price_of_risk",
    "model_change_series",
    "silverman_bandwidth",
    "kde_compare",
    "export_density_pair",
    "calibration_report",
    "riskless_report",
]

FEASIBILITY_SLACK = 1e-9


class RiskPremiumWarning(UserWarning):
    """The fitted market price of risk is not strictly positive."""


@dataclass(frozen=True)
class RiskyParams:
    """Per-day coefficients of the risky dynamics.

    Drift a + mu*A, diffusion v + sigma*A + gamma*h(X); delta is the step
    the fit used, a0 the first in-sample asset value (the normalization
    scale), stderrs the per-day standard errors of (a, mu, v, sigma, gamma)
    from the unconstrained information matrix (diagnostic only; honest when
    no constraint is active).
    """

    a: float
    mu: float
    v: float
    sigma: float
    gamma: float
    delta: float
    adj_r2: float
    a0: float
    stderrs: tuple[float, float, float, float, float] | None = None

    def tilde(self) -> np.ndarray:
        """Regression-scale coefficients (a*d, mu*d, v*sqrt(d), sigma*sqrt(d), gamma*sqrt(d))."""
        d, sd = self.delta, math.sqrt(self.delta)
        return np.array([self.a * d, self.mu * d, self.v * sd, self.sigma * sd, self.gamma * sd])


@dataclass(frozen=True)
class RisklessParams:
    """Per-day riskless drift coefficients: account drift = rho*beta0 + r*beta."""

    rho: float
    r: float
    beta0: float
    adj_r2: float


@dataclass(frozen=True)
class NormalizedRiskyParams:
    """Scale-free report: a, v, gamma divided by the initial asset value."""

    a_over_a0: float
    mu: float
    v_over_a0: float
    sigma: float
    gamma_over_a0: float
    a0: float


@dataclass(frozen=True)
class DensityPair:
    """Two kernel density estimates on one shared grid.

    Each density is renormalized to trapezoid-integrate to 1 on the grid
    (the grid stops 3 bandwidths past the pooled data range, so an edge
    kernel would otherwise leave ~1e-3 of its mass outside).
    """

    grid: np.ndarray
    empirical_pdf: np.ndarray
    model_pdf: np.ndarray
    bandwidth: float

    def __post_init__(self):
        for name in ("grid", "empirical_pdf", "model_pdf"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for name in ("empirical_pdf", "model_pdf"):
            pdf = getattr(self, name)
            if np.any(pdf < 0):
                raise ValueError(f"{name} has negative entries")
            total = float(np.trapezoid(pdf, self.grid))
            if abs(total - 1.0) > 1e-6:
                raise ValueError(f"{name} integrates to {total}, not 1")


def _change_values(changes) -> np.ndarray:
    if isinstance(changes, ChangeSeries):
        return changes.change
    return np.asarray(changes, dtype=np.float64)


def _risky_design(lagged_prices: np.ndarray, path: CsyPath, n: int):
    """Design matrix, target-free: columns (1, A, xi, A*xi, h*xi) and the
    constraint rows (0, 0, 1, A, h) deduplicated on rounded (A, h)."""
    a = lagged_prices[:n]
    xi = path.xi[:n]
    h = path.h_of_x[:n]
    X = np.column_stack([np.ones(n), a, xi, a * xi, h * xi])

    pairs = np.unique(np.column_stack([np.round(a, 12), np.round(h, 12)]), axis=0)
    G = np.column_stack(
        [np.zeros(len(pairs)), np.zeros(len(pairs)), np.ones(len(pairs)), pairs[:, 0], pairs[:, 1]]
    )
    return X, G


def fit_risky_params(
    changes,
    lagged_prices: np.ndarray,
    path: CsyPath,
    delta: float = 1.0,
    min_observations: int = 50,
) -> RiskyParams:
    """Constrained least-squares fit of the five risky coefficients.

    One observation per step: the change over step k+1 against the state at
    step k. Each observation also contributes the inequality
    v~ + sigma~*A_k + gamma~*h(X_k) >= 0 (conditional volatility cannot be
    negative where it was observed); rows with duplicate (A_k, h(X_k)) are
    collapsed before solving.
    """
    y = _change_values(changes)
    lagged = np.asarray(lagged_prices, dtype=np.float64)
    n = y.shape[0]
    if n < min_observations:
        raise TooFewObservations(f"{n} observations < floor of {min_observations}")
    if lagged.shape[0] < n or path.xi.shape[0] < n or path.h_of_x.shape[0] < n:
        raise LengthMismatch("changes, lagged prices, and path must cover the same steps")

    X, G = _risky_design(lagged, path, n)
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise RankDeficient(
            "risky design matrix is rank-deficient (constant prices or degenerate path)"
        )

    result = constrained_lstsq(X, y, G)
    if result.kkt_residual > 1e-8 * max(1.0, float(np.max(np.abs(X.T @ y)))):
        raise Infeasible(
            f"constrained solver stopped at KKT residual {result.kkt_residual:.3e}"
        )
    coef = result.coef

    vol = coef[2] + coef[3] * lagged[:n] + coef[4] * path.h_of_x[:n]
    worst = float(np.min(vol))
    if worst < -FEASIBILITY_SLACK:
        raise Infeasible(
            f"fitted coefficients violate the volatility constraint by {-worst:.3e}"
        )

    resid = y - X @ coef
    r2_adj = adjusted_r2(resid, y, k=4)

    dof = n - X.shape[1]
    scale = np.array([delta, delta, math.sqrt(delta), math.sqrt(delta), math.sqrt(delta)])
    stderrs = None
    if dof > 0:
        sigma2 = float(resid @ resid) / dof
        cov = sigma2 * np.linalg.inv(X.T @ X)
        stderrs = tuple(float(s) for s in np.sqrt(np.diag(cov)) / scale)

    per_day = coef / scale
    return RiskyParams(
        a=float(per_day[0]),
        mu=float(per_day[1]),
        v=float(per_day[2]),
        sigma=float(per_day[3]),
        gamma=float(per_day[4]),
        delta=delta,
        adj_r2=r2_adj,
        a0=float(lagged[0]),
        stderrs=stderrs,
    )


def model_change_series(
    params: RiskyParams, lagged_prices: np.ndarray, path: CsyPath
) -> np.ndarray:
    """Fitted one-step changes implied by the coefficients along the path."""
    lagged = np.asarray(lagged_prices, dtype=np.float64)
    n = lagged.shape[0]
    if path.xi.shape[0] < n or path.h_of_x.shape[0] < n:
        raise LengthMismatch("path is shorter than the lagged price series")
    X, _ = _risky_design(lagged, path, n)
    return X @ params.tilde()


def build_beta_series(rates: RateSeries, beta0: float, delta: float = 1.0) -> PriceSeries:
    """Riskless account compounded from annualized treasury yields.

    beta[k+1] = (1 + (yield[k]/252)*delta) * beta[k]; the /252 turns an
    annualized simple yield into a per-trading-day rate. Output shares the
    rate calendar (the last yield goes unused).
    """
    if beta0 == 0:
        raise ValueError("beta0 must be nonzero")
    daily = rates.annualized_yield / 252.0
    values = np.empty(len(rates))
    values[0] = beta0
    for k in range(len(rates) - 1):
        values[k + 1] = values[k] * (1.0 + daily[k] * delta)
    return PriceSeries(rates.calendar, values)


def fit_riskless_params(beta: PriceSeries, beta0: float, delta: float = 1.0) -> RisklessParams:
    """OLS of (beta[k+1] - beta[k])/delta on (beta0, beta[k]).

    The intercept column is beta0 itself, so the fitted rho absorbs the
    1/beta0 scale and (rho, r) are invariant to rescaling the account.
    """
    b = beta.values
    if b.shape[0] < 3:
        raise TooShort("need at least 3 account values to fit riskless parameters")
    y = np.diff(b) / delta
    X = np.column_stack([np.full(b.shape[0] - 1, float(beta0)), b[:-1]])
    if np.linalg.matrix_rank(X) < 2:
        raise RankDeficient("riskless design is collinear (constant account values)")
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    return RisklessParams(
        rho=float(coef[0]),
        r=float(coef[1]),
        beta0=float(beta0),
        adj_r2=adjusted_r2(resid, y, k=1),
    )


def reparameterize(params: RiskyParams, a0: float | None = None) -> NormalizedRiskyParams:
    """Divide the initial-value-scaling coefficients (a, v, gamma) by a0."""
    a0 = params.a0 if a0 is None else a0
    if not a0 > 0:
        raise NonpositiveA0(f"normalization requires a0 > 0, got {a0}")
    return NormalizedRiskyParams(
        a_over_a0=params.a / a0,
        mu=params.mu,
        v_over_a0=params.v / a0,
        sigma=params.sigma,
        gamma_over_a0=params.gamma / a0,
        a0=a0,
    )


def adjusted_r2_from_r2(r2: float, n: int, k: int) -> float:
    """1 - (1 - R^2)(n - 1)/(n - k - 1)."""
    if n <= k + 1:
        raise DegenerateDenominator(f"need n > k + 1, got n = {n}, k = {k}")
    return 1.0 - (1.0 - r2) * (n - 1) / (n - k - 1)


def adjusted_r2(residuals: np.ndarray, dependent, k: int) -> float:
    """Adjusted R-squared of a fit, from its residuals and dependent series.

    R^2 is computed against the centered dependent variable; k counts the
    non-intercept regressors.
    """
    resid = np.asarray(residuals, dtype=np.float64)
    y = _change_values(dependent)
    if resid.shape != y.shape:
        raise LengthMismatch("residuals and dependent series differ in length")
    n = y.shape[0]
    centered = y - y.mean()
    sst = float(centered @ centered)
    if sst == 0.0:
        raise DegenerateDenominator("dependent variable has zero variance")
    r2 = 1.0 - float(resid @ resid) / sst
    return adjusted_r2_from_r2(r2, n, k)


def market_price_of_risk(phi: float, chi: float, psi: float) -> float:
    """(phi - chi)/psi; warns when nonpositive (no-arbitrage wants it > 0)."""
    if not psi > 0:
        raise NonpositiveVolatility(f"market price of risk needs psi > 0, got {psi}")
    theta = (phi - chi) / psi
    if theta <= 0:
        warnings.warn(
            f"market price of risk {theta} is not strictly positive",
            RiskPremiumWarning,
            stacklevel=2,
        )
    return theta


# --------------------------------------------------------------------------
# Density diagnostics
# --------------------------------------------------------------------------

def silverman_bandwidth(data) -> float:
    """Rule-of-thumb bandwidth 0.9*min(std, IQR/1.34)*n^(-1/5)."""
    x = _change_values(data)
    if x.shape[0] < 2:
        raise ValueError("need at least 2 points for a rule-of-thumb bandwidth")
    std = float(x.std(ddof=1))
    q75, q25 = np.percentile(x, [75.0, 25.0])
    iqr = float(q75 - q25)
    spread = min(std, iqr / 1.34) if iqr > 0 else std
    if spread == 0.0:
        raise NonpositiveBandwidth("data has zero spread; no usable bandwidth")
    return 0.9 * spread * x.shape[0] ** -0.2


def kde_compare(empirical, model, bandwidth: float | None = None, grid_size: int = 512) -> DensityPair:
    """Gaussian kernel density estimates of both series on one shared grid.

    The grid spans the pooled range of both series plus 3 bandwidths on each
    side; each density is renormalized to integrate to 1 on that grid.
    bandwidth defaults to twice the Silverman rule on the empirical series
    (deliberate over-smoothing: the raw two-valued change distribution is
    bimodal and the comparison targets the envelope, not the atoms).
    """
    e = _change_values(empirical)
    m = _change_values(model)
    if e.size == 0 or m.size == 0:
        raise ValueError("both series must be non-empty")
    if bandwidth is None:
        bandwidth = 2.0 * silverman_bandwidth(e)
    if not bandwidth > 0:
        raise NonpositiveBandwidth(f"bandwidth must be > 0, got {bandwidth}")

    lo = min(e.min(), m.min()) - 3.0 * bandwidth
    hi = max(e.max(), m.max()) + 3.0 * bandwidth
    grid = np.linspace(lo, hi, grid_size)

    def density(sample: np.ndarray) -> np.ndarray:
        u = (grid[:, None] - sample[None, :]) / bandwidth
        pdf = np.exp(-0.5 * u * u).sum(axis=1) / (sample.size * bandwidth * math.sqrt(2.0 * math.pi))
        return pdf / np.trapezoid(pdf, grid)

    return DensityPair(grid, density(e), density(m), float(bandwidth))


def export_density_pair(pair: DensityPair, dest: str | Path, preamble: tuple[str, ...] = ()) -> None:
    """Write (grid, empirical_pdf, model_pdf) rows as plot-ready CSV."""
    with open(dest, "w", newline="") as fh:
        for line in preamble:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(("grid", "empirical_pdf", "model_pdf", "bandwidth"))
        bw = repr(float(pair.bandwidth))
        for g, ep, mp in zip(pair.grid, pair.empirical_pdf, pair.model_pdf):
            writer.writerow((repr(float(g)), repr(float(ep)), repr(float(mp)), bw))


# --------------------------------------------------------------------------
# Report schemas
# --------------------------------------------------------------------------

def calibration_report(ticker: str, gamma_esg: float, params: RiskyParams) -> dict:
    """JSON-ready calibration record for one (ticker, gamma_esg) fit."""
    normalized = reparameterize(params)
    report = {
        "ticker": ticker,
        "gamma_esg": gamma_esg,
        "a": params.a,
        "mu": params.mu,
        "v": params.v,
        "sigma": params.sigma,
        "gamma": params.gamma,
        "delta": params.delta,
        "adj_r2": params.adj_r2,
        "a0": params.a0,
        "normalized": {
            "a_over_a0": normalized.a_over_a0,
            "mu": normalized.mu,
            "v_over_a0": normalized.v_over_a0,
            "sigma": normalized.sigma,
            "gamma_over_a0": normalized.gamma_over_a0,
        },
    }
    if params.stderrs is not None:
        report["stderrs"] = {
            name: err for name, err in zip(("a", "mu", "v", "sigma", "gamma"), params.stderrs)
        }
    return report


def riskless_report(params: RisklessParams) -> dict:
    return {
        "rho": params.rho,
        "r": params.r,
        "beta0": params.beta0,
        "adj_r2": params.adj_r2,
    }
