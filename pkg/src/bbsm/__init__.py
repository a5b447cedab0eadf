"""Path-dependent binomial pricing of ESG-adjusted equity options.

The package covers the full pipeline: CSV/manifest ingestion on trading
calendars (`ingest`), fiscal-year ESG expansion and price adjustment
(`esg`), the scaled sign-walk construction from a market index (`csyip`),
constrained least-squares calibration of the price-change dynamics
(`calibrate`), and backward-induction pricing on the non-recombining tree
with closed-form oracles (`pricer`). `bbsm.cli` wires everything into
reproducible batch runs.
"""

from .errors import (
    AllZeroWeights,
    BbsmError,
    CalendarBeforeFirstFY,
    CalendarMismatch,
    ConfigError,
    DegenerateDenominator,
    DegenerateProbability,
    DivisionByZero,
    DuplicateYear,
    EmptyInput,
    EmptyIntersection,
    EmptyTable,
    Infeasible,
    LengthMismatch,
    MaturityTooLargeForEnumeration,
    NegativeConditionalVolatility,
    NegativeVolatility,
    NonpositiveA0,
    NonpositiveBandwidth,
    NonpositiveVolatility,
    ParseError,
    ProbabilityOutOfRange,
    QOutOfRange,
    RankDeficient,
    TooFewObservations,
    TooShort,
    ZeroVariance,
)
from .ingest import (
    FiscalEsgTable,
    ManifestEntry,
    PriceSeries,
    RateSeries,
    TradingCalendar,
    align_calendars,
    load_esg_fiscal_scores,
    load_manifest,
    load_price_series,
    load_treasury_rates,
    save_esg_fiscal_scores,
    save_price_series,
    save_treasury_rates,
    slice_series,
)
from .esg import (
    EsgSeries,
    RelEsgSeries,
    SmootherConfig,
    esg_adjusted_prices,
    index_esg,
    index_esg_dated,
    interpolate_esg_daily,
    load_esg_series,
    relative_esg,
    save_esg_series,
)
from .csyip import (
    ChangeSeries,
    CsyPath,
    FilterSpec,
    MarketIndexParams,
    bernoulli_sign_values,
    bernoulli_signs,
    build_csy_path,
    cumulative_path,
    estimate_up_probability,
    export_csy_path,
    h_eval,
    integral_path,
    price_changes,
    simulate_market_index,
    simulate_stock_prices,
    standardize,
)
from .calibrate import (
    DensityPair,
    NormalizedRiskyParams,
    RiskPremiumWarning,
    RisklessParams,
    RiskyParams,
    adjusted_r2,
    adjusted_r2_from_r2,
    build_beta_series,
    calibration_report,
    export_density_pair,
    fit_riskless_params,
    fit_risky_params,
    kde_compare,
    market_price_of_risk,
    model_change_series,
    reparameterize,
    riskless_report,
    silverman_bandwidth,
)
from .pricer import (
    EnumeratedTree,
    HedgeRatios,
    NodeState,
    OptionSpec,
    PriceSurface,
    PricingConfig,
    TraversalStats,
    WORKER_COUNT_ENV_VAR,
    bachelier_closed_form,
    branch,
    bsm_closed_form,
    enumerate_tree,
    export_price_surface,
    price_european,
    price_surface,
    riskless_price_path,
    risk_neutral_prob,
    strike_shift_diagnostic,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
