"""European option pricing on the non-recombining binary tree.

The tree never recombines because the conditional volatility depends on the
cumulative path value X, so a maturity of T days has 2^T leaves. Pricing
therefore streams: a post-order depth-first walk holds one frame per depth
(at most T + 1 live frames) and discards each subtree as soon as its value is
folded into the parent. All strikes at one maturity ride the same walk as a
payoff vector, which amortizes the exponential traversal across a strike grid.

Two engines produce identical arithmetic: a compiled walker
(`_treecore.walk_tree`) for the named payoffs, and a pure-Python reference
walker built from the public `branch` / `risk_neutral_prob` operations that
also supports arbitrary terminal-payoff callables. `enumerate_tree` stores
every level explicitly and exists purely as a cross-check oracle for small
maturities.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import norm

from . import _treecore
from .calibrate import RisklessParams, RiskyParams
from .csyip import FilterSpec, h_eval
from .errors import (
    ConfigError,
    DegenerateDenominator,
    LengthMismatch,
    MaturityTooLargeForEnumeration,
    NegativeConditionalVolatility,
    QOutOfRange,
)

__all__ = [
    "OptionSpec",
    "PricingConfig",
    "NodeState",
    "HedgeRatios",
    "PriceSurface",
    "EnumeratedTree",
    "TraversalStats",
    "WORKER_COUNT_ENV_VAR",
    "riskless_price_path",
    "branch",
    "risk_neutral_prob",
    "price_european",
    "enumerate_tree",
    "price_surface",
    "strike_shift_diagnostic",
    "bsm_closed_form",
    "bachelier_closed_form",
    "export_price_surface",
]

_NAMED_PAYOFFS = ("call", "put", "asset", "unit", "forward")
_STRIKE_PAYOFFS = ("call", "put", "forward")
_PAYOFF_CODES = {
    "call": _treecore.PAYOFF_CALL,
    "put": _treecore.PAYOFF_PUT,
    "asset": _treecore.PAYOFF_ASSET,
    "unit": _treecore.PAYOFF_UNIT,
    "forward": _treecore.PAYOFF_FORWARD,
}
_FILTER_CODES = {
    "power": _treecore.FILTER_POWER,
    "gaussian": _treecore.FILTER_GAUSSIAN,
    "linear": _treecore.FILTER_LINEAR,
    "unit": _treecore.FILTER_UNIT,
}

ENUMERATION_MAX_MATURITY = 16
WORKER_COUNT_ENV_VAR = "BBSM_WORKERS"

# Slack for the surface monotonicity validation; pure float noise at double
# precision, far below any economically meaningful violation.
_MONOTONE_SLACK = 1e-9


def _require_finite_float(value, name: str) -> float:
    out = float(value)
    if not math.isfinite(out):
        raise ConfigError(f"{name} must be finite, got {value!r}")
    return out


@dataclass(frozen=True)
class OptionSpec:
    """A European option: terminal payoff, strike, maturity in trading days.

    `payoff` is one of the named kinds ("call", "put", "asset", "unit",
    "forward") or a callable g(a) -> float applied at the leaves. "asset",
    "unit" and "forward" exist mainly for invariant checks: they price A_T,
    1 and A_T - K without the kink of an option. `gamma_esg` tags which
    ESG-adjusted series the inputs came from; it does not alter the tree.
    """

    payoff: str | Callable[[float], float] = "call"
    strike: float | None = None
    maturity: int = 1
    gamma_esg: float = 0.0

    def __post_init__(self) -> None:
        if callable(self.payoff):
            pass
        elif isinstance(self.payoff, str):
            if self.payoff not in _NAMED_PAYOFFS:
                raise ConfigError(
                    f"unknown payoff {self.payoff!r}; expected one of "
                    f"{', '.join(_NAMED_PAYOFFS)} or a callable"
                )
        else:
            raise ConfigError(f"payoff must be a name or callable, got {type(self.payoff).__name__}")
        if not isinstance(self.maturity, (int, np.integer)) or isinstance(self.maturity, bool):
            raise ConfigError(f"maturity must be an integer number of steps, got {self.maturity!r}")
        if self.maturity < 0:
            raise ConfigError(f"maturity must be nonnegative, got {self.maturity}")
        object.__setattr__(self, "maturity", int(self.maturity))
        if self.strike is not None:
            object.__setattr__(self, "strike", _require_finite_float(self.strike, "strike"))
        object.__setattr__(self, "gamma_esg", _require_finite_float(self.gamma_esg, "gamma_esg"))

    def needs_strike(self) -> bool:
        return isinstance(self.payoff, str) and self.payoff in _STRIKE_PAYOFFS


@dataclass(frozen=True)
class PricingConfig:
    """Tree-construction inputs shared by every node.

    `beta_path` is the deterministic riskless price sequence; it must cover
    every level the walk visits (at least maturity + 1 entries). `x_init`
    seeds the cumulative path value at the valuation date, normally the final
    historical value from the calibration path so the filter h continues the
    observed trajectory.
    """

    delta: float
    up_prob: float
    x_init: float
    filter: FilterSpec
    a0: float
    beta_path: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "delta", _require_finite_float(self.delta, "delta"))
        if self.delta <= 0.0:
            raise ConfigError(f"delta must be positive, got {self.delta}")
        object.__setattr__(self, "up_prob", _require_finite_float(self.up_prob, "up_prob"))
        if not 0.0 < self.up_prob < 1.0:
            raise ConfigError(f"up_prob must lie in (0, 1), got {self.up_prob}")
        object.__setattr__(self, "x_init", _require_finite_float(self.x_init, "x_init"))
        object.__setattr__(self, "a0", _require_finite_float(self.a0, "a0"))
        if not isinstance(self.filter, FilterSpec):
            raise ConfigError(f"filter must be a FilterSpec, got {type(self.filter).__name__}")
        beta = np.asarray(self.beta_path, dtype=np.float64)
        if beta.ndim != 1 or beta.size == 0:
            raise ConfigError("beta_path must be a nonempty 1-D sequence")
        if not np.all(np.isfinite(beta)):
            raise ConfigError("beta_path contains non-finite values")
        if np.any(beta == 0.0):
            k = int(np.flatnonzero(beta == 0.0)[0])
            raise ConfigError(f"beta_path is zero at step {k}; riskless prices must stay nonzero")
        beta = beta.copy()
        beta.setflags(write=False)
        object.__setattr__(self, "beta_path", beta)


@dataclass(frozen=True)
class NodeState:
    """One tree node: depth k, asset value a, cumulative path value x."""

    k: int
    a: float
    x: float


@dataclass(frozen=True)
class HedgeRatios:
    """Self-financing replication at a node: asset_units of the risky asset
    plus riskless_units of the riskless asset reproduce both children."""

    asset_units: float
    riskless_units: float


@dataclass
class TraversalStats:
    """Instrumentation filled in by pricing calls when passed in.

    `peak_frames` counts the maximum simultaneously live node frames; the
    depth-first walk guarantees peak_frames <= maturity + 1 when
    split_depth = 0. Split runs additionally hold one boundary state per
    subtree, which is reported honestly rather than hidden.
    """

    nodes_visited: int = 0
    peak_frames: int = 0


@dataclass(frozen=True)
class PriceSurface:
    """Grid of option prices, one row per (strike, maturity) pair."""

    payoff: str
    gamma_esg: float
    rows: tuple[tuple[float, int, float], ...]

    def __post_init__(self) -> None:
        if self.payoff not in _STRIKE_PAYOFFS:
            raise ConfigError(
                f"surface payoff must be one of {', '.join(_STRIKE_PAYOFFS)}, got {self.payoff!r}"
            )
        rows = tuple((float(k), int(t), float(p)) for k, t, p in self.rows)
        for strike, maturity, price in rows:
            if not math.isfinite(price):
                raise ConfigError(f"non-finite price at strike {strike}, maturity {maturity}")
        object.__setattr__(self, "rows", rows)
        self._check_monotone()

    def _check_monotone(self) -> None:
        # Calls and forwards cheapen as the strike rises, puts do the reverse.
        sign = -1.0 if self.payoff in ("call", "forward") else 1.0
        for maturity in self.maturities():
            pairs = sorted((k, p) for k, t, p in self.rows if t == maturity)
            for (k_lo, p_lo), (k_hi, p_hi) in zip(pairs, pairs[1:]):
                slack = _MONOTONE_SLACK * max(1.0, abs(p_lo), abs(p_hi))
                if sign * (p_hi - p_lo) < -slack:
                    raise ConfigError(
                        f"{self.payoff} prices not monotone in strike at maturity "
                        f"{maturity}: {p_lo} at K={k_lo} vs {p_hi} at K={k_hi}"
                    )

    def strikes(self) -> tuple[float, ...]:
        return tuple(sorted({k for k, _, _ in self.rows}))

    def maturities(self) -> tuple[int, ...]:
        return tuple(sorted({t for _, t, _ in self.rows}))

    def price(self, strike: float, maturity: int) -> float:
        for k, t, p in self.rows:
            if t == maturity and k == strike:
                return p
        raise KeyError(f"no row at strike {strike}, maturity {maturity}")


@dataclass(frozen=True)
class EnumeratedTree:
    """Fully materialized tree, level by level; cross-check oracle only.

    Children of node i at level k sit at 2i (up) and 2i + 1 (down) in level
    k + 1. Storage is O(2^T), which is why `enumerate_tree` refuses
    maturities above ENUMERATION_MAX_MATURITY.
    """

    asset_values: tuple[np.ndarray, ...]
    path_values: tuple[np.ndarray, ...]
    up_probs: tuple[np.ndarray, ...]
    option_values: tuple[np.ndarray, ...]

    @property
    def price(self) -> float:
        return float(self.option_values[0][0])


def riskless_price_path(riskless: RisklessParams, steps: int, delta: float = 1.0, beta0: float | None = None) -> np.ndarray:
    """Deterministic riskless price sequence of length steps + 1.

    Iterates beta_{k+1} = beta_k + (rho * beta_0 + r * beta_k) * delta from
    beta_0 (defaults to the fitted beta0). This is the sequence PricingConfig
    expects; pinning beta_0 to the valuation-date asset value keeps the
    asset/riskless ratio in the risk-neutral drift well scaled.
    """
    if steps < 0:
        raise ConfigError(f"steps must be nonnegative, got {steps}")
    if delta <= 0.0 or not math.isfinite(delta):
        raise ConfigError(f"delta must be positive and finite, got {delta}")
    start = riskless.beta0 if beta0 is None else float(beta0)
    if start == 0.0 or not math.isfinite(start):
        raise ConfigError(f"beta0 must be nonzero and finite, got {start}")
    path = np.empty(steps + 1)
    path[0] = start
    for k in range(steps):
        path[k + 1] = path[k] + (riskless.rho * start + riskless.r * path[k]) * delta
    return path


def _sign_jumps(p: float) -> tuple[float, float]:
    return math.sqrt((1.0 - p) / p), math.sqrt(p / (1.0 - p))


def _drift_and_vol(node: NodeState, params: RiskyParams, config: PricingConfig) -> tuple[float, float]:
    phi = params.a + params.mu * node.a
    eta = params.v + params.sigma * node.a + params.gamma * h_eval(node.x, config.filter)
    return phi, eta


def branch(node: NodeState, params: RiskyParams, config: PricingConfig) -> tuple[NodeState, NodeState, float]:
    """Expand a node into its (up, down) children; also return the node's
    conditional volatility eta = v + sigma*a + gamma*h(x).

    eta < 0 is a model-validity failure and aborts with the node coordinates;
    clamping it would silently corrupt the risk-neutral probability.
    """
    phi, eta = _drift_and_vol(node, params, config)
    if eta < 0.0:
        raise NegativeConditionalVolatility(
            f"conditional volatility {eta:.6g} < 0 at step {node.k} "
            f"(a={node.a:.6g}, x={node.x:.6g})"
        )
    p = config.up_prob
    xi_up, xi_dn = _sign_jumps(p)
    sqrt_dt = math.sqrt(config.delta)
    up = NodeState(node.k + 1, node.a + phi * config.delta + eta * sqrt_dt * xi_up, node.x + sqrt_dt * xi_up)
    down = NodeState(node.k + 1, node.a + phi * config.delta - eta * sqrt_dt * xi_dn, node.x - sqrt_dt * xi_dn)
    return up, down, eta


def risk_neutral_prob(
    node: NodeState,
    eta: float,
    params: RiskyParams,
    riskless: RisklessParams,
    config: PricingConfig,
) -> float:
    """Conditional probability of the up branch under the pricing measure.

    q = p - (phi - a*chi/beta) / eta * sqrt(p(1-p)delta) with
    chi = rho*beta_0 + r*beta_k. The same q also solves the one-step
    martingale condition q*up_move + (1-q)*down_move = a*chi*delta/beta; both
    evaluations are computed and must agree to 1e-12, which guards against
    regressions in either algebraic form.
    """
    if eta < 0.0:
        raise NegativeConditionalVolatility(
            f"conditional volatility {eta:.6g} < 0 at step {node.k} "
            f"(a={node.a:.6g}, x={node.x:.6g})"
        )
    if eta == 0.0:
        raise DegenerateDenominator(
            f"conditional volatility is zero at step {node.k} (a={node.a:.6g}, "
            f"x={node.x:.6g}); the branch is deterministic and q is undefined"
        )
    beta = config.beta_path
    if node.k >= beta.size:
        raise LengthMismatch(
            f"beta_path has {beta.size} entries but the walk reached step {node.k}"
        )
    beta_k = beta[node.k]
    chi = riskless.rho * beta[0] + riskless.r * beta_k
    p = config.up_prob
    phi = params.a + params.mu * node.a
    spread = math.sqrt(p * (1.0 - p) * config.delta)
    q = p - (phi - node.a * (chi / beta_k)) / eta * spread

    # Independent evaluation through the jump-size form of the martingale
    # condition; algebraically identical, different rounding path.
    xi_up, xi_dn = _sign_jumps(p)
    sqrt_dt = math.sqrt(config.delta)
    q_jump = (eta * xi_dn + (node.a * chi / beta_k - phi) * sqrt_dt) / (eta * (xi_up + xi_dn))

    if not 0.0 < q < 1.0:
        raise QOutOfRange(
            f"risk-neutral probability {q:.6g} outside (0, 1) at step {node.k} "
            f"(a={node.a:.6g}, x={node.x:.6g}); reduce the time step or revisit the fitted drift"
        )
    if abs(q - q_jump) > 1e-12 * max(1.0, abs(q)):
        raise ArithmeticError(
            f"risk-neutral probability forms disagree at step {node.k}: {q!r} vs {q_jump!r}"
        )
    return q


def _leaf_fn(option: OptionSpec, strikes: np.ndarray) -> Callable[[float], np.ndarray]:
    if callable(option.payoff):
        g = option.payoff
        return lambda a: np.array([float(g(a))])
    kind = _PAYOFF_CODES[option.payoff]
    if kind == _treecore.PAYOFF_CALL:
        return lambda a: np.maximum(a - strikes, 0.0)
    if kind == _treecore.PAYOFF_PUT:
        return lambda a: np.maximum(strikes - a, 0.0)
    if kind == _treecore.PAYOFF_ASSET:
        return lambda a: np.full(strikes.shape, a)
    if kind == _treecore.PAYOFF_UNIT:
        return lambda a: np.ones(strikes.shape)
    return lambda a: a - strikes


def _level_terms(riskless: RisklessParams, config: PricingConfig, depth: int, offset: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Per-level riskless terms for levels offset .. offset + depth - 1:
    chi_k/beta_k (risk-neutral drift) and beta_k/beta_{k+1} (discount)."""
    beta = config.beta_path
    levels = beta[offset : offset + depth]
    chi = riskless.rho * beta[0] + riskless.r * levels
    drift_over_beta = chi / levels
    discount = levels / beta[offset + 1 : offset + depth + 1]
    return np.ascontiguousarray(drift_over_beta), np.ascontiguousarray(discount)


def _walk_python(
    depth: int,
    root: NodeState,
    params: RiskyParams,
    riskless: RisklessParams,
    config: PricingConfig,
    leaf_values: Callable[[float], np.ndarray],
) -> tuple[np.ndarray, np.ndarray | None, np.ndarray | None, int, int]:
    """Reference post-order walk; mirrors _treecore.walk_tree op for op."""
    if depth == 0:
        return leaf_values(root.a), None, None, 1, 1
    beta = config.beta_path
    stack: list[list] = []
    nodes = 0
    peak = 1
    cur = root
    root_up = root_dn = None
    while True:
        while len(stack) < depth:
            nodes += 1
            up, down, eta = branch(cur, params, config)
            q = risk_neutral_prob(cur, eta, params, riskless, config)
            stack.append([q, down, None])
            cur = up
            if len(stack) + 1 > peak:
                peak = len(stack) + 1
        nodes += 1
        val = leaf_values(cur.a)
        while True:
            if not stack:
                return val, root_up, root_dn, nodes, peak
            frame = stack[-1]
            if frame[2] is None:
                frame[2] = val
                cur = frame[1]
                break
            level = root.k + len(stack) - 1
            disc = beta[level] / beta[level + 1]
            if len(stack) == 1:
                root_up = frame[2]
                root_dn = val
            val = disc * (frame[0] * frame[2] + (1.0 - frame[0]) * val)
            stack.pop()


def _walk_compiled(
    depth: int,
    root: NodeState,
    params: RiskyParams,
    riskless: RisklessParams,
    config: PricingConfig,
    payoff_kind: int,
    strikes: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, int, int]:
    drift_over_beta, discount = _level_terms(riskless, config, depth, offset=root.k)
    val, root_up, root_dn, status, err_k, err_a, err_x, err_q, nodes, peak = _treecore.walk_tree(
        depth,
        root.a,
        root.x,
        params.a,
        params.mu,
        params.v,
        params.sigma,
        params.gamma,
        config.delta,
        config.up_prob,
        _FILTER_CODES[config.filter.kind],
        config.filter.d,
        drift_over_beta,
        discount,
        payoff_kind,
        strikes,
    )
    if status == _treecore.STATUS_NEGATIVE_ETA:
        raise NegativeConditionalVolatility(
            f"conditional volatility < 0 at step {root.k + err_k} "
            f"(a={err_a:.6g}, x={err_x:.6g})"
        )
    if status == _treecore.STATUS_Q_OUT_OF_RANGE:
        raise QOutOfRange(
            f"risk-neutral probability {err_q:.6g} outside (0, 1) at step {root.k + err_k} "
            f"(a={err_a:.6g}, x={err_x:.6g}); reduce the time step or revisit the fitted drift"
        )
    return val, root_up, root_dn, int(nodes), int(peak)


def _resolve_workers(workers: int | None) -> int:
    if workers is not None:
        count = int(workers)
    else:
        raw = os.environ.get(WORKER_COUNT_ENV_VAR, "1")
        try:
            count = int(raw)
        except ValueError as exc:
            raise ConfigError(f"{WORKER_COUNT_ENV_VAR} must be an integer, got {raw!r}") from exc
    if count < 1:
        raise ConfigError(f"worker count must be at least 1, got {count}")
    return count


def _subtree_worker(args) -> tuple[np.ndarray, int, int]:
    (use_compiled, depth, root_k, root_a, root_x, params, riskless, config, option, payoff_kind, strikes) = args
    root = NodeState(root_k, root_a, root_x)
    if use_compiled:
        val, _, _, nodes, peak = _walk_compiled(depth, root, params, riskless, config, payoff_kind, strikes)
    else:
        val, _, _, nodes, peak = _walk_python(depth, root, params, riskless, config, _leaf_fn(option, strikes))
    return val, nodes, peak


def _collect_prefix(
    node: NodeState,
    split: int,
    params: RiskyParams,
    riskless: RisklessParams,
    config: PricingConfig,
    tasks: list[NodeState],
):
    """Expand the top `split` levels eagerly, recording (q, discount) per
    internal node and the 2^split boundary states in up-first order."""
    if node.k == split:
        tasks.append(node)
        return ("leaf", len(tasks) - 1)
    up, down, eta = branch(node, params, config)
    q = risk_neutral_prob(node, eta, params, riskless, config)
    disc = config.beta_path[node.k] / config.beta_path[node.k + 1]
    return ("node", q, disc, _collect_prefix(up, split, params, riskless, config, tasks),
            _collect_prefix(down, split, params, riskless, config, tasks))


def _fold_prefix(tree, values: list[np.ndarray]) -> np.ndarray:
    if tree[0] == "leaf":
        return values[tree[1]]
    _, q, disc, up_tree, dn_tree = tree
    up = _fold_prefix(up_tree, values)
    dn = _fold_prefix(dn_tree, values)
    return disc * (q * up + (1.0 - q) * dn)


def price_european(
    option: OptionSpec,
    params: RiskyParams,
    riskless: RisklessParams,
    config: PricingConfig,
    *,
    engine: str = "auto",
    split_depth: int = 0,
    workers: int | None = None,
    stats: TraversalStats | None = None,
) -> tuple[float, HedgeRatios | None]:
    """Price a European option by backward induction over the full tree.

    Returns (price, root hedge); the hedge is None for maturity 0, where the
    payoff is evaluated directly at a0. With split_depth > 0 the top levels
    are expanded eagerly and the 2^split_depth subtrees evaluated
    independently (optionally across `workers` processes, default from the
    BBSM_WORKERS environment variable); the combine applies the identical
    discount arithmetic in a fixed order, so results do not depend on the
    split depth or worker count. The <= maturity + 1 live-frame guarantee
    applies to split_depth = 0.
    """
    if engine not in ("auto", "compiled", "python"):
        raise ConfigError(f"engine must be auto, compiled or python, got {engine!r}")
    if split_depth < 0:
        raise ConfigError(f"split_depth must be nonnegative, got {split_depth}")
    maturity = option.maturity
    if config.beta_path.size < maturity + 1:
        raise LengthMismatch(
            f"beta_path has {config.beta_path.size} entries; maturity {maturity} needs at least {maturity + 1}"
        )
    if option.needs_strike() and option.strike is None:
        raise ConfigError(f"payoff {option.payoff!r} requires a strike")

    custom = callable(option.payoff)
    if engine == "compiled" and custom:
        raise ConfigError("compiled engine supports only the named payoffs; use engine='python'")
    use_compiled = (engine == "compiled") or (engine == "auto" and not custom and _treecore.HAVE_NUMBA)

    strikes = np.array([option.strike if option.strike is not None else 0.0])
    payoff_kind = _PAYOFF_CODES[option.payoff] if not custom else -1
    root = NodeState(0, config.a0, config.x_init)

    if maturity == 0:
        value = _leaf_fn(option, strikes)(root.a)
        if stats is not None:
            stats.nodes_visited = 1
            stats.peak_frames = 1
        return float(value[0]), None

    split = min(split_depth, maturity)
    if split == 0:
        if use_compiled:
            val, root_up, root_dn, nodes, peak = _walk_compiled(
                maturity, root, params, riskless, config, payoff_kind, strikes
            )
        else:
            val, root_up, root_dn, nodes, peak = _walk_python(
                maturity, root, params, riskless, config, _leaf_fn(option, strikes)
            )
    else:
        tasks: list[NodeState] = []
        prefix = _collect_prefix(root, split, params, riskless, config, tasks)
        job_args = [
            (use_compiled, maturity - split, t.k, t.a, t.x, params, riskless, config, option, payoff_kind, strikes)
            for t in tasks
        ]
        worker_count = _resolve_workers(workers)
        if worker_count > 1 and len(job_args) > 1:
            with ProcessPoolExecutor(max_workers=min(worker_count, len(job_args))) as pool:
                results = list(pool.map(_subtree_worker, job_args))
        else:
            results = [_subtree_worker(a) for a in job_args]
        values = [r[0] for r in results]
        nodes = (2**split - 1) + sum(r[1] for r in results)
        peak = 2**split + max(r[2] for r in results)
        _, q0, disc0, up_tree, dn_tree = prefix
        root_up = _fold_prefix(up_tree, values)
        root_dn = _fold_prefix(dn_tree, values)
        val = disc0 * (q0 * root_up + (1.0 - q0) * root_dn)

    if stats is not None:
        stats.nodes_visited = nodes
        stats.peak_frames = peak

    up_node, dn_node, _ = branch(root, params, config)
    spread = up_node.a - dn_node.a
    if spread == 0.0:
        hedge = None
    else:
        asset_units = float((root_up[0] - root_dn[0]) / spread)
        riskless_units = float((root_up[0] - asset_units * up_node.a) / config.beta_path[1])
        hedge = HedgeRatios(asset_units, riskless_units)
    return float(val[0]), hedge


def enumerate_tree(
    option: OptionSpec,
    params: RiskyParams,
    riskless: RisklessParams,
    config: PricingConfig,
) -> tuple[EnumeratedTree, float]:
    """Materialize every level of the tree and price by array recursion.

    Storage grows as 2^maturity, so this is capped at
    ENUMERATION_MAX_MATURITY levels; it exists as an independent oracle for
    the streaming walker, not as a production path.
    """
    maturity = option.maturity
    if maturity > ENUMERATION_MAX_MATURITY:
        raise MaturityTooLargeForEnumeration(
            f"maturity {maturity} exceeds the enumeration cap of {ENUMERATION_MAX_MATURITY} "
            f"(the tree would hold 2**{maturity} leaves)"
        )
    if config.beta_path.size < maturity + 1:
        raise LengthMismatch(
            f"beta_path has {config.beta_path.size} entries; maturity {maturity} needs at least {maturity + 1}"
        )
    if option.needs_strike() and option.strike is None:
        raise ConfigError(f"payoff {option.payoff!r} requires a strike")

    p = config.up_prob
    delta = config.delta
    sqrt_dt = math.sqrt(delta)
    xi_up, xi_dn = _sign_jumps(p)
    spread = math.sqrt(p * (1.0 - p) * delta)
    drift_over_beta, discount = _level_terms(riskless, config, maturity) if maturity else (np.empty(0), np.empty(0))

    asset_levels = [np.array([config.a0])]
    path_levels = [np.array([config.x_init])]
    q_levels: list[np.ndarray] = []
    for k in range(maturity):
        a = asset_levels[k]
        x = path_levels[k]
        phi = params.a + params.mu * a
        eta = params.v + params.sigma * a + params.gamma * h_eval(x, config.filter)
        bad = np.flatnonzero(eta < 0.0)
        if bad.size:
            i = int(bad[0])
            raise NegativeConditionalVolatility(
                f"conditional volatility {eta[i]:.6g} < 0 at step {k} "
                f"(a={a[i]:.6g}, x={x[i]:.6g})"
            )
        with np.errstate(divide="ignore", invalid="ignore"):
            q = p - (phi - a * drift_over_beta[k]) / eta * spread
        bad = np.flatnonzero(~((q > 0.0) & (q < 1.0)))
        if bad.size:
            i = int(bad[0])
            raise QOutOfRange(
                f"risk-neutral probability {q[i]:.6g} outside (0, 1) at step {k} "
                f"(a={a[i]:.6g}, x={x[i]:.6g}); reduce the time step or revisit the fitted drift"
            )
        q_levels.append(q)
        new_a = np.empty(2 * a.size)
        new_x = np.empty(2 * a.size)
        new_a[0::2] = a + phi * delta + eta * sqrt_dt * xi_up
        new_a[1::2] = a + phi * delta - eta * sqrt_dt * xi_dn
        new_x[0::2] = x + sqrt_dt * xi_up
        new_x[1::2] = x - sqrt_dt * xi_dn
        asset_levels.append(new_a)
        path_levels.append(new_x)

    leaves = asset_levels[maturity]
    if callable(option.payoff):
        values = np.array([float(option.payoff(a)) for a in leaves])
    else:
        strike = option.strike if option.strike is not None else 0.0
        kind = _PAYOFF_CODES[option.payoff]
        if kind == _treecore.PAYOFF_CALL:
            values = np.maximum(leaves - strike, 0.0)
        elif kind == _treecore.PAYOFF_PUT:
            values = np.maximum(strike - leaves, 0.0)
        elif kind == _treecore.PAYOFF_ASSET:
            values = leaves.copy()
        elif kind == _treecore.PAYOFF_UNIT:
            values = np.ones_like(leaves)
        else:
            values = leaves - strike

    value_levels = [values]
    for k in range(maturity - 1, -1, -1):
        child = value_levels[0]
        q = q_levels[k]
        value_levels.insert(0, discount[k] * (q * child[0::2] + (1.0 - q) * child[1::2]))

    def _freeze(arrays: list[np.ndarray]) -> tuple[np.ndarray, ...]:
        out = []
        for arr in arrays:
            arr = np.asarray(arr, dtype=np.float64)
            arr.setflags(write=False)
            out.append(arr)
        return tuple(out)

    tree = EnumeratedTree(
        asset_values=_freeze(asset_levels),
        path_values=_freeze(path_levels),
        up_probs=_freeze(q_levels),
        option_values=_freeze(value_levels),
    )
    return tree, tree.price


def price_surface(
    strikes: Sequence[float],
    maturities: Sequence[int],
    template: OptionSpec,
    params: RiskyParams,
    riskless: RisklessParams,
    config: PricingConfig,
    *,
    engine: str = "auto",
    split_depth: int = 0,
    workers: int | None = None,
    stats: TraversalStats | None = None,
) -> PriceSurface:
    """Price a strike x maturity grid; all strikes at one maturity share a
    single traversal by carrying a payoff vector through the walk."""
    if callable(template.payoff) or template.payoff not in _STRIKE_PAYOFFS:
        raise ConfigError(
            f"surface template payoff must be one of {', '.join(_STRIKE_PAYOFFS)}"
        )
    strike_arr = np.ascontiguousarray(strikes, dtype=np.float64)
    if strike_arr.ndim != 1:
        raise ConfigError("strikes must be a 1-D sequence")
    if strike_arr.size and not np.all(np.isfinite(strike_arr)):
        raise ConfigError("strikes must be finite")
    maturity_list = sorted({int(t) for t in maturities})
    if any(t < 0 for t in maturity_list):
        raise ConfigError("maturities must be nonnegative")
    rows: list[tuple[float, int, float]] = []
    if strike_arr.size:
        total_nodes = 0
        peak = 0
        for maturity in maturity_list:
            if config.beta_path.size < maturity + 1:
                raise LengthMismatch(
                    f"beta_path has {config.beta_path.size} entries; maturity {maturity} "
                    f"needs at least {maturity + 1}"
                )
            values, _, sub_nodes, sub_peak = _surface_one_maturity(
                strike_arr, maturity, template, params, riskless, config,
                engine=engine, split_depth=split_depth, workers=workers,
            )
            total_nodes += sub_nodes
            peak = max(peak, sub_peak)
            for strike, value in zip(strike_arr, values):
                rows.append((float(strike), maturity, float(value)))
        if stats is not None:
            stats.nodes_visited = total_nodes
            stats.peak_frames = peak
    elif stats is not None:
        stats.nodes_visited = 0
        stats.peak_frames = 0
    rows.sort(key=lambda r: (r[1], r[0]))
    return PriceSurface(payoff=template.payoff, gamma_esg=template.gamma_esg, rows=tuple(rows))


def _surface_one_maturity(
    strike_arr: np.ndarray,
    maturity: int,
    template: OptionSpec,
    params: RiskyParams,
    riskless: RisklessParams,
    config: PricingConfig,
    *,
    engine: str,
    split_depth: int,
    workers: int | None,
) -> tuple[np.ndarray, None, int, int]:
    payoff_kind = _PAYOFF_CODES[template.payoff]
    root = NodeState(0, config.a0, config.x_init)
    if maturity == 0:
        # Maturity 0 evaluates the payoff directly at a0.
        if template.payoff == "call":
            return np.maximum(config.a0 - strike_arr, 0.0), None, 1, 1
        if template.payoff == "put":
            return np.maximum(strike_arr - config.a0, 0.0), None, 1, 1
        return config.a0 - strike_arr, None, 1, 1
    use_compiled = engine != "python" and _treecore.HAVE_NUMBA
    split = min(split_depth, maturity)
    if split == 0:
        if use_compiled:
            val, _, _, nodes, peak = _walk_compiled(maturity, root, params, riskless, config, payoff_kind, strike_arr)
        else:
            spec = OptionSpec(payoff=template.payoff, strike=None, maturity=maturity, gamma_esg=template.gamma_esg)
            val, _, _, nodes, peak = _walk_python(maturity, root, params, riskless, config, _leaf_fn(spec, strike_arr))
        return val, None, nodes, peak
    spec = OptionSpec(payoff=template.payoff, strike=None, maturity=maturity, gamma_esg=template.gamma_esg)
    tasks: list[NodeState] = []
    prefix = _collect_prefix(root, split, params, riskless, config, tasks)
    job_args = [
        (use_compiled, maturity - split, t.k, t.a, t.x, params, riskless, config, spec, payoff_kind, strike_arr)
        for t in tasks
    ]
    worker_count = _resolve_workers(workers)
    if worker_count > 1 and len(job_args) > 1:
        with ProcessPoolExecutor(max_workers=min(worker_count, len(job_args))) as pool:
            results = list(pool.map(_subtree_worker, job_args))
    else:
        results = [_subtree_worker(a) for a in job_args]
    values = [r[0] for r in results]
    nodes = (2**split - 1) + sum(r[1] for r in results)
    peak = 2**split + max(r[2] for r in results)
    val = _fold_prefix(prefix, values)
    return val, None, nodes, peak


def strike_shift_diagnostic(
    surface_minus: PriceSurface,
    surface_base: PriceSurface,
    surface_plus: PriceSurface,
    maturity: int,
) -> list[dict]:
    """Report, at matched price levels, how far the strike must move on the
    tilted surfaces to recover the base surface's price.

    For each base price level C reachable on all three surfaces this returns
    the inverse-interpolated strikes K(C) and the absolute shifts
    |K_minus(C) - K_base(C)| and |K_plus(C) - K_base(C)|. The near-equality
    of the two shifts is an empirical observation, so this function reports
    and asserts nothing.
    """
    curves = []
    for surface in (surface_minus, surface_base, surface_plus):
        pairs = sorted((k, p) for k, t, p in surface.rows if t == maturity)
        if len(pairs) < 2:
            raise ConfigError(
                f"need at least two strikes at maturity {maturity} on every surface"
            )
        strikes = np.array([k for k, _ in pairs])
        prices = np.array([p for _, p in pairs])
        if surface.payoff in ("call", "forward"):
            # Prices fall with strike; reverse so np.interp sees ascending x.
            curves.append((prices[::-1], strikes[::-1]))
        else:
            curves.append((prices, strikes))
    low = max(c[0][0] for c in curves)
    high = min(c[0][-1] for c in curves)
    if not low < high:
        return []
    base_prices = curves[1][0]
    levels = [float(c) for c in base_prices if low <= c <= high]
    if not levels:
        levels = [0.5 * (low + high)]
    out = []
    for level in levels:
        k_minus = float(np.interp(level, curves[0][0], curves[0][1]))
        k_base = float(np.interp(level, curves[1][0], curves[1][1]))
        k_plus = float(np.interp(level, curves[2][0], curves[2][1]))
        out.append(
            {
                "price_level": level,
                "strike_minus": k_minus,
                "strike_base": k_base,
                "strike_plus": k_plus,
                "shift_minus": abs(k_minus - k_base),
                "shift_plus": abs(k_plus - k_base),
            }
        )
    return out


def bsm_closed_form(
    a0: float,
    strike: float,
    maturity: int,
    sigma: float,
    r: float = 0.0,
    delta: float = 1.0,
) -> float:
    """Lognormal (Black-Scholes) call value with per-step volatility sigma
    and per-step rate r, aggregated over maturity * delta."""
    if a0 <= 0.0:
        raise ConfigError(f"a0 must be positive for the lognormal model, got {a0}")
    if sigma <= 0.0:
        raise ConfigError(f"sigma must be positive, got {sigma}")
    tau = maturity * delta
    if tau < 0.0:
        raise ConfigError(f"maturity must be nonnegative, got {maturity}")
    if strike <= 0.0:
        # A call struck at or below zero is always exercised.
        return a0 - strike * math.exp(-r * tau)
    if tau == 0.0:
        return max(a0 - strike, 0.0)
    total_vol = sigma * math.sqrt(tau)
    d1 = (math.log(a0 / strike) + (r + 0.5 * sigma * sigma) * tau) / total_vol
    d2 = d1 - total_vol
    return a0 * norm.cdf(d1) - strike * math.exp(-r * tau) * norm.cdf(d2)


def bachelier_closed_form(
    a0: float,
    strike: float,
    maturity: int,
    v: float,
    delta: float = 1.0,
) -> float:
    """Arithmetic (normal-model, zero-rate) call value with per-step
    volatility v: (a0-K)*Phi(d) + v*sqrt(tau)*phi(d), d = (a0-K)/(v*sqrt(tau))."""
    if v < 0.0:
        raise ConfigError(f"v must be nonnegative, got {v}")
    tau = maturity * delta
    if tau < 0.0:
        raise ConfigError(f"maturity must be nonnegative, got {maturity}")
    scale = v * math.sqrt(tau)
    if scale == 0.0:
        return max(a0 - strike, 0.0)
    d = (a0 - strike) / scale
    return (a0 - strike) * norm.cdf(d) + scale * norm.pdf(d)


def export_price_surface(surface: PriceSurface, dest, ticker: str = "", preamble: Sequence[str] = ()) -> None:
    """Write a surface as CSV with columns ticker, gamma_esg, strike,
    maturity, price; optional '#' preamble lines carry provenance."""
    import csv

    with open(dest, "w", newline="") as fh:
        for line in preamble:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["ticker", "gamma_esg", "strike", "maturity", "price"])
        for strike, maturity, price in surface.rows:
            writer.writerow([ticker, repr(surface.gamma_esg), repr(strike), maturity, repr(price)])
