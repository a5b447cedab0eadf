"""Compiled depth-first walker for the non-recombining pricing tree.

This mirrors the pure-Python reference walker in `pricer` step for step: one
explicit frame per depth (never more than maturity + 1 live frames), up child
first, values combined on the way back up. It exists because a surface run
touches ~2^27 node visits, which is far outside interpreter speed. Keep the
arithmetic in exact lockstep with `pricer.branch` / `pricer.risk_neutral_prob`
so compiled and reference walks agree to the last few ulps.

Status codes instead of exceptions: compiled code cannot format messages, so
failures return (code, node coordinates) and the wrapper raises.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap

__all__ = [
    "HAVE_NUMBA",
    "PAYOFF_CALL",
    "PAYOFF_PUT",
    "PAYOFF_ASSET",
    "PAYOFF_UNIT",
    "PAYOFF_FORWARD",
    "FILTER_POWER",
    "FILTER_GAUSSIAN",
    "FILTER_LINEAR",
    "FILTER_UNIT",
    "STATUS_OK",
    "STATUS_NEGATIVE_ETA",
    "STATUS_Q_OUT_OF_RANGE",
    "walk_tree",
    "warm_up",
]

PAYOFF_CALL = 0
PAYOFF_PUT = 1
PAYOFF_ASSET = 2
PAYOFF_UNIT = 3
PAYOFF_FORWARD = 4

FILTER_POWER = 0
FILTER_GAUSSIAN = 1
FILTER_LINEAR = 2
FILTER_UNIT = 3

STATUS_OK = 0
STATUS_NEGATIVE_ETA = 1
STATUS_Q_OUT_OF_RANGE = 2


@njit(cache=True)
def _h(kind: int, d: float, x: float) -> float:
    r = x / d
    if kind == FILTER_POWER:
        s = abs(r) ** 0.6
        return -s if r < 0.0 else s
    if kind == FILTER_GAUSSIAN:
        return math.exp(-0.5 * r * r) / (d * math.sqrt(2.0 * math.pi))
    if kind == FILTER_LINEAR:
        return r
    return 1.0


@njit(cache=True)
def walk_tree(
    depth: int,
    a_root: float,
    x_root: float,
    coef_a: float,
    coef_mu: float,
    coef_v: float,
    coef_sigma: float,
    coef_gamma: float,
    delta: float,
    p: float,
    h_kind: int,
    h_scale: float,
    drift_over_beta: np.ndarray,
    discount: np.ndarray,
    payoff_kind: int,
    strikes: np.ndarray,
):
    """Post-order walk of the subtree of `depth` levels below (a_root, x_root).

    drift_over_beta[j] and discount[j] are the per-level riskless terms
    chi_j/beta_j and beta_j/beta_{j+1} for the j-th level below the root.
    Returns (values, up_child_values, down_child_values, status, err_level,
    err_a, err_x, err_q, nodes_visited, peak_frames); values has one entry
    per strike.
    """
    n_strikes = strikes.shape[0]
    val = np.zeros(n_strikes)
    root_up = np.zeros(n_strikes)
    root_dn = np.zeros(n_strikes)

    if depth == 0:
        for i in range(n_strikes):
            val[i] = _terminal(payoff_kind, a_root, strikes[i])
        return val, root_up, root_dn, STATUS_OK, -1, 0.0, 0.0, 0.0, 1, 1

    sqrt_dt = math.sqrt(delta)
    xi_up = math.sqrt((1.0 - p) / p)
    xi_dn = math.sqrt(p / (1.0 - p))
    spread = math.sqrt(p * (1.0 - p) * delta)

    frame_q = np.empty(depth)
    frame_dn_a = np.empty(depth)
    frame_dn_x = np.empty(depth)
    frame_has_up = np.zeros(depth, np.bool_)
    frame_up_val = np.empty((depth, n_strikes))

    nodes = 0
    peak = 1
    sp = 0
    cur_a = a_root
    cur_x = x_root

    while True:
        while sp < depth:
            nodes += 1
            phi = coef_a + coef_mu * cur_a
            eta = coef_v + coef_sigma * cur_a + coef_gamma * _h(h_kind, h_scale, cur_x)
            if eta < 0.0:
                return val, root_up, root_dn, STATUS_NEGATIVE_ETA, sp, cur_a, cur_x, 0.0, nodes, peak
            q = p - (phi - cur_a * drift_over_beta[sp]) / eta * spread
            if not (0.0 < q < 1.0):
                return val, root_up, root_dn, STATUS_Q_OUT_OF_RANGE, sp, cur_a, cur_x, q, nodes, peak
            frame_q[sp] = q
            frame_dn_a[sp] = cur_a + phi * delta - eta * sqrt_dt * xi_dn
            frame_dn_x[sp] = cur_x - sqrt_dt * xi_dn
            frame_has_up[sp] = False
            cur_a = cur_a + phi * delta + eta * sqrt_dt * xi_up
            cur_x = cur_x + sqrt_dt * xi_up
            sp += 1
            if sp + 1 > peak:
                peak = sp + 1

        nodes += 1
        for i in range(n_strikes):
            val[i] = _terminal(payoff_kind, cur_a, strikes[i])

        finished = False
        while True:
            if sp == 0:
                finished = True
                break
            j = sp - 1
            if not frame_has_up[j]:
                for i in range(n_strikes):
                    frame_up_val[j, i] = val[i]
                frame_has_up[j] = True
                cur_a = frame_dn_a[j]
                cur_x = frame_dn_x[j]
                break
            q = frame_q[j]
            disc = discount[j]
            if j == 0:
                for i in range(n_strikes):
                    root_up[i] = frame_up_val[0, i]
                    root_dn[i] = val[i]
            for i in range(n_strikes):
                val[i] = disc * (q * frame_up_val[j, i] + (1.0 - q) * val[i])
            sp = j
        if finished:
            break

    return val, root_up, root_dn, STATUS_OK, -1, 0.0, 0.0, 0.0, nodes, peak


@njit(cache=True)
def _terminal(payoff_kind: int, a: float, strike: float) -> float:
    if payoff_kind == PAYOFF_CALL:
        gain = a - strike
        return gain if gain > 0.0 else 0.0
    if payoff_kind == PAYOFF_PUT:
        gain = strike - a
        return gain if gain > 0.0 else 0.0
    if payoff_kind == PAYOFF_ASSET:
        return a
    if payoff_kind == PAYOFF_UNIT:
        return 1.0
    return a - strike


def warm_up() -> None:
    """Trigger JIT compilation once so timed sections measure the walk only."""
    walk_tree(
        1,
        100.0,
        0.0,
        0.0,
        0.0,
        1.0,
        0.0,
        0.0,
        1.0,
        0.5,
        FILTER_POWER,
        10.0,
        np.zeros(1),
        np.ones(1),
        PAYOFF_CALL,
        np.array([100.0]),
    )
