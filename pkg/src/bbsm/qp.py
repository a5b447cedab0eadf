"""Inequality-constrained linear least squares via primal active-set QP.

Solves min ||X b - y||^2 subject to G b >= lb. The fit this serves has five
coefficients and one constraint row per observation, so the problem is tiny
in variables and large in constraints; an active-set method starting from a
feasible point converges in a handful of pivots.

Each pivot solves the equality-constrained subproblem in null-space form:
a QR factorization of the working-set rows yields an orthonormal basis Z of
their null space, and the step solves the reduced system (Z'HZ)u = -Z'grad.
Multipliers come from the least-squares system Gw' lam = grad, whose
minimum-norm solution stays finite even when working rows are nearly
parallel (adjacent observations often produce almost-identical constraint
rows, so this is the common case, not a corner).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import Infeasible

__all__ = ["ActiveSetResult", "constrained_lstsq"]

_FEAS_TOL = 1e-10
_STEP_TOL = 1e-12
_MULT_TOL = 1e-10
_RANK_TOL = 1e-12


@dataclass(frozen=True)
class ActiveSetResult:
    coef: np.ndarray
    active: tuple[int, ...]
    multipliers: np.ndarray
    kkt_residual: float
    iterations: int


def _null_space_step(H: np.ndarray, grad: np.ndarray, Gw: np.ndarray) -> np.ndarray:
    """Minimizer step of the quadratic restricted to {p : Gw p = 0}."""
    nvar = H.shape[0]
    if Gw.shape[0] == 0:
        return np.linalg.solve(H, -grad)
    q, r = np.linalg.qr(Gw.T, mode="complete")
    diag = np.abs(np.diagonal(r))
    scale = float(diag.max()) if diag.size else 0.0
    rank = int(np.sum(diag > _RANK_TOL * max(scale, 1.0)))
    z = q[:, rank:]
    if z.shape[1] == 0:
        return np.zeros(nvar)
    u = np.linalg.solve(z.T @ H @ z, -(z.T @ grad))
    return z @ u


def constrained_lstsq(
    design: np.ndarray,
    target: np.ndarray,
    ineq: np.ndarray | None = None,
    lower: np.ndarray | None = None,
    start: np.ndarray | None = None,
    max_iter: int = 200,
) -> ActiveSetResult:
    """Minimize ||design @ b - target||^2 subject to ineq @ b >= lower.

    `start` must be feasible and defaults to the origin (valid whenever
    lower <= 0, which holds for the homogeneous volatility constraints this
    solver exists for). The unconstrained optimum is tried first and returned
    untouched when it is already feasible.
    """
    X = np.asarray(design, dtype=np.float64)
    y = np.asarray(target, dtype=np.float64)
    H = X.T @ X
    c = -X.T @ y
    nvar = X.shape[1]

    if ineq is None or ineq.shape[0] == 0:
        coef = np.linalg.solve(H, -c)
        resid = float(np.max(np.abs(H @ coef + c)))
        return ActiveSetResult(coef, (), np.empty(0), resid, 0)

    G = np.asarray(ineq, dtype=np.float64)
    lb = np.zeros(G.shape[0]) if lower is None else np.asarray(lower, dtype=np.float64)

    # Shortcut: accept the unconstrained solution if feasible.
    free = np.linalg.solve(H, -c)
    slack = G @ free - lb
    if np.min(slack) >= -_FEAS_TOL:
        resid = float(np.max(np.abs(H @ free + c)))
        return ActiveSetResult(free, (), np.zeros(0), resid, 0)

    x = np.zeros(nvar) if start is None else np.asarray(start, dtype=np.float64).copy()
    slack = G @ x - lb
    if np.min(slack) < -_FEAS_TOL:
        raise Infeasible(
            f"starting point violates a constraint by {-float(np.min(slack)):.3e}; "
            "the homogeneous constraints admit the origin, so this is a solver-usage bug"
        )
    working: list[int] = []

    for iteration in range(1, max_iter + 1):
        grad = H @ x + c
        Gw = G[working]
        p = _null_space_step(H, grad, Gw)

        if np.max(np.abs(p)) <= _STEP_TOL * max(1.0, float(np.max(np.abs(x)))):
            # Stationary on the working set; check dual feasibility. The
            # minimum-norm multipliers solve Gw' lam = grad.
            if not working:
                lam = np.zeros(0)
            else:
                lam = np.linalg.lstsq(Gw.T, grad, rcond=None)[0]
            tol = _MULT_TOL * max(1.0, float(np.max(np.abs(grad))))
            if lam.size == 0 or float(np.min(lam)) >= -tol:
                kkt_res = _kkt_residual(H, c, G, lb, x, working, lam)
                return ActiveSetResult(x, tuple(working), lam, kkt_res, iteration)
            working.pop(int(np.argmin(lam)))
            continue

        # Longest step along p that stays feasible; constraints with
        # g.p >= 0 can never block. A blocking constraint already at its
        # bound pivots in with a zero-length step.
        gp = G @ p
        blocked = np.nonzero(gp < -_STEP_TOL)[0]
        alpha, hit = 1.0, -1
        for i in blocked:
            if i in working:
                continue
            ratio = (lb[i] - (G[i] @ x)) / gp[i]
            if ratio < alpha:
                alpha, hit = max(ratio, 0.0), int(i)
        x = x + alpha * p
        if hit >= 0:
            working.append(hit)

    raise RuntimeError(f"active-set solver did not converge within {max_iter} iterations")


def _kkt_residual(H, c, G, lb, x, working, lam) -> float:
    """Max-norm of the stationarity and feasibility residuals."""
    grad = H @ x + c
    if working:
        grad = grad - G[working].T @ lam
    violation = np.maximum(lb - G @ x, 0.0)
    return float(max(np.max(np.abs(grad)), np.max(violation)))
