"""Box-constrained convex quadratic programming.

Minimizes ``q(x) = 1/2 x'Hx + c'x`` subject to ``l <= x <= u`` for a
symmetric positive-semidefinite H (dense or sparse). The solver is a
monotone projected spectral-gradient method (Barzilai-Borwein step with an
exact line search along the projected segment) accelerated by a periodic
subspace-Newton step on the currently free variables. Every iterate is
feasible, the objective is non-increasing, and the run is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

__all__ = ["BoxQp", "QpSolution", "QpSolverError", "solve_box_qp"]


@dataclass(frozen=True)
class BoxQp:
    """A box-constrained QP ``min 1/2 x'Hx + c'x, l <= x <= u``.

    ``hessian`` may be a dense ndarray or a scipy sparse matrix; it must be
    symmetric positive semidefinite. Bounds may include equal pairs
    (pinned variables) but must satisfy l <= u componentwise.
    """

    hessian: object
    linear: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.linear, dtype=np.float64)
        lo = np.asarray(self.lower, dtype=np.float64)
        hi = np.asarray(self.upper, dtype=np.float64)
        n = c.shape[0]
        if self.hessian.shape != (n, n):
            raise ValueError(f"hessian shape {self.hessian.shape} does not "
                             f"match linear term of size {n}")
        if lo.shape != (n,) or hi.shape != (n,):
            raise ValueError("bounds must match the problem dimension")
        if np.any(lo > hi):
            raise ValueError("lower bound exceeds upper bound")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("bounds must be finite")
        object.__setattr__(self, "linear", c)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def n(self) -> int:
        return self.linear.shape[0]

    def objective(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=np.float64)
        return float(0.5 * (x @ (self.hessian @ x)) + self.linear @ x)


@dataclass(frozen=True)
class QpSolution:
    """Solution of a box-constrained QP with KKT certificates.

    ``multiplier_lower``/``multiplier_upper`` are the nonnegative
    multipliers of the bound constraints; they are supported on the
    respective active sets, so complementarity holds exactly.
    ``kkt_residual`` is the max-norm of the projected-gradient residual
    ``x - clip(x - grad, l, u)``.
    """

    x: np.ndarray
    multiplier_lower: np.ndarray
    multiplier_upper: np.ndarray
    kkt_residual: float
    iterations: int
    objective: float


class QpSolverError(RuntimeError):
    """Raised when the iteration cap is hit or the QP is not convex.

    Carries the best iterate found so far in ``best``, when available.
    """

    def __init__(self, message: str, best: QpSolution | None = None) -> None:
        super().__init__(message)
        self.best = best


# ---------------------------------------------------------------------------
# Solver
# ---------------------------------------------------------------------------

_NEWTON_PERIOD = 8
_GRAD_REFRESH = 64


def _check_symmetry(H) -> None:
    if sparse.issparse(H):
        diff = abs(H - H.T)
        err = diff.max() if diff.nnz else 0.0
        scale = abs(H).max() if H.nnz else 0.0
    else:
        H = np.asarray(H)
        err = np.max(np.abs(H - H.T)) if H.size else 0.0
        scale = np.max(np.abs(H)) if H.size else 0.0
    if err > 1e-12 * max(1.0, scale):
        raise ValueError("hessian is not symmetric")


def _row_sum_bound(H) -> float:
    """Upper bound for the spectral radius (max absolute row sum)."""
    if sparse.issparse(H):
        if H.nnz == 0:
            return 0.0
        return float(np.max(np.abs(H).sum(axis=1)))
    H = np.asarray(H)
    if H.size == 0:
        return 0.0
    return float(np.max(np.abs(H).sum(axis=1)))


def _newton_direction(H, g: np.ndarray, free: np.ndarray) -> np.ndarray | None:
    """Direction solving the free-subspace Newton system, zero elsewhere."""
    nf = int(np.count_nonzero(free))
    if nf == 0:
        return None
    d = np.zeros_like(g)
    idx = np.flatnonzero(free)
    if sparse.issparse(H):
        Hff = H[idx][:, idx].tocsc()
        shift = 1e-14 * (1.0 + abs(Hff).max())
        try:
            lu = splu(Hff + shift * sparse.identity(nf, format="csc"))
            d[idx] = lu.solve(-g[idx])
        except RuntimeError:
            return None
    else:
        Hff = np.asarray(H)[np.ix_(idx, idx)]
        shift = 1e-14 * (1.0 + np.max(np.abs(Hff)))
        try:
            d[idx] = np.linalg.solve(Hff + shift * np.eye(nf), -g[idx])
        except np.linalg.LinAlgError:
            return None
    if not np.all(np.isfinite(d)):
        return None
    return d


def solve_box_qp(qp: BoxQp, x0: np.ndarray | None = None,
                 tol: float = 1e-9, max_iter: int = 10000) -> QpSolution:
    """Solve a box-constrained convex QP to a projected-gradient tolerance.

    Parameters
    ----------
    qp : BoxQp
    x0 : ndarray, optional
        Starting point; projected into the box. Defaults to the zero
        vector (projected).
    tol : float
        Convergence when ``||x - clip(x - grad, l, u)||_inf <=
        tol * max(1, ||c||_inf)``.
    max_iter : int
        Iteration cap; exceeding it raises QpSolverError with the best
        iterate attached.

    Returns
    -------
    QpSolution
        Feasible x with exact complementarity of the reported multipliers
        and ``objective(x) <= objective(x0)``.
    """
    H, c, lo, hi = qp.hessian, qp.linear, qp.lower, qp.upper
    _check_symmetry(H)
    n = qp.n

    if x0 is None:
        x = np.clip(np.zeros(n), lo, hi)
    else:
        x = np.clip(np.asarray(x0, dtype=np.float64), lo, hi)

    g = H @ x + c
    scale = max(1.0, float(np.max(np.abs(c))) if n else 1.0)

    L = _row_sum_bound(H)
    box_diam = float(np.max(hi - lo)) if n else 1.0
    if L > 0.0:
        alpha0 = 1.0 / L
    else:
        gmax = float(np.max(np.abs(g))) if n else 0.0
        alpha0 = (box_diam if box_diam > 0.0 else 1.0) / max(gmax, 1.0)
    alpha = alpha0
    alpha_min, alpha_max = 1e-12 * alpha0, 1e12 * alpha0

    def residual(xv: np.ndarray, gv: np.ndarray) -> float:
        if n == 0:
            return 0.0
        return float(np.max(np.abs(xv - np.clip(xv - gv, lo, hi))))

    x_prev = None
    g_prev = None
    it = 0
    curv_floor = -1e-12 * max(L, 1.0)

    while True:
        res = residual(x, g)
        if res <= tol * scale or n == 0:
            break
        if it >= max_iter:
            best = _finish(qp, x, it)
            raise QpSolverError(
                f"box-QP did not reach tolerance {tol:g} within {max_iter} "
                f"iterations (residual {res:.3e})", best=best)

        # Direction: periodic subspace Newton on the free set, otherwise a
        # spectral (BB1) projected-gradient step.
        d = None
        if (it + 1) % _NEWTON_PERIOD == 0:
            binding = ((x <= lo) & (g > 0.0)) | ((x >= hi) & (g < 0.0))
            d = _newton_direction(H, g, ~binding)
        if d is None:
            if x_prev is not None:
                s = x - x_prev
                y = g - g_prev
                sy = float(s @ y)
                if sy > 0.0:
                    alpha = float(np.clip((s @ s) / sy, alpha_min, alpha_max))
            d = -alpha * g

        p = np.clip(x + d, lo, hi) - x
        gTp = float(g @ p)
        if gTp >= 0.0:
            # A Newton direction bent by the box may fail to descend; fall
            # back to the projected-gradient direction for this iteration.
            p = np.clip(x - alpha * g, lo, hi) - x
            gTp = float(g @ p)
            if gTp >= 0.0:
                # No feasible descent along the projected gradient: KKT
                # already holds to machine accuracy for this scaling.
                break
        Hp = H @ p
        curv = float(p @ Hp)
        if curv < curv_floor * float(p @ p):
            raise QpSolverError("hessian has negative curvature along a "
                                "feasible direction; QP is not convex")
        if curv > 0.0:
            t = min(1.0, -gTp / curv)
        else:
            t = 1.0

        x_prev, g_prev = x, g
        x = x_prev + t * p
        # Keep exact feasibility at bound-hitting steps.
        if t >= 1.0:
            x = np.clip(x, lo, hi)
        g = g_prev + t * Hp
        it += 1
        if it % _GRAD_REFRESH == 0:
            g = H @ x + c

    return _finish(qp, x, it)


def _finish(qp: BoxQp, x: np.ndarray, iterations: int) -> QpSolution:
    g = qp.hessian @ x + qp.linear
    at_lower = x <= qp.lower
    at_upper = x >= qp.upper
    mult_lower = np.where(at_lower, np.maximum(g, 0.0), 0.0)
    mult_upper = np.where(at_upper, np.maximum(-g, 0.0), 0.0)
    res = float(np.max(np.abs(x - np.clip(x - g, qp.lower, qp.upper)))) \
        if qp.n else 0.0
    return QpSolution(x=x, multiplier_lower=mult_lower,
                      multiplier_upper=mult_upper, kkt_residual=res,
                      iterations=iterations, objective=qp.objective(x))
