"""Lasso solution paths by least angle regression, with a coordinate-descent
oracle for validation.

The path solver works on a weighted regression problem: rows carry sample
weights (geographic kernel weights downstream), the intercept is handled by
weighted centering and never penalized, and columns are scaled to unit
weighted standard deviation so the l1 constraint treats differently scaled
features symmetrically.  Knots are the breakpoints of the piecewise-linear
path; between knots coefficients interpolate linearly in their l1 norm.

Conventions
-----------
* ``penalty`` is the multiplier of sum|theta| added to the residual sum of
  squares, in the standardized coordinate system.  A knot with penalty q is
  the exact minimizer of ``||r - Z theta||^2 + q * sum|theta|``.
* A shrinkage fraction ``s`` in [0, 1] addresses the path by l1 norm as a
  fraction of the final knot's l1 norm: 0 is the intercept-only model, 1 is
  the unpenalized weighted least-squares fit.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDesignError, NonConvergenceError, NumericalRankLossError

_SCALE_RTOL = 1e-12
_LAM_RTOL = 1e-12


@dataclass(frozen=True)
class Standardization:
    """Weighted centering/scaling record for one fitted path."""

    feature_means: np.ndarray
    feature_scales: np.ndarray
    response_mean: float
    kept: np.ndarray  # False where a column was constant under the weights

    @property
    def n_kept(self) -> int:
        return int(self.kept.sum())


@dataclass(frozen=True)
class PathKnot:
    """One breakpoint of the solution path (standardized coordinates).

    `active` is the support of `coef` at the knot itself; a joining
    variable has coefficient exactly zero at its knot, so it shows up in
    `event` here and in `active` from the next knot on.
    """

    l1: float
    coef: np.ndarray  # length p, exact zeros off the active set
    active: tuple
    penalty: float
    event: tuple | None = None  # ("join"|"drop", column) causing this knot


@dataclass(frozen=True)
class LarsPath:
    knots: tuple
    standardization: Standardization
    n_positive_weight: int

    @property
    def final_l1(self) -> float:
        return self.knots[-1].l1


@dataclass(frozen=True)
class PathSolution:
    """A point on the path, back-transformed to the original feature scale."""

    intercept: float
    slopes: np.ndarray
    zero_mask: np.ndarray
    s_frac: float
    l1: float
    standardized: np.ndarray

    def predict(self, x) -> float:
        return float(self.intercept + np.asarray(x, dtype=float) @ self.slopes)


def weighted_standardize(X, y, weights=None, standardize=True):
    """Weighted centering (and optional unit-variance scaling) of a design.

    Returns ``(Z, r, record, w)`` where Z and r are the sqrt-weighted,
    centered (scaled) design and response restricted to kept columns.
    Columns constant under the weighting are dropped and flagged in the
    record.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2:
        raise ValueError(f"X must be 2-D, got shape {X.shape}")
    n, p = X.shape
    if y.shape[0] != n:
        raise ValueError(f"X has {n} rows but y has {y.shape[0]}")
    if p < 1:
        raise ValueError("need at least one column")
    if weights is None:
        w = np.ones(n)
    else:
        w = np.asarray(weights, dtype=float).ravel()
        if w.shape[0] != n:
            raise ValueError(f"weights length {w.shape[0]} != n={n}")
        if not np.isfinite(w).all() or (w < 0).any():
            raise ValueError("weights must be finite and non-negative")
    n_pos = int((w > 0).sum())
    if n_pos < 2:
        raise DegenerateDesignError(
            f"only {n_pos} observation(s) with positive weight; need at least 2"
        )
    w_tot = float(w.sum())
    xbar = (w @ X) / w_tot
    ybar = float(w @ y) / w_tot
    Xc = X - xbar
    var = (w @ (Xc**2)) / w_tot
    msq = (w @ (X**2)) / w_tot
    std = np.sqrt(np.maximum(var, 0.0))
    kept = std > _SCALE_RTOL * np.maximum(1.0, np.sqrt(msq))
    if not kept.any():
        raise DegenerateDesignError("all columns constant under the given weights")
    scales = np.ones(p)
    if standardize:
        scales[kept] = std[kept]
    sw = np.sqrt(w)
    Z = sw[:, None] * (Xc[:, kept] / scales[kept])
    r = sw * (y - ybar)
    record = Standardization(
        feature_means=xbar, feature_scales=scales, response_mean=ybar, kept=kept
    )
    return Z, r, record, w


def _solve_gram(G, rhs, active):
    sol, _, rank, _ = np.linalg.lstsq(G, rhs, rcond=1e-12)
    if rank < G.shape[0]:
        raise NumericalRankLossError(
            f"active-set Gram matrix singular (rank {rank} < {G.shape[0]}) "
            f"for active columns {list(active)}"
        )
    return sol


def lars_path(X, y, weights=None, standardize=True) -> LarsPath:
    """Full lasso path on a weighted design.

    The lasso modification is honored: an active coefficient crossing zero
    leaves the active set at its own knot.  The path is truncated once the
    active set reaches one less than the number of positive-weight rows.
    """
    Z, r, record, w = weighted_standardize(X, y, weights, standardize)
    p = record.kept.shape[0]
    kept_idx = np.where(record.kept)[0]
    m = kept_idx.shape[0]
    n_pos = int((w > 0).sum())
    max_active = min(m, n_pos - 1)

    G = Z.T @ Z
    c0 = Z.T @ r

    def full_coef(theta_m):
        coef = np.zeros(p)
        coef[kept_idx] = theta_m
        return coef

    knots = [PathKnot(l1=0.0, coef=np.zeros(p), active=(), penalty=2.0 * float(np.abs(c0).max()))]
    lam0 = float(np.abs(c0).max())
    lam_floor = _LAM_RTOL * max(1.0, float(np.sqrt(r @ r)) * float(np.sqrt(np.diag(G).max())))
    if lam0 <= lam_floor or max_active == 0:
        return LarsPath(knots=(knots[0],), standardization=record, n_positive_weight=n_pos)

    j0 = int(np.argmax(np.abs(c0)))
    active = [j0]
    signs = {j0: float(np.sign(c0[j0]))}
    lam = lam0
    last_dropped = None
    max_events = 50 * m + 100
    for _ in range(max_events):
        A = np.array(active, dtype=int)
        sA = np.array([signs[j] for j in active])
        GA = G[np.ix_(A, A)]
        sols = _solve_gram(GA, np.column_stack([c0[A], sA]), A)
        theta_ols, dA = sols[:, 0], sols[:, 1]

        candidates = []  # (lam_value, is_drop, column, join_sign)
        lam_lo = lam0 * _LAM_RTOL
        # join events: an inactive correlation catches up with lam
        if len(active) < max_active and m > len(active):
            inact = np.setdiff1d(np.arange(m), A, assume_unique=False)
            GIA = G[np.ix_(inact, A)]
            b = c0[inact] - GIA @ theta_ols
            gvec = GIA @ dA
            with np.errstate(divide="ignore", invalid="ignore"):
                lam_plus = b / (1.0 - gvec)
                lam_minus = -b / (1.0 + gvec)
            for cand, sgn in ((lam_plus, 1.0), (lam_minus, -1.0)):
                for jj, val in zip(inact, cand):
                    if not np.isfinite(val) or not lam_lo < val:
                        continue
                    if val > lam * (1.0 + 1e-9):
                        continue
                    val = min(val, lam)
                    if jj == last_dropped and val >= lam * (1.0 - _LAM_RTOL):
                        continue  # a just-dropped column may not bounce back at the same knot
                    candidates.append((val, False, int(jj), sgn))
        # drop events: an active coefficient crosses zero strictly below lam
        with np.errstate(divide="ignore", invalid="ignore"):
            lam_drop = theta_ols / dA
        for pos, jj in enumerate(active):
            val = lam_drop[pos]
            if np.isfinite(val) and lam_lo < val < lam * (1.0 - _LAM_RTOL):
                candidates.append((float(val), True, int(jj), 0.0))

        if candidates:
            lam_next, is_drop, col, join_sign = max(
                candidates, key=lambda t: (t[0], t[1], -t[2])
            )
            theta_seg = theta_ols - lam_next * dA
            if is_drop:
                theta_seg[active.index(col)] = 0.0
            theta_m = np.zeros(m)
            theta_m[A] = theta_seg
            knot = PathKnot(
                l1=float(np.abs(theta_seg).sum()),
                coef=full_coef(theta_m),
                active=tuple(
                    sorted(kept_idx[j] for j in active if not (is_drop and j == col))
                ),
                penalty=2.0 * lam_next,
                event=("drop" if is_drop else "join", int(kept_idx[col])),
            )
            # a join immediately undone by a drop of the same column at the
            # same lambda is a tangential touch of the boundary: elide both
            tangential = (
                is_drop
                and knots[-1].event == ("join", int(kept_idx[col]))
                and abs(knot.l1 - knots[-1].l1) <= 1e-9 * max(1.0, knots[-1].l1)
            )
            if tangential:
                knots.pop()
            else:
                knots.append(knot)
            if is_drop:
                active.remove(col)
                del signs[col]
                last_dropped = col
            else:
                active.append(col)
                signs[col] = join_sign
                last_dropped = None
            lam = lam_next
            if not active:
                raise NumericalRankLossError("active set emptied before the path completed")
        else:
            theta_m = np.zeros(m)
            theta_m[A] = theta_ols
            knots.append(
                PathKnot(
                    l1=float(np.abs(theta_ols).sum()),
                    coef=full_coef(theta_m),
                    active=tuple(sorted(kept_idx[j] for j in active)),
                    penalty=0.0,
                )
            )
            return LarsPath(knots=tuple(knots), standardization=record, n_positive_weight=n_pos)
    raise NumericalRankLossError("lasso path did not terminate within the event budget")


def _back_transform(theta, record: Standardization, s_frac: float) -> PathSolution:
    slopes = theta / record.feature_scales
    slopes[~record.kept] = 0.0
    intercept = record.response_mean - float(slopes @ record.feature_means)
    return PathSolution(
        intercept=intercept,
        slopes=slopes,
        zero_mask=theta == 0.0,
        s_frac=s_frac,
        l1=float(np.abs(theta).sum()),
        standardized=theta,
    )


def solution_at(path: LarsPath, s_frac: float) -> PathSolution:
    """Coefficients at a shrinkage fraction, on the original feature scale.

    The target l1 norm is ``s_frac * final_l1``; coefficients interpolate
    linearly between the bracketing knots.
    """
    if not 0.0 <= s_frac <= 1.0:
        raise ValueError(f"s_frac must lie in [0, 1], got {s_frac}")
    knots = path.knots
    L = path.final_l1
    if L == 0.0:
        return _back_transform(knots[0].coef.copy(), path.standardization, s_frac)
    target = s_frac * L
    l1s = [k.l1 for k in knots]
    snap = _LAM_RTOL * max(1.0, L)
    hi = bisect.bisect_left(l1s, target)
    if hi >= len(knots):
        hi = len(knots) - 1
    lo = max(hi - 1, 0)
    if abs(target - l1s[hi]) <= snap:
        theta = knots[hi].coef.copy()
    elif abs(target - l1s[lo]) <= snap:
        theta = knots[lo].coef.copy()
    else:
        t = (target - l1s[lo]) / (l1s[hi] - l1s[lo])
        theta = knots[lo].coef + t * (knots[hi].coef - knots[lo].coef)
    return _back_transform(theta, path.standardization, s_frac)


def knot_solution(path: LarsPath, index: int) -> PathSolution:
    """The exact solution at one knot, back-transformed."""
    knot = path.knots[index]
    L = path.final_l1
    s_frac = knot.l1 / L if L > 0 else 0.0
    return _back_transform(knot.coef.copy(), path.standardization, s_frac)


def lasso_max_penalty(X, y, weights=None, standardize=True) -> float:
    """Smallest penalty at which every slope is zero (twice the largest
    absolute weighted correlation of the standardized design)."""
    Z, r, _, _ = weighted_standardize(X, y, weights, standardize)
    return 2.0 * float(np.abs(Z.T @ r).max())


def lasso_oracle(
    X,
    y,
    penalty: float,
    weights=None,
    standardize=True,
    tol: float = 1e-10,
    max_sweeps: int = 100_000,
) -> np.ndarray:
    """Coordinate-descent minimizer of the penalized weighted RSS.

    Returns the coefficient vector on the original scale, intercept first.
    Exists to validate the path solver through an independent route; it is
    deliberately plain full-sweep coordinate descent.
    """
    if penalty < 0:
        raise ValueError(f"penalty must be non-negative, got {penalty}")
    Z, r, record, _ = weighted_standardize(X, y, weights, standardize)
    m = Z.shape[1]
    G = Z.T @ Z
    c0 = Z.T @ r
    gdiag = np.diag(G).copy()
    if (gdiag <= 0).any():
        raise DegenerateDesignError("zero-norm column survived standardization")
    half = penalty / 2.0
    theta = np.zeros(m)
    for _ in range(max_sweeps):
        biggest = 0.0
        for k in range(m):
            rho = c0[k] - G[k] @ theta + gdiag[k] * theta[k]
            if rho > half:
                new = (rho - half) / gdiag[k]
            elif rho < -half:
                new = (rho + half) / gdiag[k]
            else:
                new = 0.0
            biggest = max(biggest, abs(new - theta[k]))
            theta[k] = new
        if biggest <= tol * max(1.0, float(np.abs(theta).max())):
            break
    else:
        raise NonConvergenceError(
            f"coordinate descent did not converge in {max_sweeps} sweeps"
        )
    p = record.kept.shape[0]
    theta_full = np.zeros(p)
    theta_full[record.kept] = theta
    sol = _back_transform(theta_full, record, s_frac=float("nan"))
    return np.concatenate(([sol.intercept], sol.slopes))
