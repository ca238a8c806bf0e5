"""Quarter-point interval search for the bandwidth with minimum CV error.

Each round probes the midpoints of the two halves of the bracket and
discards the quarter on the worse side, so the bracket shrinks by a factor
of 3/4 per round.  On a unimodal error curve the bracket always contains
the minimizer.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class SearchResult:
    bandwidth: float
    error: float
    evaluations: list = field(default_factory=list)


def interval_search(err_fn, lb: float, ub: float, eps: float) -> SearchResult:
    """Shrink [lb, ub] until its width is <= eps, then return the best of
    the bracket ends and center by error.

    Equal errors at the two probes shrink the upper bound, which keeps the
    bracket strictly shrinking and guarantees termination.
    """
    if not 0 < lb < ub:
        raise ValueError(f"require 0 < lb < ub, got lb={lb}, ub={ub}")
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    evaluations = []

    def probe(b):
        err = float(err_fn(b))
        evaluations.append((b, err))
        return err

    c = (lb + ub) / 2.0
    diff = ub - lb
    while diff > eps:
        lc = (lb + c) / 2.0
        cu = (c + ub) / 2.0
        lc_err = probe(lc)
        cu_err = probe(cu)
        if lc_err < cu_err:
            ub = cu
        elif lc_err > cu_err:
            lb = lc
        else:
            ub = cu
        c = (lb + ub) / 2.0
        diff = abs(ub - lb)
    finalists = [(probe(b), b) for b in (lb, c, ub)]
    best_err, best_b = min(finalists, key=lambda t: (t[0], t[1]))
    return SearchResult(bandwidth=best_b, error=best_err, evaluations=evaluations)
