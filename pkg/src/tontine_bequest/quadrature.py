"""Vectorised adaptive Simpson quadrature.

All intervals that still need refinement at a given depth are processed in a
single numpy call, so the cost is a handful of array evaluations rather than
one Python call per node.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import QuadratureError

ArrayFunc = Callable[[np.ndarray], np.ndarray]


def adaptive_simpson(
    f: ArrayFunc,
    a: float,
    b: float,
    tol: float = 1e-10,
    max_subdivisions: int = 200_000,
    initial_panels: int = 16,
    rel_tol: float = 0.0,
) -> tuple[float, float]:
    """Integrate ``f`` over ``[a, b]`` with adaptive Simpson refinement.

    The absolute tolerance is shared between intervals in proportion to their
    width. An interval is accepted once the two-level Simpson difference
    satisfies ``|S2 - S1| <= 15 * tol_i``; the Richardson-corrected value
    ``S2 + (S2 - S1) / 15`` is then added to the total.

    Args:
        f: Vectorised integrand taking and returning 1-d arrays.
        a, b: Integration limits, ``a <= b``.
        tol: Absolute error target for the whole integral.
        max_subdivisions: Total number of interval splits allowed.
        initial_panels: Number of equal panels to start from.
        rel_tol: Optional relative target; the effective tolerance is
            ``max(tol, rel_tol * |estimate|)`` using a coarse first estimate.

    Returns:
        ``(value, error_estimate)``.

    Raises:
        QuadratureError: if the subdivision budget is exhausted.
    """
    if b < a:
        raise ValueError(f"integration limits out of order: a={a}, b={b}")
    if b == a:
        return 0.0, 0.0
    width = b - a

    edges = np.linspace(a, b, initial_panels + 1)
    lo, hi = edges[:-1], edges[1:]
    mid = 0.5 * (lo + hi)
    f_edges = f(edges)
    flo, fhi = f_edges[:-1], f_edges[1:]
    fmid = f(mid)
    whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)

    coarse = float(np.sum(whole))
    if rel_tol > 0.0 and np.isfinite(coarse):
        tol = max(tol, rel_tol * abs(coarse))

    total = 0.0
    err = 0.0
    splits = 0
    while lo.size:
        lmid = 0.5 * (lo + mid)
        rmid = 0.5 * (mid + hi)
        f_l = f(lmid)
        f_r = f(rmid)
        h = hi - lo
        left = h / 12.0 * (flo + 4.0 * f_l + fmid)
        right = h / 12.0 * (fmid + 4.0 * f_r + fhi)
        diff = left + right - whole
        local_tol = tol * h / width
        ok = np.abs(diff) <= 15.0 * local_tol
        if not np.all(np.isfinite(diff)):
            raise QuadratureError("integrand produced non-finite values")
        if np.any(ok):
            total += float(np.sum(left[ok] + right[ok] + diff[ok] / 15.0))
            err += float(np.sum(np.abs(diff[ok]))) / 15.0
        bad = ~ok
        n_bad = int(np.count_nonzero(bad))
        if n_bad == 0:
            break
        splits += n_bad
        if splits > max_subdivisions:
            raise QuadratureError(
                f"adaptive Simpson exceeded {max_subdivisions} subdivisions on [{a}, {b}]"
            )
        # children: [lo, mid] and [mid, hi] of every rejected interval
        lo_b, mid_b, hi_b = lo[bad], mid[bad], hi[bad]
        lo = np.concatenate([lo_b, mid_b])
        hi = np.concatenate([mid_b, hi_b])
        flo = np.concatenate([flo[bad], fmid[bad]])
        fhi = np.concatenate([fmid[bad], fhi[bad]])
        fmid = np.concatenate([f_l[bad], f_r[bad]])
        whole = np.concatenate([left[bad], right[bad]])
        mid = 0.5 * (lo + hi)
    return total, err


def gauss_legendre_panels(a: float, b: float, panels: int, order: int = 8):
    """Nodes and weights of a composite Gauss-Legendre rule on ``[a, b]``."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    centre = 0.5 * (edges[:-1] + edges[1:])
    nodes = (centre[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights
