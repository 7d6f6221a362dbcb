"""Numerical integration helpers.

Two routes are provided on purpose.  ``adaptive_gk`` is a vectorised
Gauss-Kronrod (7/15) bisection scheme used on the hot paths, where the
integrand is cheap to evaluate on arrays and many breakpoints are known in
advance (tabulation nodes).  ``quad`` wraps QUADPACK for scalar integrands
and turns its silent warnings into :class:`ConvergenceError`.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import integrate

from .errors import ConvergenceError

__all__ = ["DEFAULT_TOL", "adaptive_gk", "quad"]

DEFAULT_TOL = 1e-8

_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# full symmetric rules on [-1, 1]
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KRONROD = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GAUSS = np.zeros(15)
_GAUSS[1:7:2] = _WG[:3]
_GAUSS[7] = _WG[3]
_GAUSS[9:15:2] = _WG[2::-1]


def _gk_pass(f, lo, hi):
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    z = mid[:, None] + half[:, None] * _NODES[None, :]
    vals = np.asarray(f(z.ravel()), dtype=float).reshape(z.shape)
    if not np.all(np.isfinite(vals)):
        raise ConvergenceError("integrand returned non-finite values")
    kron = half * (vals @ _KRONROD)
    gauss = half * (vals @ _GAUSS)
    return kron, np.abs(kron - gauss)


def adaptive_gk(f, breakpoints, tol=DEFAULT_TOL, max_iter=60):
    """Integrate a vectorised ``f`` over ``[breakpoints[0], breakpoints[-1]]``.

    ``breakpoints`` must be sorted.  Cells start at the breakpoints; while the
    summed Kronrod/Gauss discrepancy exceeds ``tol`` every cell carrying more
    than an equal share of it is bisected.  Returns ``(value, error)``.
    """
    edges = np.asarray(breakpoints, dtype=float)
    if edges.ndim != 1 or edges.size < 2:
        raise ValueError("need at least two breakpoints")
    if np.any(np.diff(edges) < 0):
        raise ValueError("breakpoints must be sorted")
    edges = np.unique(edges)
    if edges.size < 2:
        return 0.0, 0.0
    lo, hi = edges[:-1], edges[1:]
    vals, errs = _gk_pass(f, lo, hi)
    for _ in range(max_iter):
        total_err = math.fsum(errs)
        if total_err <= tol:
            return math.fsum(vals), total_err
        split = errs > tol / errs.size
        split[np.argmax(errs)] = True
        mid = 0.5 * (lo[split] + hi[split])
        new_lo = np.concatenate([lo[split], mid])
        new_hi = np.concatenate([mid, hi[split]])
        new_vals, new_errs = _gk_pass(f, new_lo, new_hi)
        keep = ~split
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        vals = np.concatenate([vals[keep], new_vals])
        errs = np.concatenate([errs[keep], new_errs])
    raise ConvergenceError(
        f"adaptive quadrature did not reach tol={tol:g} in {max_iter} refinement rounds"
    )


def quad(f, a, b, tol=DEFAULT_TOL, points=None, limit=200):
    """Scalar adaptive quadrature; raises instead of warning on failure."""
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, err = integrate.quad(
                f, a, b, epsabs=tol, epsrel=1e-10, points=points, limit=limit
            )
        except integrate.IntegrationWarning as exc:
            raise ConvergenceError(f"quadrature on [{a}, {b}] failed: {exc}") from exc
    if not math.isfinite(value):
        raise ConvergenceError(f"quadrature on [{a}, {b}] returned {value}")
    return value
