"""Adaptive quadrature.

`integrate_1d` is a globally adaptive Gauss-Kronrod (7/15) scheme over
finite or (semi-)infinite intervals with vector-valued integrands;
`integrate_Rn` builds radial-angular product rules over R^n, n <= 3, on
top of it.  Integrands are vectorized: they receive a 1-D array of nodes
(or an ``(npts, n)`` array of points) and return values whose last axis
runs over the nodes.  Leading axes are independent components that share
one panel tree.

The error estimate of a panel is |K15 - G7| plus a rounding floor, i.e. the
error of the lower-order rule.  It is deliberately pessimistic for the
returned Kronrod value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericError

# Kronrod 15-point nodes on [-1, 1] (nonnegative half) and weights
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
# Gauss 7-point weights, attached to the odd-indexed Kronrod nodes above
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
WK15 = np.concatenate([_WK[:-1], _WK[::-1]])
WG7 = np.zeros(15)
WG7[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class QuadResult:
    value: complex | float | np.ndarray
    err_estimate: float | np.ndarray
    panels_used: int
    converged: bool

    @property
    def err(self) -> float:
        return float(np.max(self.err_estimate))


def _mapping(a: float, b: float, scale: float):
    """Return (ta, tb, x(t), dx/dt) mapping a finite t-interval onto [a, b]."""
    if not a < b:
        raise DomainError(f"invalid integration interval [{a}, {b}]")
    if math.isfinite(a) and math.isfinite(b):
        return a, b, (lambda t: t), (lambda t: np.ones_like(t))
    if math.isfinite(a) and b == math.inf:
        return 0.0, 1.0, (lambda t: a + scale * t / (1 - t)), (lambda t: scale / (1 - t) ** 2)
    if a == -math.inf and math.isfinite(b):
        return 0.0, 1.0, (lambda t: b - scale * t / (1 - t)), (lambda t: scale / (1 - t) ** 2)
    if a == -math.inf and b == math.inf:
        return -1.0, 1.0, (lambda t: scale * t / (1 - t * t)), (lambda t: scale * (1 + t * t) / (1 - t * t) ** 2)
    raise DomainError(f"invalid integration interval [{a}, {b}]")


def integrate_1d(f, a: float = 0.0, b: float = math.inf, tol: float = 1e-10, rtol: float = 0.0,
                 max_panels: int = 4000, initial_panels: int = 4, scale: float = 1.0,
                 raise_on_failure: bool = False) -> QuadResult:
    """Adaptive Gauss-Kronrod integral of ``f`` over ``[a, b]``.

    Semi-infinite ranges use ``x = a + scale * t / (1 - t)``.  Convergence
    means ``err <= max(tol, rtol * |value|)`` in every component.  When the
    panel budget runs out the best estimate is returned with
    ``converged=False`` (or :class:`NumericError` is raised if
    ``raise_on_failure``).
    """
    ta, tb, xmap, jac = _mapping(float(a), float(b), float(scale))
    edges = np.linspace(ta, tb, initial_panels + 1)
    lefts, widths = edges[:-1], np.diff(edges)

    def evaluate(lefts, widths):
        half = 0.5 * widths
        t = (lefts + half)[:, None] + half[:, None] * NODES[None, :]
        y = np.asarray(f(xmap(t).ravel()))
        y = y.reshape(y.shape[:-1] + t.shape) * (jac(t) * half[:, None])
        kron = y @ WK15
        gauss = y @ WG7
        absint = np.abs(y) @ WK15
        err = np.abs(kron - gauss) + 50 * _EPS * absint
        return kron, err

    vals, errs = evaluate(lefts, widths)
    comp_shape = vals.shape[:-1]
    span = tb - ta
    while True:
        total = vals.sum(axis=-1)
        total_err = errs.sum(axis=-1)
        target = np.maximum(tol, rtol * np.abs(total))
        if np.all(total_err <= target):
            converged = True
            break
        # refine every panel that exceeds its width-proportional share
        share = (errs / target[..., None]).reshape(-1, lefts.size).max(axis=0)
        refine = share > widths / span
        if lefts.size + refine.sum() > max_panels:
            converged = False
            break
        keep = ~refine
        rl, rw = lefts[refine], widths[refine] / 2
        new_l = np.concatenate([rl, rl + rw])
        new_w = np.concatenate([rw, rw])
        nv, ne = evaluate(new_l, new_w)
        lefts = np.concatenate([lefts[keep], new_l])
        widths = np.concatenate([widths[keep], new_w])
        vals = np.concatenate([vals[..., keep], nv], axis=-1)
        errs = np.concatenate([errs[..., keep], ne], axis=-1)
        order = np.argsort(lefts, kind="stable")
        lefts, widths = lefts[order], widths[order]
        vals, errs = vals[..., order], errs[..., order]

    value = total if comp_shape else total[()]
    err = total_err if comp_shape else float(total_err)
    res = QuadResult(value=value, err_estimate=err, panels_used=int(lefts.size), converged=converged)
    if not converged and raise_on_failure:
        raise NumericError(f"quadrature did not converge within {max_panels} panels "
                           f"(err {np.max(total_err):.3g})", partial=res)
    return res


def sphere_volume(n: int) -> float:
    """Surface measure of S^{n-1} for n = 1, 2, 3."""
    vols = {1: 2.0, 2: 2 * math.pi, 3: 4 * math.pi}
    if n not in vols:
        raise DomainError(f"sphere_volume supports 1 <= n <= 3, got {n}")
    return vols[n]


def _angular_rule(n: int, level: int):
    """Directions and weights of the angular rule at refinement ``level``."""
    if n == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if n == 2:
        M = 8 * 2**level
        th = 2 * np.pi * np.arange(M) / M
        return np.stack([np.cos(th), np.sin(th)], axis=-1), np.full(M, 2 * np.pi / M)
    M = 4 * 2**level
    c, wc = np.polynomial.legendre.leggauss(M)
    th = 2 * np.pi * np.arange(2 * M) / (2 * M)
    s = np.sqrt(1 - c * c)
    dirs = np.stack([
        (s[:, None] * np.cos(th)[None, :]).ravel(),
        (s[:, None] * np.sin(th)[None, :]).ravel(),
        np.repeat(c, 2 * M),
    ], axis=-1)
    w = (wc[:, None] * np.full(2 * M, 2 * np.pi / (2 * M))[None, :]).ravel()
    return dirs, w


def integrate_Rn(g, n: int, tol: float = 1e-10, rtol: float = 0.0, max_level: int = 7,
                 max_panels: int = 4000, scale: float = 1.0, raise_on_failure: bool = False) -> QuadResult:
    """Integrate ``g`` over R^n (n <= 3) in polar coordinates.

    ``g`` maps an ``(npts, n)`` array to values with trailing axis ``npts``.
    The angular rule (two points for n=1, trapezoid for n=2, Gauss x
    trapezoid for n=3) is doubled until successive levels agree; the radial
    integral at each level is adaptive.  The reported error is the radial
    estimate plus the last level-to-level difference.
    """
    if n not in (1, 2, 3):
        raise DomainError(f"integrate_Rn supports n <= 3, got {n}")
    radial_tol = 0.25 * tol
    radial_rtol = 0.25 * rtol
    prev = None
    panels = 0
    for level in range(max_level + 1):
        dirs, w = _angular_rule(n, level)

        def radial(r, dirs=dirs, w=w):
            pts = (r[None, :, None] * dirs[:, None, :]).reshape(-1, n)
            vals = np.asarray(g(pts))
            vals = vals.reshape(vals.shape[:-1] + (dirs.shape[0], r.size))
            return np.tensordot(vals, w, axes=([-2], [0])) * r ** (n - 1)

        res = integrate_1d(radial, 0.0, math.inf, tol=radial_tol, rtol=radial_rtol,
                           max_panels=max_panels, scale=scale)
        panels += res.panels_used
        if n == 1:
            return QuadResult(res.value, res.err_estimate, panels, res.converged)
        if prev is not None:
            diff = np.abs(np.asarray(res.value) - np.asarray(prev.value))
            err = np.asarray(res.err_estimate) + diff
            target = np.maximum(tol, rtol * np.abs(res.value))
            if np.all(diff <= 0.5 * target):
                err_out = err if np.ndim(err) else float(err)
                return QuadResult(res.value, err_out, panels, res.converged and bool(np.all(err <= target)))
        prev = res
    err = np.asarray(res.err_estimate) + diff
    out = QuadResult(res.value, err if np.ndim(err) else float(err), panels, False)
    if raise_on_failure:
        raise NumericError("angular refinement did not converge", partial=out)
    return out
