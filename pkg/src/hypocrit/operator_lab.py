"""Dense finite-difference realization of the block operator D(h).

For n = 1 on a Dirichlet grid over [-R, R]:

    L = -h^2 d^2/dx^2 + P(x,h)^2 + Q(x,h)^2,   A = L^{-1},
    B = A^{1/2} P(x,h) A^{1/2},               D = [[2B, A^{1/2}], [-A^{1/2}, 0]].

Eigenvalues mu of D give nonlinear eigenvalues lambda' = 1/mu of
(I - 2 lambda' B + lambda'^2 A) u = 0, and v = A^{1/2} u solves
(L - 2 lambda' P + lambda'^2) v = 0.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg

from .criterion import threads
from .errors import DomainError, InputError, NumericError
from .poly import Polynomial
from .symbol import ProblemSpec, build_semiclassical, undilate


@dataclass(frozen=True)
class Grid1D:
    R: float = 8.0
    N: int = 800

    def __post_init__(self):
        if self.N < 3:
            raise InputError(f"grid needs N >= 3, got {self.N}")
        if not self.R > 0:
            raise InputError(f"grid half-width must be positive, got {self.R}")

    @property
    def spacing(self) -> float:
        return 2 * self.R / (self.N + 1)

    @property
    def points(self) -> np.ndarray:
        return -self.R + self.spacing * np.arange(1, self.N + 1)


def _laplacian_bands(grid: Grid1D):
    """Diagonal and off-diagonal of -d^2/dx^2 (3-point, Dirichlet)."""
    d = grid.spacing
    return np.full(grid.N, 2.0 / d**2), np.full(grid.N - 1, -1.0 / d**2)


@dataclass(frozen=True, eq=False)
class DiscreteOperators:
    spec: ProblemSpec
    h: float
    grid: Grid1D
    L: np.ndarray
    A: np.ndarray
    Ahalf: np.ndarray
    B: np.ndarray
    D: np.ndarray
    P: np.ndarray
    L_eigs: np.ndarray

    @property
    def N(self) -> int:
        return self.grid.N

    @property
    def cond_Ahalf(self) -> float:
        return math.sqrt(self.L_eigs[-1] / self.L_eigs[0])


def build_operators(spec: ProblemSpec, h: float, grid: Grid1D | None = None) -> DiscreteOperators:
    grid = grid or Grid1D()
    if spec.n != 1:
        raise DomainError("the dense operator lab supports n = 1 only")
    if not h > 0:
        raise InputError(f"h must be positive, got {h}")
    sc = build_semiclassical(spec, h)
    x = grid.points[:, None]
    Pv = sc.P(x)
    Qv = sc.Q(x)
    diag, off = _laplacian_bands(grid)
    diag = h * h * diag + Pv * Pv + Qv * Qv
    off = h * h * off
    w, V = linalg.eigh_tridiagonal(diag, off)
    if w[0] <= 0.5:
        raise InputError(f"h too large / domain too small: smallest eigenvalue of L is {w[0]:.6g} <= 1/2")
    L = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    A = (V / w) @ V.T
    Ahalf = (V / np.sqrt(w)) @ V.T
    A = 0.5 * (A + A.T)
    Ahalf = 0.5 * (Ahalf + Ahalf.T)
    B = (Ahalf * Pv) @ Ahalf
    B = 0.5 * (B + B.T)
    N = grid.N
    D = np.zeros((2 * N, 2 * N))
    D[:N, :N] = 2 * B
    D[:N, N:] = Ahalf
    D[N:, :N] = -Ahalf
    return DiscreteOperators(spec, float(h), grid, L, A, Ahalf, B, D, Pv, w)


def trace_Dk(ops: DiscreteOperators, k: int) -> float:
    """Tr D^k by repeated real matrix products; the last product is folded into the trace."""
    if k < 2:
        raise InputError(f"k must be >= 2, got {k}")
    M = ops.D
    for _ in range(k - 2):
        M = M @ ops.D
    return float(np.einsum("ij,ji->", M, ops.D))


@dataclass
class FitTerm:
    exponent: float
    H: float
    stderr: float


@dataclass
class TraceExperiment:
    spec: ProblemSpec
    k: int
    grid: Grid1D
    h_grid: np.ndarray
    traces: np.ndarray
    scaled: np.ndarray
    terms: list[FitTerm]
    residual: float
    H0_stability: float
    subfits: dict[str, float] = field(default_factory=dict)

    @property
    def H0(self) -> float:
        return self.terms[0].H


def _lstsq(hs, ys, exps):
    X = hs[:, None] ** np.asarray(exps)[None, :]
    cond = np.linalg.cond(X)
    if not np.isfinite(cond) or cond > 1e12:
        raise NumericError(f"ill-conditioned fit design matrix (cond {cond:.3g})")
    coef, *_ = np.linalg.lstsq(X, ys, rcond=None)
    resid = ys - X @ coef
    dof = len(hs) - len(exps)
    if dof > 0:
        s2 = float(resid @ resid) / dof
        stderr = np.sqrt(np.maximum(np.diag(np.linalg.inv(X.T @ X)) * s2, 0.0))
    else:
        stderr = np.full(len(exps), np.nan)
    return coef, stderr, float(np.sqrt(np.mean(resid**2)))


def traces_on_grid(spec: ProblemSpec, k: int, h_grid: Sequence[float], grid: Grid1D) -> np.ndarray:
    with ThreadPoolExecutor(max_workers=threads()) as pool:
        return np.array(list(pool.map(lambda h: trace_Dk(build_operators(spec, h, grid), k), h_grid)))


def semiclassical_fit(spec: ProblemSpec, k: int, h_grid: Sequence[float], grid: Grid1D | None = None,
                      jmax: int = 4, exponents: Sequence[float] | None = None,
                      traces: Sequence[float] | None = None) -> TraceExperiment:
    """Least-squares fit of (2 pi h)^n Tr D(h)^k by sum_j H_j h^{j/(m+1)}, j <= jmax.

    ``exponents`` overrides the fitted powers of h.  The stability of H_0
    is the largest change under refits on sub-grids: the two halves of the
    h-grid when each half can determine the fit, otherwise the grid with
    its smallest or its largest h removed.
    """
    grid = grid or Grid1D()
    hs = np.asarray(h_grid, dtype=float)
    order = np.argsort(hs)[::-1]
    hs = hs[order]
    exps = list(exponents) if exponents is not None else [j / (spec.m + 1) for j in range(jmax + 1)]
    if len(hs) < len(exps) + 2:
        raise InputError(f"h-grid needs at least {len(exps) + 2} points for {len(exps)} coefficients")
    if traces is not None:
        tr = np.asarray(traces, dtype=float)
        if tr.shape != hs.shape:
            raise InputError("traces must match the h-grid")
        tr = tr[order]
    else:
        tr = traces_on_grid(spec, k, hs, grid)
    scaled = (2 * np.pi * hs) ** spec.n * tr
    coef, stderr, resid = _lstsq(hs, scaled, exps)

    half = len(hs) // 2
    if half >= len(exps):
        subsets = {"upperHalf": slice(0, half), "lowerHalf": slice(len(hs) - half, None)}
    else:
        subsets = {"dropSmallest": slice(0, len(hs) - 1), "dropLargest": slice(1, None)}
    subfits = {}
    for name, sl in subsets.items():
        try:
            subfits[name] = float(_lstsq(hs[sl], scaled[sl], exps)[0][0])
        except NumericError:
            subfits[name] = math.nan
    finite = [abs(v - coef[0]) for v in subfits.values() if math.isfinite(v)]
    stability = max(finite) if finite else math.inf
    terms = [FitTerm(float(e), float(c), float(s)) for e, c, s in zip(exps, coef, stderr)]
    return TraceExperiment(spec, k, grid, hs, tr, scaled, terms, resid, stability, subfits)


@dataclass
class NonlinearEigenpair:
    mu: complex
    lambda_prime: complex
    lambda_: complex
    u: np.ndarray
    v: np.ndarray
    residual_u: float
    residual_v: float
    residual_bound: float
    accepted: bool

    @property
    def lambda_is_real(self) -> bool:
        return abs(self.lambda_.imag) <= 1e-8 * max(1.0, abs(self.lambda_))


def nonlinear_eigs(ops: DiscreteOperators, tol: float = 1e-8, mu_floor: float = 1e-6) -> list[NonlinearEigenpair]:
    """All eigenpairs of D with |mu| > mu_floor, sorted by u-residual.

    ``residual_bound`` is the bound on the v-residual implied by the
    u-residual: rel_v <= lambda_max(L) rel_u (plus a rounding allowance),
    since (L - 2 lambda' P + lambda'^2) A^{1/2} u = A^{-1/2} (I - 2 lambda' B + lambda'^2 A) u.
    """
    try:
        mus, vecs = linalg.eig(ops.D)
    except linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver failed: {exc}") from None
    scale = max(1.0, float(np.max(np.abs(mus))))
    for mu in mus:
        if np.min(np.abs(mus - np.conj(mu))) > 1e-10 * scale:
            raise NumericError(f"eigenvalue {mu} has no conjugate partner")
    N = ops.N
    I = np.eye(N)
    lmax = float(ops.L_eigs[-1])
    eps = np.finfo(float).eps
    out = []
    for i in np.flatnonzero(np.abs(mus) > mu_floor):
        mu = complex(mus[i])
        lp = 1 / mu
        u = vecs[:N, i]
        ru = np.linalg.norm((I - 2 * lp * ops.B + lp * lp * ops.A) @ u) / np.linalg.norm(u)
        v = ops.Ahalf @ u
        rv = np.linalg.norm(ops.L @ v - 2 * lp * ops.P * v + lp * lp * v) / np.linalg.norm(v)
        bound = lmax * ru + 64 * eps * lmax * max(1.0, abs(lp)) ** 2
        out.append(NonlinearEigenpair(mu, lp, undilate(lp, ops.h, ops.spec.m), u, v,
                                      float(ru), float(rv), float(bound), bool(ru <= tol)))
    out.sort(key=lambda p: p.residual_u)
    return out


def _dirichlet_lowest(W: Polynomial, grid: Grid1D, index: int) -> float:
    x = grid.points[:, None]
    diag, off = _laplacian_bands(grid)
    w = linalg.eigh_tridiagonal(diag + W.eval(x) ** 2, off, select="i", select_range=(index, index),
                                eigvals_only=True)
    return float(w[0])


def schrodinger_eigen(W: Polynomial, grid: Grid1D | None = None, index: int = 0,
                      extrapolate: bool = True) -> float:
    """Eigenvalue number ``index`` of -d^2/dx^2 + W(x)^2 on [-R, R], Dirichlet.

    With ``extrapolate`` the 3-point result on the grid and on the grid with
    halved spacing are combined by Richardson extrapolation in spacing^2.
    """
    grid = grid or Grid1D(R=10.0, N=2000)
    if W.dim != 1 or W.degree() < 1:
        raise InputError("W must be a nonconstant polynomial in one variable")
    coarse = _dirichlet_lowest(W, grid, index)
    if not extrapolate:
        return coarse
    fine = _dirichlet_lowest(W, Grid1D(grid.R, 2 * grid.N + 1), index)
    return (4 * fine - coarse) / 3
