"""Sparse multivariate real polynomials.

A :class:`Polynomial` is a mapping from exponent vectors to real
coefficients.  It evaluates on batches of points, splits into homogeneous
parts, and round-trips through the ``{"dim": n, "terms": [{"e": [...],
"c": ...}]}`` record used by spec files.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
from scipy import optimize

from .errors import InputError

ELLIPTICITY_FLOOR = 1e-10


class Polynomial:
    """Real polynomial in ``dim`` variables with sparse storage.

    Terms with a zero coefficient are dropped, so two polynomials compare
    equal exactly when they have the same nonzero terms.
    """

    __slots__ = ("dim", "_terms", "_exps", "_coefs")

    def __init__(self, dim: int, terms: Mapping[tuple, float] | Iterable = ()):
        if int(dim) != dim or dim < 1:
            raise InputError(f"polynomial dimension must be a positive integer, got {dim!r}")
        self.dim = int(dim)
        items = terms.items() if isinstance(terms, Mapping) else terms
        merged: dict[tuple, float] = {}
        for e, c in items:
            e = tuple(int(v) for v in e)
            if len(e) != self.dim:
                raise InputError(f"exponent vector {e} does not have length {self.dim}")
            if any(v < 0 for v in e):
                raise InputError(f"negative exponent in {e}")
            c = float(c)
            if not np.isfinite(c):
                raise InputError(f"non-finite coefficient {c} for exponent {e}")
            merged[e] = merged.get(e, 0.0) + c
        self._terms = {e: c for e, c in sorted(merged.items()) if c != 0.0}
        if self._terms:
            self._exps = np.array(list(self._terms), dtype=np.int64)
            self._coefs = np.array(list(self._terms.values()))
        else:
            self._exps = np.zeros((0, self.dim), dtype=np.int64)
            self._coefs = np.zeros(0)

    # construction helpers
    @classmethod
    def zero(cls, dim: int) -> "Polynomial":
        return cls(dim)

    @classmethod
    def constant(cls, dim: int, c: float) -> "Polynomial":
        return cls(dim, {(0,) * dim: c})

    @classmethod
    def monomial(cls, exps: Iterable[int], c: float = 1.0) -> "Polynomial":
        exps = tuple(exps)
        return cls(len(exps), {exps: c})

    @classmethod
    def variable(cls, i: int, dim: int) -> "Polynomial":
        e = [0] * dim
        e[i] = 1
        return cls(dim, {tuple(e): 1.0})

    @property
    def terms(self) -> dict[tuple, float]:
        return dict(self._terms)

    def __len__(self):
        return len(self._terms)

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.dim == other.dim and self._terms == other._terms

    def __hash__(self):
        return hash((self.dim, tuple(self._terms.items())))

    def __repr__(self):
        if not self._terms:
            return f"Polynomial(dim={self.dim}, 0)"
        parts = []
        for e, c in self._terms.items():
            mono = "*".join(f"x{i + 1}^{p}" if p > 1 else f"x{i + 1}" for i, p in enumerate(e) if p)
            parts.append(f"{c:g}" + (f"*{mono}" if mono else ""))
        return f"Polynomial(dim={self.dim}, {' + '.join(parts)})"

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        """Maximum total degree; -1 for the zero polynomial."""
        if not self._terms:
            return -1
        return int(self._exps.sum(axis=1).max())

    def is_homogeneous(self, degree: int | None = None) -> bool:
        if not self._terms:
            return True
        degs = set(self._exps.sum(axis=1).tolist())
        return len(degs) == 1 and (degree is None or degs == {degree})

    def __call__(self, x):
        return self.eval(x)

    def eval(self, x):
        """Evaluate at one point (shape ``(dim,)``) or a batch ``(..., dim)``."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 or x.shape[-1] != self.dim:
            raise InputError(f"point has trailing dimension {x.shape[-1] if x.ndim else 0}, expected {self.dim}")
        out = np.zeros(x.shape[:-1])
        if not self._terms:
            return out if out.ndim else 0.0
        # per-variable power tables keep large batches cheap
        maxpow = self._exps.max(axis=0)
        powers = []
        for i in range(self.dim):
            tab = [np.ones(x.shape[:-1])]
            for _ in range(int(maxpow[i])):
                tab.append(tab[-1] * x[..., i])
            powers.append(tab)
        for e, c in zip(self._exps, self._coefs):
            term = np.full(x.shape[:-1], c)
            for i, p in enumerate(e):
                if p:
                    term = term * powers[i][p]
            out = out + term
        return out if out.ndim else float(out)

    # arithmetic
    def _check_dim(self, other):
        if other.dim != self.dim:
            raise InputError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = Polynomial.constant(self.dim, other)
        self._check_dim(other)
        out = dict(self._terms)
        for e, c in other._terms.items():
            out[e] = out.get(e, 0.0) + c
        return Polynomial(self.dim, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.dim, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Polynomial(self.dim, {e: c * other for e, c in self._terms.items()})
        self._check_dim(other)
        out: dict[tuple, float] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0.0) + c1 * c2
        return Polynomial(self.dim, out)

    __rmul__ = __mul__

    def __pow__(self, p: int):
        out = Polynomial.constant(self.dim, 1.0)
        for _ in range(p):
            out = out * self
        return out

    def compose_linear(self, M) -> "Polynomial":
        """Return ``x -> p(M @ x)`` for a square matrix ``M``."""
        M = np.asarray(M, dtype=float)
        if M.shape != (self.dim, self.dim):
            raise InputError(f"matrix shape {M.shape} does not match dimension {self.dim}")
        rows = [
            Polynomial(self.dim, {tuple(int(j == i) for j in range(self.dim)): M[r, i] for i in range(self.dim)})
            for r in range(self.dim)
        ]
        out = Polynomial.zero(self.dim)
        for e, c in self._terms.items():
            term = Polynomial.constant(self.dim, c)
            for r, p in enumerate(e):
                if p:
                    term = term * rows[r] ** p
            out = out + term
        return out

    # serialization
    def to_record(self) -> dict:
        return {"dim": self.dim, "terms": [{"e": list(e), "c": c} for e, c in self._terms.items()]}

    @classmethod
    def from_record(cls, rec: Mapping) -> "Polynomial":
        try:
            dim = rec["dim"]
            terms = [(t["e"], t["c"]) for t in rec.get("terms", [])]
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed polynomial record: {exc}") from None
        return cls(dim, terms)


@dataclass(frozen=True)
class HomogeneousDecomposition:
    parts: dict[int, Polynomial]
    top_degree: int
    dim: int = field(default=1)

    def part(self, j: int) -> Polynomial:
        return self.parts.get(j, Polynomial.zero(self.dim))

    def reconstruct(self) -> Polynomial:
        out = Polynomial.zero(self.dim)
        for p in self.parts.values():
            out = out + p
        return out


def eval_poly(p: Polynomial, x) -> float:
    return p.eval(x)


def homogeneous_decompose(p: Polynomial) -> HomogeneousDecomposition:
    groups: dict[int, dict] = {}
    for e, c in p.terms.items():
        groups.setdefault(sum(e), {})[e] = c
    parts = {j: Polynomial(p.dim, groups[j]) for j in sorted(groups)}
    return HomogeneousDecomposition(parts=parts, top_degree=p.degree(), dim=p.dim)


def sphere_samples(dim: int, samples: int, seed: int = 0) -> np.ndarray:
    """Deterministic, roughly uniform points on the unit sphere S^{dim-1}."""
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        th = 2 * np.pi * np.arange(samples) / samples
        return np.stack([np.cos(th), np.sin(th)], axis=-1)
    if dim == 3:
        # Fibonacci lattice
        i = np.arange(samples) + 0.5
        z = 1 - 2 * i / samples
        phi = np.pi * (1 + 5**0.5) * i
        s = np.sqrt(1 - z * z)
        return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=-1)
    g = np.random.default_rng(seed).standard_normal((samples, dim))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def ball_samples(dim: int, radius: float, samples: int, seed: int = 1) -> np.ndarray:
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((samples, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.random(samples) ** (1.0 / dim)
    pts = g * r[:, None]
    # radial rays through the sphere grid catch minima the random cloud misses
    rays = sphere_samples(dim, max(2, min(samples, 400)))
    radii = np.linspace(0.0, radius, 101)
    return np.concatenate([pts, (rays[:, None, :] * radii[None, :, None]).reshape(-1, dim)])


@dataclass(frozen=True)
class Ellipticity:
    """Outcome of the sampled ellipticity test.

    ``margin`` estimates min over the unit sphere of P_m^2 + Q_m^2 and
    ``ball_min`` the min of (P_m+1)^2 + Q_m^2 over the ball of radius 10.
    Both are sampling estimates, not certificates.
    """

    margin: float
    witness: np.ndarray
    ball_min: float

    @property
    def satisfied(self) -> bool:
        return self.margin > ELLIPTICITY_FLOOR and self.ball_min > ELLIPTICITY_FLOOR

    def __iter__(self):
        yield self.margin
        yield self.witness


def ellipticity_check(P_m: Polynomial, Q_m: Polynomial, samples: int | None = None) -> Ellipticity:
    if P_m.dim != Q_m.dim:
        raise InputError(f"dimension mismatch: P_m has {P_m.dim}, Q_m has {Q_m.dim}")
    m = P_m.degree()
    if m < 1 or not P_m.is_homogeneous(m):
        raise InputError("P_m must be homogeneous of degree >= 1")
    if not Q_m.is_zero() and not Q_m.is_homogeneous(m):
        raise InputError(f"Q_m must be zero or homogeneous of degree {m}")
    n = P_m.dim
    samples = 10_000 * n if samples is None else int(samples)
    if samples < 1:
        raise InputError("samples must be >= 1")

    def sq(y):
        return P_m.eval(y) ** 2 + Q_m.eval(y) ** 2

    omega = sphere_samples(n, samples)
    vals = sq(omega)
    order = np.argsort(vals, kind="stable")
    best_val, best_pt = float(vals[order[0]]), omega[order[0]]
    if n > 1:
        for idx in order[:10]:
            res = optimize.minimize(
                lambda y: float(sq(y / np.linalg.norm(y))),
                omega[idx],
                method="Nelder-Mead",
                options={"xatol": 1e-12, "fatol": 1e-300, "maxiter": 4000},
            )
            y = res.x / np.linalg.norm(res.x)
            if res.fun < best_val:
                best_val, best_pt = float(res.fun), y
    ball = ball_samples(n, 10.0, 20_000)
    ball_min = float(np.min((P_m.eval(ball) + 1.0) ** 2 + Q_m.eval(ball) ** 2))
    return Ellipticity(margin=best_val, witness=np.asarray(best_pt), ball_min=ball_min)
