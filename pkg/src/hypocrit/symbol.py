"""Problem specifications, the semiclassical rescaling and principal symbols.

After the dilation x -> tau x with h = tau^{-(m+1)} the problem becomes

    (-h^2 Delta + Q(x,h)^2 + (P(x,h) - z)^2) u = 0,
    P(x,h) = (P_m + 1) + sum_{j=1}^m h^{j/(m+1)} P_{m-j},
    Q(x,h) = Q_m + sum_{j=1}^m h^{j/(m+1)} Q_{m-j}.

Everything pointwise here is vectorized over leading axes of ``x``/``xi``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, NumericError, SpecViolation
from .poly import Ellipticity, HomogeneousDecomposition, Polynomial, ellipticity_check, homogeneous_decompose, sphere_samples


@dataclass(frozen=True)
class ProblemSpec:
    n: int
    m: int
    P: Polynomial
    Q: Polynomial
    P_parts: HomogeneousDecomposition
    Q_parts: HomogeneousDecomposition
    ellipticity: Ellipticity
    flipped: bool = False
    name: str = ""

    @property
    def P_m(self) -> Polynomial:
        return self.P_parts.part(self.m)

    @property
    def Q_m(self) -> Polynomial:
        return self.Q_parts.part(self.m)

    @property
    def q_top_zero(self) -> bool:
        return self.Q_m.is_zero()

    def to_record(self) -> dict:
        rec = {"n": self.n, "m": self.m, "P": self.P.to_record()}
        if not self.Q.is_zero():
            rec["Q"] = self.Q.to_record()
        return rec


def make_spec(P: Polynomial, Q: Polynomial | None = None, m: int | None = None,
              samples: int | None = None, name: str = "") -> ProblemSpec:
    """Validate ``(P, Q)`` and build a :class:`ProblemSpec`.

    A P_m that is negative on the sphere is negated (``flipped=True``).
    When Q_m vanishes, P_m must be sign-definite.  The ellipticity check
    is sampled; a failure raises :class:`SpecViolation`.
    """
    n = P.dim
    Q = Polynomial.zero(n) if Q is None else Q
    if Q.dim != n:
        raise SpecViolation(f"P has dimension {n} but Q has dimension {Q.dim}")
    deg = P.degree()
    if m is None:
        m = deg
    if deg != m or m < 1:
        raise SpecViolation(f"deg(P) = {deg} must equal m = {m} >= 1")
    if Q.degree() > m:
        raise SpecViolation(f"deg(Q) = {Q.degree()} exceeds m = {m}")

    flipped = False
    P_m = homogeneous_decompose(P).part(m)
    Q_m = homogeneous_decompose(Q).part(m)
    on_sphere = P_m.eval(sphere_samples(n, 2000 * n))
    if np.max(on_sphere) <= 0:
        P, P_m, flipped = -P, -P_m, True
        on_sphere = -on_sphere
    if Q_m.is_zero() and np.min(on_sphere) <= 0:
        raise SpecViolation("with Q_m = 0 the top part P_m must be sign-definite on the sphere")

    ell = ellipticity_check(P_m, Q_m, samples)
    if not ell.satisfied:
        raise SpecViolation(
            f"ellipticity condition violated: sphere margin {ell.margin:.3g}, "
            f"ball minimum {ell.ball_min:.3g} at witness {np.round(ell.witness, 6).tolist()}")
    return ProblemSpec(n=n, m=m, P=P, Q=Q, P_parts=homogeneous_decompose(P),
                       Q_parts=homogeneous_decompose(Q), ellipticity=ell, flipped=flipped, name=name)


def spec_from_record(rec: dict, samples: int | None = None) -> ProblemSpec:
    try:
        P = Polynomial.from_record(rec["P"])
    except (KeyError, TypeError):
        raise InputError("spec record needs a 'P' polynomial") from None
    Q = Polynomial.from_record(rec["Q"]) if rec.get("Q") is not None else None
    spec = make_spec(P, Q, m=rec.get("m"), samples=samples, name=rec.get("name", ""))
    if "n" in rec and rec["n"] != spec.n:
        raise SpecViolation(f"spec says n = {rec['n']} but P has dimension {spec.n}")
    return spec


@dataclass(frozen=True)
class SymbolPoint:
    T: np.ndarray | float
    tau1: np.ndarray | float
    tau2: np.ndarray | float
    a0: np.ndarray | float
    b0: np.ndarray | float


def _top_values(spec: ProblemSpec, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != spec.n:
        raise InputError(f"point has dimension {x.shape[-1]}, spec has n = {spec.n}")
    return spec.P_m.eval(x) + 1.0, spec.Q_m.eval(x)


def tau_decomposition(spec: ProblemSpec, x):
    """Return ``(T, tau1, tau2)`` with (P_m + 1, |Q_m|) = T (tau1, tau2)."""
    p1, q = _top_values(spec, x)
    T = np.hypot(p1, q)
    if np.any(T == 0):
        raise SpecViolation("T vanished: (P_m + 1, Q_m) = (0, 0) at a sample point")
    return T, p1 / T, np.abs(q) / T


def principal_symbols(spec: ProblemSpec, x, xi) -> SymbolPoint:
    xi = np.asarray(xi, dtype=float)
    p1, q = _top_values(spec, x)
    T2 = p1 * p1 + q * q
    T = np.sqrt(T2)
    a0 = 1.0 / (np.sum(xi * xi, axis=-1) + T2)
    return SymbolPoint(T=T, tau1=p1 / T, tau2=np.abs(q) / T, a0=a0, b0=a0 * p1)


def ipow(z, k: int):
    """Integer power by repeated squaring (no logarithms, no branch cuts)."""
    out = np.ones_like(z)
    base = z
    while k:
        if k & 1:
            out = out * base
        k >>= 1
        if k:
            base = base * base
    return out


def tr_sigma_k(spec: ProblemSpec, x, xi, k: int):
    """Trace of the k-th power of the 2x2 principal symbol of D(h).

    Equals 2 Re (b0 + i sqrt(a0 - b0^2))^k; the radicand is
    (xi^2 + Q_m^2) / (xi^2 + T^2)^2 >= 0.
    """
    if k < 1:
        raise InputError(f"k must be >= 1, got {k}")
    xi = np.asarray(xi, dtype=float)
    p1, q = _top_values(spec, x)
    xi2 = np.sum(xi * xi, axis=-1)
    denom = xi2 + p1 * p1 + q * q
    a0 = 1.0 / denom
    b0 = a0 * p1
    # closed-form radicand avoids cancellation in a0 - b0^2
    rad = (xi2 + q * q) / (denom * denom)
    if np.any(rad < -1e-12):
        raise NumericError("negative radicand in tr sigma_k")
    z = b0 + 1j * np.sqrt(np.maximum(rad, 0.0))
    out = 2.0 * ipow(z, k).real
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class SemiclassicalPolynomial:
    spec: ProblemSpec
    h: float
    P_h: Polynomial
    Q_h: Polynomial
    weights: dict = field(default_factory=dict)

    def P(self, x):
        return self.P_h.eval(x)

    def Q(self, x):
        return self.Q_h.eval(x)


def build_semiclassical(spec: ProblemSpec, h: float) -> SemiclassicalPolynomial:
    if not h > 0:
        raise InputError(f"h must be positive, got {h}")
    m, n = spec.m, spec.n
    weights = {j: h ** (j / (m + 1)) for j in range(m + 1)}
    P_h = spec.P_m + 1.0
    Q_h = spec.Q_m
    for j in range(1, m + 1):
        P_h = P_h + spec.P_parts.part(m - j) * weights[j]
        Q_h = Q_h + spec.Q_parts.part(m - j) * weights[j]
    return SemiclassicalPolynomial(spec=spec, h=h, P_h=P_h, Q_h=Q_h, weights=weights)


def undilate(lambda_prime: complex, h: float, m: int) -> complex:
    """Map a rescaled eigenvalue back: lambda = (lambda' - 1) h^{-m/(m+1)}."""
    if not h > 0:
        raise InputError(f"h must be positive, got {h}")
    return (lambda_prime - 1) * h ** (-m / (m + 1))


def polar_limit(spec: ProblemSpec, omega):
    """Limit of tau1^2 along the ray r*omega as r -> infinity."""
    pm = spec.P_m.eval(omega)
    qm = spec.Q_m.eval(omega)
    return pm * pm / (pm * pm + qm * qm)


__all__ = [
    "ProblemSpec", "SymbolPoint", "SemiclassicalPolynomial", "make_spec", "spec_from_record",
    "tau_decomposition", "principal_symbols", "tr_sigma_k", "build_semiclassical", "undilate",
    "ipow", "polar_limit",
]
