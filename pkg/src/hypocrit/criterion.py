"""Leading trace coefficient H_{0;n,k} and the nonvanishing verdicts built on it.

Three independent routes compute H_0 = int int tr sigma_k dx dxi:

* ``closedQ0``   : Q_m = 0 closed form, 0 for odd n and
                   2 (-1)^l C_n (n-1)!/((k-1)...(k-n)) int (P_m+1)^{n-k} dx for n = 2l;
* ``semiNumeric``: 2 C_n int T^{n-k} Re C_{n,k}(tau1, tau2) dx with the fiber
                   integral from its r-form;
* ``directOracle``: brute-force 2n-dimensional quadrature of tr sigma_k (n <= 2).
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from scipy import interpolate, optimize

from . import fiber
from .errors import DomainError, HypocritError, InputError, NumericError
from .poly import sphere_samples
from .quad import integrate_Rn, sphere_volume
from .symbol import ProblemSpec, polar_limit, tau_decomposition, tr_sigma_k

LEMMA_THRESHOLD = fiber.RE_C24_ROOTS[0]


class Sign(str, Enum):
    positive = "positive"
    negative = "negative"
    indeterminate = "indeterminate"


def sign_of(value: float, err: float) -> Sign:
    if abs(value) <= 3 * err:
        return Sign.indeterminate
    return Sign.positive if value > 0 else Sign.negative


@dataclass
class RouteValue:
    value: float
    err_estimate: float
    converged: bool = True
    seconds: float = 0.0
    note: str = ""


@dataclass
class CriterionReport:
    n: int
    m: int
    k: int
    k_min: int
    routes: dict[str, RouteValue] = field(default_factory=dict)
    value: float | None = None
    err_estimate: float | None = None
    best_route: str | None = None
    sign: Sign = Sign.indeterminate
    nonvanishing: bool = False
    margin: float = 0.0
    consistent: bool = True
    verdict: str | None = None
    notes: list[str] = field(default_factory=list)


def threads() -> int:
    try:
        return max(1, int(os.environ.get("HYPOCRIT_THREADS", "1")))
    except ValueError:
        raise InputError("HYPOCRIT_THREADS must be an integer") from None


def trace_class_threshold(n: int, m: int) -> int:
    """Smallest integer k with k > n (m+1) / m."""
    if n < 1 or m < 1:
        raise InputError(f"need n >= 1 and m >= 1, got n={n}, m={m}")
    return n * (m + 1) // m + 1


def _require_k(spec: ProblemSpec, k: int) -> int:
    k_min = trace_class_threshold(spec.n, spec.m)
    if k < k_min:
        raise DomainError(f"k below trace-class threshold {k_min}")
    return k_min


def moment(spec: ProblemSpec, exponent: float, tol: float = 1e-12) -> RouteValue:
    """int_{R^n} (P_m(x) + 1)^exponent dx."""
    if spec.n > 3:
        raise DomainError("moment quadrature supports n <= 3")
    if -exponent * spec.m <= spec.n:
        raise DomainError(f"moment with exponent {exponent} diverges for n={spec.n}, m={spec.m}")
    res = integrate_Rn(lambda x: (spec.P_m.eval(x) + 1.0) ** exponent, spec.n, tol=tol, rtol=tol)
    return RouteValue(float(res.value), res.err, res.converged)


def closed_q0_prefactor(n: int, k: int) -> float:
    """2 Re{i^n} C_n (n-1)! / ((k-1)...(k-n)); zero for odd n."""
    if n % 2:
        return 0.0
    denom = math.prod(k - j for j in range(1, n + 1))
    return 2 * (-1) ** (n // 2) * sphere_volume(n) * math.factorial(n - 1) / denom


def H0_closed_Q0(spec: ProblemSpec, k: int, tol: float = 1e-12, exponent: str = "n-k") -> RouteValue:
    """Closed form for Q_m = 0.

    ``exponent="n-k"`` uses the moment int (P_m+1)^{n-k}; ``"-k"`` the
    printed moment int (P_m+1)^{-k}, kept for the discrepancy record.
    """
    if not spec.q_top_zero:
        raise InputError("H0_closed_Q0 needs Q_m = 0")
    _require_k(spec, k)
    n = spec.n
    if n % 2:
        return RouteValue(0.0, 0.0, True, note="odd n: vanishes identically")
    if n > 3:
        raise DomainError("closed form moment needs n <= 3")
    e = n - k if exponent == "n-k" else -k
    mom = moment(spec, e, tol)
    pref = closed_q0_prefactor(n, k)
    val = pref * mom.value
    err = abs(pref) * mom.err_estimate + 4 * np.finfo(float).eps * abs(val)
    return RouteValue(val, err, mom.converged, note=f"moment exponent {e}")


def H0_semi_numeric(spec: ProblemSpec, k: int, tol: float = 1e-8) -> RouteValue:
    """Outer radial-angular quadrature over x of the fiber integral.

    Convergence target is ``tol * max(1, |H0|)``.  The returned error adds
    the outer estimate and the integrated inner (fiber) error.
    """
    _require_k(spec, k)
    n = spec.n
    if n > 3:
        raise DomainError("semi-numeric route supports n <= 3")
    Cn = sphere_volume(n)
    inner_tol = max(1e-14, 1e-3 * tol)
    flags = {"inner_ok": True}

    def g(x):
        T, t1, t2 = tau_decomposition(spec, x)
        vals, errs, ok = fiber.c_nk_rform_batch(np.clip(t1, -1, 1), t2, n, k, inner_tol)
        flags["inner_ok"] &= ok
        w = 2 * Cn * T ** (n - k)
        return np.stack([w * vals.real, w * errs])

    t0 = time.perf_counter()
    res = integrate_Rn(g, n, tol=tol, rtol=tol)
    value = float(res.value[0])
    err = float(res.err_estimate[0] + abs(res.value[1]))
    ok = res.converged and flags["inner_ok"]
    if not ok:
        raise NumericError(f"semi-numeric quadrature did not converge (err {err:.3g})",
                           partial=RouteValue(value, err, False))
    return RouteValue(value, err, ok, time.perf_counter() - t0)


def H0_direct_oracle(spec: ProblemSpec, k: int, tol: float = 1e-3, atol: float = 1e-9) -> RouteValue:
    """Iterated quadrature of tr sigma_k over x (outer) and xi (inner), n <= 2."""
    _require_k(spec, k)
    n = spec.n
    if n > 2:
        raise DomainError("direct oracle supports n <= 2 only")
    flags = {"inner_ok": True}

    def g(x):
        # xi = <x>^m * eta keeps the inner mapping on the scale where tr sigma_k lives
        s = (1.0 + np.sum(x * x, axis=-1)) ** (spec.m / 2)

        def inner(eta):
            xi = s[:, None, None] * eta[None, :, :]
            return tr_sigma_k(spec, x[:, None, :], xi, k) * (s ** n)[:, None]

        r = integrate_Rn(inner, n, tol=0.1 * atol, rtol=0.1 * tol, max_level=4)
        flags["inner_ok"] &= r.converged
        return np.stack([np.asarray(r.value), np.asarray(r.err_estimate)])

    t0 = time.perf_counter()
    res = integrate_Rn(g, n, tol=atol, rtol=tol, max_level=5)
    value = float(res.value[0])
    err = float(res.err_estimate[0] + abs(res.value[1]))
    ok = res.converged and flags["inner_ok"]
    if not ok:
        raise NumericError(f"direct oracle did not converge (err {err:.3g})",
                           partial=RouteValue(value, err, False))
    return RouteValue(value, err, ok, time.perf_counter() - t0)


def _consistent(routes: dict[str, RouteValue]) -> tuple[bool, list[str]]:
    bad = []
    names = list(routes)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            ra, rb = routes[a], routes[b]
            slack = 3 * (ra.err_estimate + rb.err_estimate) + 1e-12 * max(1.0, abs(ra.value), abs(rb.value))
            if abs(ra.value - rb.value) > slack:
                bad.append(f"{a}={ra.value:.10g} vs {b}={rb.value:.10g} (slack {slack:.3g})")
    return not bad, bad


VERDICT_SATISFIED = ("criterion satisfied: Tr D(h)^{k} has nonzero leading coefficient, so the nonlinear "
                     "eigenvalue problem has a nontrivial solution for all small h and the associated "
                     "operator is not analytic hypoelliptic at 0")
VERDICT_INCONCLUSIVE = ("inconclusive at leading order: H_0 vanishes within error; "
                        "higher-order coefficients would be needed")


def classify(spec: ProblemSpec, k: int, tol: float = 1e-8, oracle: bool = False,
             oracle_tol: float = 1e-3) -> CriterionReport:
    """Run every applicable route and issue the leading-order verdict."""
    k_min = _require_k(spec, k)
    rep = CriterionReport(n=spec.n, m=spec.m, k=k, k_min=k_min)
    if spec.q_top_zero and (spec.n % 2 or spec.n <= 3):
        rep.routes["closedQ0"] = H0_closed_Q0(spec, k, tol=min(1e-12, tol))
    if spec.n <= 3:
        rep.routes["semiNumeric"] = H0_semi_numeric(spec, k, tol)
    if oracle:
        if spec.n <= 2:
            rep.routes["directOracle"] = H0_direct_oracle(spec, k, oracle_tol)
        else:
            rep.notes.append("direct oracle unsupported for n >= 3")
    if not rep.routes:
        raise DomainError(f"no route available for n = {spec.n}")

    rep.consistent, problems = _consistent(rep.routes)
    if not rep.consistent:
        rep.notes.extend(problems)
        return rep
    # analytic zero (odd n, Q_m = 0) is exact; otherwise pick the tightest estimate
    best = min(rep.routes, key=lambda r: (rep.routes[r].err_estimate, r != "closedQ0"))
    rv = rep.routes[best]
    rep.best_route, rep.value, rep.err_estimate = best, rv.value, rv.err_estimate
    rep.sign = sign_of(rv.value, rv.err_estimate)
    rep.margin = abs(rv.value) / rv.err_estimate if rv.err_estimate > 0 else (math.inf if rv.value else 0.0)
    rep.nonvanishing = abs(rv.value) > 3 * rv.err_estimate
    rep.verdict = VERDICT_SATISFIED.format(k=k) if rep.nonvanishing else VERDICT_INCONCLUSIVE
    return rep


@dataclass(frozen=True)
class TauRange:
    inf: float
    sup: float
    inf_witness: tuple
    sup_witness: tuple
    inf_at_infinity: bool
    sup_at_infinity: bool


def _tau1_sq(spec, x):
    _, t1, _ = tau_decomposition(spec, x)
    return t1 * t1


def _refine_on_sphere(fun, start, n):
    if n == 1:
        return float(fun(start)), np.asarray(start)
    if n == 2:
        th0 = math.atan2(start[1], start[0])
        step = 2 * math.pi / 1000
        res = optimize.minimize_scalar(lambda th: float(fun(np.array([math.cos(th), math.sin(th)]))),
                                       bounds=(th0 - step, th0 + step), method="bounded",
                                       options={"xatol": 1e-12})
        return float(res.fun), np.array([math.cos(res.x), math.sin(res.x)])
    res = optimize.minimize(lambda y: float(fun(y / np.linalg.norm(y))), start, method="Nelder-Mead",
                            options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
    y = res.x / np.linalg.norm(res.x)
    return float(res.fun), y


def tau1_range(spec: ProblemSpec, budget: int = 20000) -> TauRange:
    """Infimum and supremum of tau1^2 over R^n.

    Interior values come from dense sampling on nested spheres, values at
    infinity from the ray limits P_m(w)^2 / (P_m(w)^2 + Q_m(w)^2); both
    extremes are polished by a local optimizer.
    """
    n = spec.n
    if n > 3:
        raise DomainError("tau1_range supports n <= 3")
    dirs = sphere_samples(n, 1000 if n == 2 else max(2, budget // 4))
    lim = polar_limit(spec, dirs)
    i_lo, i_hi = int(np.argmin(lim)), int(np.argmax(lim))
    lim_lo, w_lo = _refine_on_sphere(lambda w: polar_limit(spec, w), dirs[i_lo], n)
    neg_hi, w_hi = _refine_on_sphere(lambda w: -polar_limit(spec, w), dirs[i_hi], n)
    lim_hi = -neg_hi

    radii = np.concatenate([[0.0], np.geomspace(1e-2, 1e3, 80)])
    sub = sphere_samples(n, max(2, budget // len(radii)))
    pts = (radii[:, None, None] * sub[None, :, :]).reshape(-1, n)
    vals = _tau1_sq(spec, pts)
    j_lo, j_hi = int(np.argmin(vals)), int(np.argmax(vals))
    in_lo, x_lo = float(vals[j_lo]), pts[j_lo]
    in_hi, x_hi = float(vals[j_hi]), pts[j_hi]
    for sgn in (1, -1):
        start = x_lo if sgn == 1 else x_hi
        res = optimize.minimize(lambda x: sgn * float(_tau1_sq(spec, x)), start, method="Nelder-Mead",
                                options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
        if sgn == 1 and res.fun < in_lo:
            in_lo, x_lo = float(res.fun), res.x
        if sgn == -1 and -res.fun > in_hi:
            in_hi, x_hi = float(-res.fun), res.x

    inf_lim = lim_lo < in_lo
    sup_lim = lim_hi > in_hi
    return TauRange(
        inf=min(lim_lo, in_lo), sup=max(lim_hi, in_hi),
        inf_witness=tuple(float(v) for v in (w_lo if inf_lim else x_lo)),
        sup_witness=tuple(float(v) for v in (w_hi if sup_lim else x_hi)),
        inf_at_infinity=inf_lim, sup_at_infinity=sup_lim,
    )


def tau1_inf(spec: ProblemSpec, budget: int = 20000) -> float:
    return tau1_range(spec, budget).inf


class LemmaClass(str, Enum):
    allBelowThreshold = "allBelowThreshold"
    allAboveThreshold = "allAboveThreshold"
    mixed = "mixed"


@dataclass(frozen=True)
class LemmaReport:
    classification: LemmaClass
    threshold: float
    tau_range: TauRange
    predicted_sign: Sign
    printed_claim: Sign
    printed_polynomial_sign: Sign


def lemma_n2_classify(spec: ProblemSpec, budget: int = 20000) -> LemmaReport:
    """Place the range of tau1^2 relative to (3 - sqrt 3)/4.

    ``predicted_sign`` follows the adjudicated Re C_{2,4}, which is >= 0
    below the threshold and <= 0 above it.  ``printed_claim`` is the
    direction stated alongside the threshold, and
    ``printed_polynomial_sign`` what the printed polynomial would imply.
    """
    if spec.n != 2:
        raise DomainError(f"lemma classification needs n = 2, got n = {spec.n}")
    tr = tau1_range(spec, budget)
    if tr.inf >= LEMMA_THRESHOLD:
        cls, pred, claim = LemmaClass.allAboveThreshold, Sign.negative, Sign.negative
    elif tr.sup <= LEMMA_THRESHOLD:
        cls, pred, claim = LemmaClass.allBelowThreshold, Sign.positive, Sign.positive
    else:
        cls, pred, claim = LemmaClass.mixed, Sign.indeterminate, Sign.indeterminate
    flip = {Sign.positive: Sign.negative, Sign.negative: Sign.positive, Sign.indeterminate: Sign.indeterminate}
    pred = pred if fiber.PRINTED_C2K_SIGN == -1 else flip[pred]
    printed_poly = flip[pred] if fiber.PRINTED_C2K_SIGN == -1 else pred
    return LemmaReport(cls, LEMMA_THRESHOLD, tr, pred, claim, printed_poly)


@dataclass
class SweepRow:
    alpha: float
    H0: float | None
    err: float | None
    sign: Sign
    nonvanishing: bool
    k_min: int
    route: str
    error: str = ""


@dataclass
class SweepResult:
    rows: list[SweepRow]
    crossings: list[float]


CSV_COLUMNS = ("alpha", "H0", "err", "sign", "nonvanishing", "kMin", "route")


def alpha_sweep(family: Callable[[float], ProblemSpec], k: int, alphas: Sequence[float],
                tol: float = 1e-8) -> SweepResult:
    """H0 along a one-parameter family; per-point failures are recorded, not raised."""

    def one(alpha):
        try:
            spec = family(alpha)
            k_min = _require_k(spec, k)
            rv = H0_semi_numeric(spec, k, tol)
            s = sign_of(rv.value, rv.err_estimate)
            return SweepRow(alpha, rv.value, rv.err_estimate, s, abs(rv.value) > 3 * rv.err_estimate,
                            k_min, "semiNumeric")
        except HypocritError as exc:
            partial = getattr(exc, "partial", None)
            return SweepRow(alpha, getattr(partial, "value", None), getattr(partial, "err_estimate", None),
                            Sign.indeterminate, False, -1, "semiNumeric", f"{exc.kind}: {exc}")

    alphas = [float(a) for a in alphas]
    with ThreadPoolExecutor(max_workers=threads()) as pool:
        rows = list(pool.map(one, alphas))
    return SweepResult(rows, locate_sign_changes(rows))


def locate_sign_changes(rows: Sequence[SweepRow]) -> list[float]:
    """Bisect a monotone cubic interpolant of H0(alpha) between definite sign flips."""
    good = [r for r in rows if r.H0 is not None and not r.error]
    good.sort(key=lambda r: r.alpha)
    if len(good) < 2:
        return []
    a = np.array([r.alpha for r in good])
    v = np.array([r.H0 for r in good])
    interp = interpolate.PchipInterpolator(a, v)
    out = []
    for r0, r1 in zip(good, good[1:]):
        if {r0.sign, r1.sign} == {Sign.positive, Sign.negative}:
            out.append(float(optimize.bisect(interp, r0.alpha, r1.alpha, xtol=1e-12)))
    return out


def tau_moment(spec: ProblemSpec, weight: Callable, power: float, tol: float = 1e-12) -> float:
    """int_{R^n} weight(tau1, tau2) T^power dx."""
    def g(x):
        T, t1, t2 = tau_decomposition(spec, x)
        return weight(t1, t2) * T**power

    return float(integrate_Rn(g, spec.n, tol=tol, rtol=tol, raise_on_failure=True).value)


@dataclass(frozen=True)
class Discrepancy:
    name: str
    printed: float
    resolved: float
    note: str


def printed_formula_discrepancies(spec: ProblemSpec, k: int) -> list[Discrepancy]:
    """Values where the printed formulas and the oracle-checked ones part ways."""
    adj = fiber.adjudicate_c2k_sign()
    out = [Discrepancy(
        "c2kClosedFormSign",
        float(fiber.C_2k_printed(1.0, 0.0, 4).real),
        float(fiber.C_2k_closed(1.0, 0.0, 4).real),
        f"C_2,4 at tau=(1,0); printed closed form carries sign {adj.sign:+d} relative to the r-form oracle "
        f"(max deviation {adj.max_dev_printed:.3g} printed vs {adj.max_dev_derived:.3g} derived)",
    )]
    n = spec.n
    if spec.q_top_zero and n == 2:
        out.append(Discrepancy(
            "momentExponent",
            H0_closed_Q0(spec, k, exponent="-k").value,
            H0_closed_Q0(spec, k, exponent="n-k").value,
            f"moment int (P_m+1)^e dx with printed e=-{k} vs Jacobian-consistent e={n - k}",
        ))
    if n == 2 and k == 3:
        out.append(Discrepancy(
            "reC23Sign", float(fiber.re_C23_printed(1.0, 0.0)), float(fiber.re_C23(1.0, 0.0)),
            "Re C_2,3 at tau=(1,0): printed expression vs adjudicated sign",
        ))
    if n == 2 and k == 4:
        u = tau1_range(spec).inf
        out.append(Discrepancy(
            "reC24Sign", float(fiber.re_C24_printed(u)), float(fiber.re_C24_poly(u)),
            f"Re C_2,4 at u = inf tau1^2 = {u:.6g}: printed polynomial vs adjudicated sign",
        ))
    if n == 1 and k == 3 and not spec.q_top_zero:
        I = tau_moment(spec, lambda t1, t2: t1 * t2 * t2, -2.0)
        out.append(Discrepancy(
            "H013Coefficient", -1.5 * math.pi * I, -3 * math.pi * I,
            "coefficient of int tau1 tau2^2 T^-2 dx: printed -3pi/2, quadrature-verified -3pi",
        ))
    if n == 3 and k == 5 and not spec.q_top_zero:
        I = tau_moment(spec, lambda t1, t2: t1 * t2**4, -2.0)
        out.append(Discrepancy(
            "H035Coefficient", 5 * math.pi / 8 * I, 2.5 * math.pi**2 * I,
            "coefficient of int tau1 tau2^4 T^-2 dx: printed 5pi/8, quadrature-verified 5pi^2/2",
        ))
    return out
