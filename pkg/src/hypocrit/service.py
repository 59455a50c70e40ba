"""HTTP service around the library.

The handler functions take and return the pydantic models in
:mod:`hypocrit.schemas`; the FastAPI routes are thin wrappers, and the CLI
calls the same handlers in-process unless pointed at a running server.
"""

from __future__ import annotations

import math

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from . import __version__
from .criterion import (CriterionReport, alpha_sweep, classify, lemma_n2_classify,
                        printed_formula_discrepancies, trace_class_threshold)
from .errors import HypocritError, InconsistentRoutesError, InputError, NumericError
from .operator_lab import Grid1D, build_operators, nonlinear_eigs, schrodinger_eigen, semiclassical_fit
from .poly import Polynomial
from .schemas import (CheckRequest, CheckResponse, ClassifyResponse, CriterionReportModel, CriterionRequest,
                      DiscrepancyModel, EigenpairModel, ErrorModel, ExperimentModel, FitTermModel, LemmaModel,
                      PolynomialModel, RouteModel, SchrodingerRequest, SchrodingerResponse, SpecModel,
                      SweepRequest, SweepResponse, SweepRowModel, TauRangeModel, VerifyRequest, VerifyResponse)
from .symbol import ProblemSpec, make_spec


def _poly(model: PolynomialModel) -> Polynomial:
    return Polynomial.from_record(model.model_dump())


def to_spec(model: SpecModel, samples: int | None = None) -> ProblemSpec:
    P = _poly(model.P)
    Q = _poly(model.Q) if model.Q is not None else None
    spec = make_spec(P, Q, m=model.m, samples=samples, name=model.name)
    if model.n is not None and model.n != spec.n:
        raise InputError(f"spec says n = {model.n} but P has dimension {spec.n}")
    return spec


def _cplx(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _opt(x):
    return None if x is None or not math.isfinite(x) else float(x)


def report_model(rep: CriterionReport) -> CriterionReportModel:
    return CriterionReportModel(
        n=rep.n, m=rep.m, k=rep.k, kMin=rep.k_min,
        routes={name: RouteModel(value=rv.value, errEstimate=rv.err_estimate, converged=bool(rv.converged),
                                 seconds=rv.seconds, note=rv.note)
                for name, rv in rep.routes.items()},
        value=rep.value, errEstimate=rep.err_estimate, bestRoute=rep.best_route, sign=rep.sign.value,
        nonvanishing=bool(rep.nonvanishing), margin=rep.margin if math.isfinite(rep.margin) else 1e308,
        consistent=bool(rep.consistent), verdict=rep.verdict, notes=list(rep.notes),
    )


# handlers

def check(req: CheckRequest) -> CheckResponse:
    spec = to_spec(req.spec, req.samples)
    ell = spec.ellipticity
    return CheckResponse(n=spec.n, m=spec.m, margin=ell.margin, witness=[float(v) for v in ell.witness],
                         ballMin=ell.ball_min, satisfied=ell.satisfied, flipped=spec.flipped,
                         kMin=trace_class_threshold(spec.n, spec.m))


def _run_classify(req: CriterionRequest) -> tuple[ProblemSpec, CriterionReport]:
    spec = to_spec(req.spec)
    rep = classify(spec, req.k, tol=req.tol, oracle=req.oracle, oracle_tol=req.oracleTol)
    if not rep.consistent:
        raise InconsistentRoutesError("routes disagree: " + "; ".join(rep.notes), report=report_model(rep))
    return spec, rep


def criterion(req: CriterionRequest) -> CriterionReportModel:
    return report_model(_run_classify(req)[1])


def classify_handler(req: CriterionRequest) -> ClassifyResponse:
    spec, rep = _run_classify(req)
    out = ClassifyResponse(
        report=report_model(rep),
        paperDiscrepancies=[DiscrepancyModel(name=d.name, printed=d.printed, resolved=d.resolved, note=d.note)
                            for d in printed_formula_discrepancies(spec, req.k)],
    )
    if spec.n == 2:
        lem = lemma_n2_classify(spec)
        tr = lem.tau_range
        out.tau1Range = TauRangeModel(inf=tr.inf, sup=tr.sup, infWitness=list(tr.inf_witness),
                                      supWitness=list(tr.sup_witness), infAtInfinity=tr.inf_at_infinity,
                                      supAtInfinity=tr.sup_at_infinity)
        out.lemma = LemmaModel(classification=lem.classification.value, threshold=lem.threshold,
                               predictedSign=lem.predicted_sign.value, printedClaim=lem.printed_claim.value,
                               printedPolynomialSign=lem.printed_polynomial_sign.value)
    return out


def verify(req: VerifyRequest) -> VerifyResponse:
    spec = to_spec(req.spec)
    grid = Grid1D(req.grid.R, req.grid.N)
    hs = np.geomspace(req.hGrid.min, req.hGrid.max, req.hGrid.points)
    ex = semiclassical_fit(spec, req.k, hs, grid, jmax=req.jmax)
    exp_model = ExperimentModel(
        k=req.k, R=grid.R, N=grid.N, hGrid=ex.h_grid.tolist(), traceDk=ex.traces.tolist(),
        scaledTrace=ex.scaled.tolist(),
        fit=[FitTermModel(j=j, exponent=t.exponent, H=t.H, stderr=_opt(t.stderr)) for j, t in enumerate(ex.terms)],
        residual=ex.residual, H0Stability=ex.H0_stability if math.isfinite(ex.H0_stability) else 1e308,
        subfits={name: _opt(v) for name, v in ex.subfits.items()},
    )
    out = VerifyResponse(experiment=exp_model)
    if req.eigH is not None:
        ops = build_operators(spec, req.eigH, grid)
        pairs = nonlinear_eigs(ops, tol=req.eigTol)
        accepted = [p for p in pairs if p.accepted]
        out.eigH, out.condAhalf, out.eigenpairCount = req.eigH, ops.cond_Ahalf, len(pairs)
        out.eigenpairs = [
            EigenpairModel(mu=_cplx(p.mu), lambdaPrime=_cplx(p.lambda_prime), lambda_=_cplx(p.lambda_),
                           residualU=p.residual_u, residualV=p.residual_v, residualBound=p.residual_bound,
                           accepted=bool(p.accepted), lambdaIsReal=bool(p.lambda_is_real))
            for p in accepted
        ]
    return out


def sweep(req: SweepRequest) -> SweepResponse:
    base = req.spec
    if base.Q is None:
        raise InputError("sweep needs a Q template; the family is Q(alpha) = alpha * Q")
    P = _poly(base.P)
    Q = _poly(base.Q)
    a = req.alpha
    alphas = np.linspace(a.min, a.max, a.points) if a.points > 1 else np.array([a.min])

    def family(alpha):
        return make_spec(P, Q * Polynomial.constant(Q.dim, alpha), m=base.m)

    res = alpha_sweep(family, req.k, alphas, tol=req.tol)
    rows = [SweepRowModel(alpha=r.alpha, H0=_opt(r.H0), err=_opt(r.err), sign=r.sign.value,
                          nonvanishing=bool(r.nonvanishing), kMin=r.k_min, route=r.route, error=r.error)
            for r in res.rows]
    return SweepResponse(k=req.k, rows=rows, crossings=res.crossings)


def schrodinger(req: SchrodingerRequest) -> SchrodingerResponse:
    W = _poly(req.W)
    grid = Grid1D(req.grid.R, req.grid.N)
    lam = schrodinger_eigen(W, grid, index=req.index, extrapolate=req.extrapolate)
    return SchrodingerResponse(index=req.index, eigenvalue=lam, sqrtEigenvalue=math.sqrt(max(lam, 0.0)),
                               R=grid.R, N=grid.N)


def error_model(exc: Exception) -> ErrorModel:
    if isinstance(exc, HypocritError):
        report = getattr(exc, "report", None)
        return ErrorModel(error=exc.kind, reason=str(exc), exitCode=exc.exit_code,
                          report=report.model_dump() if report is not None else None)
    return ErrorModel(error="internal", reason=f"{type(exc).__name__}: {exc}", exitCode=1)


def _status(exc: HypocritError) -> int:
    if isinstance(exc, InputError):
        return 400
    if isinstance(exc, InconsistentRoutesError):
        return 409
    if isinstance(exc, NumericError):
        return 500
    return 500


app = FastAPI(title="hypocrit", version=__version__)


@app.exception_handler(HypocritError)
async def _hypocrit_error(request: Request, exc: HypocritError):
    return JSONResponse(status_code=_status(exc), content=error_model(exc).model_dump(exclude_none=True))


@app.exception_handler(RequestValidationError)
async def _validation_error(request: Request, exc: RequestValidationError):
    first = exc.errors()[0] if exc.errors() else {}
    where = ".".join(str(p) for p in first.get("loc", ()) if p != "body")
    reason = f"{where}: {first.get('msg', 'invalid request')}" if where else first.get("msg", "invalid request")
    return JSONResponse(status_code=400, content=ErrorModel(error="input", reason=reason, exitCode=2).model_dump(
        exclude_none=True))


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/check", response_model=CheckResponse)
def post_check(req: CheckRequest):
    return check(req)


@app.post("/criterion", response_model=CriterionReportModel)
def post_criterion(req: CriterionRequest):
    return criterion(req)


@app.post("/classify", response_model=ClassifyResponse)
def post_classify(req: CriterionRequest):
    return classify_handler(req)


@app.post("/verify", response_model=VerifyResponse, response_model_by_alias=True)
def post_verify(req: VerifyRequest):
    return verify(req)


@app.post("/sweep", response_model=SweepResponse)
def post_sweep(req: SweepRequest):
    return sweep(req)


@app.post("/schrodinger", response_model=SchrodingerResponse)
def post_schrodinger(req: SchrodingerRequest):
    return schrodinger(req)


HANDLERS = {
    "check": (CheckRequest, check),
    "criterion": (CriterionRequest, criterion),
    "classify": (CriterionRequest, classify_handler),
    "verify": (VerifyRequest, verify),
    "sweep": (SweepRequest, sweep),
    "schrodinger": (SchrodingerRequest, schrodinger),
}
