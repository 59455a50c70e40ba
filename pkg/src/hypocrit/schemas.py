"""Request and response models shared by the HTTP service and the CLI."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field, model_validator


class Term(BaseModel):
    e: list[int]
    c: float


class PolynomialModel(BaseModel):
    dim: int = Field(ge=1)
    terms: list[Term] = []


class SpecModel(BaseModel):
    n: Optional[int] = Field(default=None, ge=1)
    m: Optional[int] = Field(default=None, ge=1)
    P: PolynomialModel
    Q: Optional[PolynomialModel] = None
    name: str = ""


class HGrid(BaseModel):
    min: float = Field(default=0.02, gt=0)
    max: float = Field(default=0.2, gt=0)
    points: int = Field(default=8, ge=2)

    @model_validator(mode="after")
    def _ordered(self):
        if self.max <= self.min:
            raise ValueError("hGrid.max must exceed hGrid.min")
        return self


class GridModel(BaseModel):
    R: float = Field(default=8.0, gt=0)
    N: int = Field(default=800, ge=3)


class AlphaGrid(BaseModel):
    min: float = 0.05
    max: float = 0.5
    points: int = Field(default=10, ge=1)

    @model_validator(mode="after")
    def _ordered(self):
        if self.max < self.min:
            raise ValueError("alpha.max must be >= alpha.min")
        return self


# requests

class CheckRequest(BaseModel):
    spec: SpecModel
    samples: Optional[int] = Field(default=None, ge=1)


class CriterionRequest(BaseModel):
    spec: SpecModel
    k: int = Field(ge=1)
    tol: float = Field(default=1e-8, gt=0, lt=1)
    oracle: bool = False
    oracleTol: float = Field(default=1e-3, gt=0, lt=1)


class VerifyRequest(BaseModel):
    spec: SpecModel
    k: int = Field(ge=2)
    hGrid: HGrid = HGrid()
    grid: GridModel = GridModel()
    jmax: int = Field(default=4, ge=0)
    eigH: Optional[float] = Field(default=None, gt=0)
    eigTol: float = Field(default=1e-8, gt=0)


class SweepRequest(BaseModel):
    """Family P fixed, Q(alpha) = alpha * Q."""

    spec: SpecModel
    k: int = Field(ge=1)
    alpha: AlphaGrid = AlphaGrid()
    tol: float = Field(default=1e-8, gt=0, lt=1)


class SchrodingerRequest(BaseModel):
    W: PolynomialModel
    grid: GridModel = GridModel(R=10.0, N=2000)
    index: int = Field(default=0, ge=0)
    extrapolate: bool = True


# responses

class CheckResponse(BaseModel):
    n: int
    m: int
    margin: float
    witness: list[float]
    ballMin: float
    satisfied: bool
    flipped: bool
    kMin: int
    label: str = "sampled heuristic, not a certificate"


class RouteModel(BaseModel):
    value: float
    errEstimate: float
    converged: bool
    seconds: float
    note: str = ""


class CriterionReportModel(BaseModel):
    n: int
    m: int
    k: int
    kMin: int
    routes: dict[str, RouteModel]
    value: Optional[float]
    errEstimate: Optional[float]
    bestRoute: Optional[str]
    sign: str
    nonvanishing: bool
    margin: float
    consistent: bool
    verdict: Optional[str]
    notes: list[str]


class TauRangeModel(BaseModel):
    inf: float
    sup: float
    infWitness: list[float]
    supWitness: list[float]
    infAtInfinity: bool
    supAtInfinity: bool


class LemmaModel(BaseModel):
    classification: str
    threshold: float
    predictedSign: str
    printedClaim: str
    printedPolynomialSign: str


class DiscrepancyModel(BaseModel):
    name: str
    printed: float
    resolved: float
    note: str


class ClassifyResponse(BaseModel):
    report: CriterionReportModel
    tau1Range: Optional[TauRangeModel] = None
    lemma: Optional[LemmaModel] = None
    paperDiscrepancies: list[DiscrepancyModel]


class FitTermModel(BaseModel):
    j: int
    exponent: float
    H: float
    stderr: Optional[float]


class ExperimentModel(BaseModel):
    k: int
    R: float
    N: int
    hGrid: list[float]
    traceDk: list[float]
    scaledTrace: list[float]
    fit: list[FitTermModel]
    residual: float
    H0Stability: float
    subfits: dict[str, Optional[float]]


class EigenpairModel(BaseModel):
    mu: list[float]
    lambdaPrime: list[float]
    lambda_: list[float] = Field(alias="lambda")
    residualU: float
    residualV: float
    residualBound: float
    accepted: bool
    lambdaIsReal: bool

    model_config = {"populate_by_name": True}


class VerifyResponse(BaseModel):
    experiment: ExperimentModel
    eigH: Optional[float] = None
    condAhalf: Optional[float] = None
    eigenpairCount: int = 0
    eigenpairs: list[EigenpairModel] = []


class SweepRowModel(BaseModel):
    alpha: float
    H0: Optional[float]
    err: Optional[float]
    sign: str
    nonvanishing: bool
    kMin: int
    route: str
    error: str = ""


class SweepResponse(BaseModel):
    k: int
    rows: list[SweepRowModel]
    crossings: list[float]


class SchrodingerResponse(BaseModel):
    index: int
    eigenvalue: float
    sqrtEigenvalue: float
    R: float
    N: int


class ErrorModel(BaseModel):
    error: str
    reason: str
    exitCode: int
    report: Optional[dict] = None
