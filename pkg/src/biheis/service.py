"""HTTP service exposing the library: one endpoint per CLI subcommand.

The CLI talks to this app in-process by default; ``biheis serve`` runs it
under uvicorn for remote use.  Numerical-accuracy failures map to HTTP 409
so clients can distinguish them from bad requests (400/422).
"""

from __future__ import annotations

import math
from typing import Literal

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field, model_validator

from . import __version__
from .asymptotics import verify_theorem_heat
from .cut import classify
from .errors import (
    AccuracyError,
    BiHeisError,
    InvalidArgumentError,
    PoorAsymptoticRegimeError,
    SolverNoConvergenceError,
)
from .expmap import exp0_arrays
from .geometry import Covector, Point5, StructureParams, canonicalize
from .distance import distance
from .heatkernel import KernelQuery, kernel, product_kernel, vertical_kernel
from .midpoint import case2_tube_datum, laplace_expand, synthetic_quadratic_datum
from .verify import run_suite

app = FastAPI(title="biheis", version=__version__)


@app.exception_handler(BiHeisError)
async def _biheis_error(request: Request, exc: BiHeisError):
    if isinstance(exc, (AccuracyError, SolverNoConvergenceError, PoorAsymptoticRegimeError)):
        status = 409  # numerical-accuracy failure
    else:
        status = 400
    return JSONResponse(
        status_code=status,
        content={"error_type": type(exc).__name__, "message": str(exc)},
    )


class CovectorSpec(BaseModel):
    r1: float
    r2: float | None = None
    theta1: float
    theta2: float
    w: float

    def build(self) -> Covector:
        r2 = self.r2
        if r2 is None:
            if not (0.0 <= self.r1 <= 1.0):
                raise InvalidArgumentError("r1 must lie in [0, 1] to infer r2")
            r2 = math.sqrt(1.0 - self.r1 * self.r1)
        return Covector(self.r1, r2, self.theta1, self.theta2, self.w)


class AlphaModel(BaseModel):
    alpha: tuple[float, float] = (1.0, 1.0)

    def params(self) -> StructureParams:
        return canonicalize(*self.alpha)


class PointModel(AlphaModel):
    point: tuple[float, float, float, float, float]

    def point5(self) -> Point5:
        return Point5(*self.point)


class GeodesicRequest(AlphaModel):
    covector: CovectorSpec
    t_max: float = Field(gt=0.0)
    steps: int = Field(default=100, ge=1, le=100_000)


class GeodesicRow(BaseModel):
    t: float
    x1: float
    y1: float
    x2: float
    y2: float
    z: float
    rho1: float
    rho2: float


class GeodesicResponse(BaseModel):
    rows: list[GeodesicRow]


@app.post("/geodesic", response_model=GeodesicResponse)
def geodesic(req: GeodesicRequest) -> GeodesicResponse:
    params = req.params()
    p0 = req.covector.build()
    ts = np.linspace(0.0, req.t_max, req.steps + 1)
    x1, y1, x2, y2, z = exp0_arrays(
        p0.r1, p0.r2, p0.theta1, p0.theta2, p0.w, ts, params.alpha1, params.alpha2
    )
    rows = [
        GeodesicRow(
            t=float(ts[i]),
            x1=float(x1[i]),
            y1=float(y1[i]),
            x2=float(x2[i]),
            y2=float(y2[i]),
            z=float(z[i]),
            rho1=float(np.hypot(x1[i], y1[i])),
            rho2=float(np.hypot(x2[i], y2[i])),
        )
        for i in range(len(ts))
    ]
    return GeodesicResponse(rows=rows)


class CutResponse(BaseModel):
    is_cut: bool
    case: str | None
    fiber_dimension: int
    recovered_r: float | None
    recovered_w: float | None
    distance: float | None


@app.post("/cut", response_model=CutResponse)
def cut(req: PointModel) -> CutResponse:
    cls = classify(req.point5(), req.params())
    return CutResponse(
        is_cut=cls.is_cut,
        case=cls.case.value if cls.case else None,
        fiber_dimension=cls.fiber_dimension,
        recovered_r=cls.recovered_r2,
        recovered_w=cls.recovered_w,
        distance=cls.distance,
    )


class MinimizerModel(BaseModel):
    r1: float
    r2: float
    theta1: float
    theta2: float
    w: float
    t: float


class DistanceResponse(BaseModel):
    distance: float
    method: str
    minimizers: list[MinimizerModel]


@app.post("/distance", response_model=DistanceResponse)
def distance_endpoint(req: PointModel) -> DistanceResponse:
    res = distance(req.point5(), req.params())
    return DistanceResponse(
        distance=res.distance,
        method=res.method.value,
        minimizers=[
            MinimizerModel(
                r1=c.r1, r2=c.r2, theta1=c.theta1, theta2=c.theta2, w=c.w, t=t
            )
            for c, t in res.minimizers
        ],
    )


class HeatRequest(PointModel):
    t: list[float] = Field(min_length=1)
    precision: float = 1e-10


class HeatRow(BaseModel):
    t: float
    p: float


class HeatResponse(BaseModel):
    rows: list[HeatRow]


@app.post("/heat", response_model=HeatResponse)
def heat(req: HeatRequest) -> HeatResponse:
    params = req.params()
    q = req.point5()
    rows = []
    for t in req.t:
        if params.case.value == "Product":
            val = product_kernel(q, t, params)
        elif q.horizontal_norm == 0.0:
            val = vertical_kernel(q.z, t, params)
        else:
            val = kernel(KernelQuery(q, t, params, precision=req.precision))
        rows.append(HeatRow(t=t, p=val))
    return HeatResponse(rows=rows)


class FitResponse(BaseModel):
    regime: str
    predicted_k: float
    fiber_dimension: int
    k_hat: float
    C_hat: float
    residual: float
    d_squared: float
    passed: bool


@app.post("/fit", response_model=FitResponse)
def fit(req: PointModel) -> FitResponse:
    rep = verify_theorem_heat(req.params(), req.point5())
    return FitResponse(
        regime=rep.regime,
        predicted_k=rep.predicted_k,
        fiber_dimension=rep.fiber_dimension,
        k_hat=rep.fit.k_hat,
        C_hat=rep.fit.C_hat,
        residual=rep.fit.residual,
        d_squared=rep.fit.d_squared,
        passed=rep.passed,
    )


class VerifyRequest(BaseModel):
    suite: str = "all"
    seed: int = 0


class CheckModel(BaseModel):
    name: str
    status: str
    margin: float
    tolerance: float
    detail: str


class VerifyResponse(BaseModel):
    passed: bool
    checks: list[CheckModel]


@app.post("/verify", response_model=VerifyResponse)
def verify(req: VerifyRequest) -> VerifyResponse:
    try:
        checks = run_suite(req.suite, req.seed)
    except KeyError as exc:
        raise InvalidArgumentError(str(exc)) from exc
    return VerifyResponse(
        passed=all(c.passed for c in checks),
        checks=[
            CheckModel(
                name=c.name,
                status=c.status,
                margin=c.margin if math.isfinite(c.margin) else float("inf"),
                tolerance=c.tolerance,
                detail=c.detail,
            )
            for c in checks
        ],
    )


class LaplaceRequest(AlphaModel):
    mode: Literal["synthetic", "tube"] = "tube"
    point: tuple[float, float, float, float, float] = (0.0, 0.0, 0.0, 0.0, 1.0)
    t_list: list[float] | None = None

    @model_validator(mode="after")
    def _defaults(self):
        if self.t_list is None:
            if self.mode == "synthetic":
                self.t_list = [2.0**-k for k in range(4, 11)]
            else:
                self.t_list = [2.0**-k for k in range(9, 13)]
        return self


class LaplaceResponse(BaseModel):
    power: float
    constant: float


@app.post("/laplace", response_model=LaplaceResponse)
def laplace(req: LaplaceRequest) -> LaplaceResponse:
    if req.mode == "synthetic":
        datum = synthetic_quadratic_datum()
        power, const = laplace_expand(
            datum, lambda u: np.ones(u.shape[0]), req.t_list
        )
    else:
        _, tube = case2_tube_datum(req.params(), Point5(*req.point))
        power, const = laplace_expand(
            tube, lambda u: np.ones(u.shape[0]), req.t_list, gamma_points=8
        )
    return LaplaceResponse(power=power, constant=const)
