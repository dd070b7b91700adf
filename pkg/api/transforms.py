"""ハンケル変換ルーター - 部分積分・広義積分・評価式"""
import logging
from typing import Dict, Optional

from fastapi import APIRouter
from pydantic import BaseModel, Field

from api.errors import to_http_exception
from lab import gallery
from lab.gm_analysis import GMCertificate, default_x_grid, gm_fit_certificate, gm_verify
from lab.transforms import (
    BoundReport,
    PartialIntegralResult,
    cossup_bounds,
    default_u_grid,
    hankel_limit,
    partial_hankel,
)

# ロギング設定
logger = logging.getLogger(__name__)

router = APIRouter(prefix="/transforms", tags=["transforms"])


class PartialRequest(BaseModel):
    function: str
    alpha: float = -0.5
    u: float = Field(..., ge=0.0)
    N: float = Field(..., ge=0.0)
    tol: float = Field(default=1e-10, gt=0.0)


class LimitRequest(BaseModel):
    function: str
    alpha: float = -0.5
    u: float = Field(..., ge=0.0)
    tol: float = Field(default=1e-8, gt=0.0)


class LimitResponse(BaseModel):
    function: str
    alpha: float
    u: float
    value: float
    closed_form: Optional[float] = None


class BoundRequest(BaseModel):
    """評価式のリクエスト（C を省略すると当てはめる）"""
    function: str
    alpha: float = -0.5
    N: float = Field(..., ge=0.0)
    C: Optional[float] = Field(default=None, ge=0.0)
    nu: int = Field(default=1, ge=1)
    u_min: float = Field(default=1e-3, gt=0.0)
    u_max: float = Field(default=1e3, gt=0.0)
    u_per_decade: int = Field(default=25, ge=1)


def _entry(name: str) -> gallery.GalleryEntry:
    entry = gallery.get(name)
    if entry.profile is None:
        raise ValueError(f"{name} は数列です")
    return entry


@router.post("/partial", response_model=PartialIntegralResult)
def partial(request: PartialRequest) -> PartialIntegralResult:
    """∫_0^N t^{2α+1} f(t) j_α(ut) dt"""
    try:
        entry = _entry(request.function)
        return partial_hankel(entry.profile, request.alpha, request.u, request.N, request.tol)
    except Exception as e:
        raise to_http_exception(e, "transforms")


@router.post("/limit", response_model=LimitResponse)
def limit(request: LimitRequest) -> LimitResponse:
    """H_α f(u)（発散する場合は 422）"""
    try:
        entry = _entry(request.function)
        value = hankel_limit(entry.profile, request.alpha, request.u, request.tol)
    except Exception as e:
        raise to_http_exception(e, "transforms")
    closed = entry.closed_form_transform
    expected = None
    if closed is not None and closed.alpha == request.alpha and closed.domain(request.u):
        expected = closed.formula(request.u)
    return LimitResponse(function=entry.name, alpha=request.alpha, u=request.u, value=value, closed_form=expected)


@router.post("/bound", response_model=Dict[str, BoundReport])
def bound(request: BoundRequest) -> Dict[str, BoundReport]:
    """評価式の4項と左辺（statement / proof の両方）"""
    try:
        entry = _entry(request.function)
        grid = default_x_grid(entry.profile, lam=2.0 ** request.nu)
        if request.C is None:
            cert = gm_fit_certificate(entry.profile, request.nu, grid)
        else:
            cert = gm_verify(entry.profile, GMCertificate(C=request.C, nu=request.nu), grid)
        u_grid = default_u_grid(request.u_min, request.u_max, request.u_per_decade)
        reports = cossup_bounds(entry.profile, request.alpha, request.N, cert, u_grid)
    except Exception as e:
        raise to_http_exception(e, "transforms")
    return {variant.value: report for variant, report in reports.items()}
