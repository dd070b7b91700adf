"""GM 条件ルーター - 証明書の検査と二進ブロック統計"""
import logging
from typing import List, Optional

from fastapi import APIRouter
from pydantic import BaseModel, Field

from api.errors import to_http_exception
from lab import gallery
from lab.gm_analysis import (
    DyadicStats,
    GMCertificate,
    RadialProfile,
    default_x_grid,
    dyadic_stats,
    gm_fit_certificate,
    gm_verify,
)

# ロギング設定
logger = logging.getLogger(__name__)

router = APIRouter(prefix="/gm", tags=["gm"])


class VerifyRequest(BaseModel):
    """GM 条件の検査リクエスト（C を省略すると当てはめる）"""
    function: str
    C: Optional[float] = Field(default=None, ge=0.0)
    nu: int = Field(default=1, ge=1)
    x_grid: Optional[List[float]] = None


class DyadicRequest(BaseModel):
    """二進ブロック統計のリクエスト"""
    function: str
    nu: int = Field(default=1, ge=1)
    n_min: int = 0
    n_max: int = 20


def _profile(name: str) -> RadialProfile:
    entry = gallery.get(name)
    if entry.profile is None:
        raise ValueError(f"{name} は数列です")
    return entry.profile


@router.post("/verify", response_model=GMCertificate)
def verify(request: VerifyRequest) -> GMCertificate:
    """グリッド上で GM 条件を検査する"""
    try:
        profile = _profile(request.function)
        grid = request.x_grid or default_x_grid(profile, lam=2.0 ** request.nu).tolist()
        if request.C is None:
            return gm_fit_certificate(profile, request.nu, grid)
        return gm_verify(profile, GMCertificate(C=request.C, nu=request.nu), grid)
    except Exception as e:
        raise to_http_exception(e, "gm")


@router.post("/dyadic", response_model=List[DyadicStats])
def dyadic(request: DyadicRequest) -> List[DyadicStats]:
    """ブロック n_min..n_max の A_n, B_n と good / bad"""
    try:
        return dyadic_stats(_profile(request.function), request.nu, (request.n_min, request.n_max))
    except Exception as e:
        raise to_http_exception(e, "gm")
