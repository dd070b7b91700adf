"""余弦級数ルーター - 部分和とディリクレ核"""
import logging

from fastapi import APIRouter, Query
from pydantic import BaseModel, Field

from api.errors import to_http_exception
from lab import gallery
from lab.series import cosine_partial_sum, dirichlet_kernel

# ロギング設定
logger = logging.getLogger(__name__)

router = APIRouter(prefix="/series", tags=["series"])


class PartialSumRequest(BaseModel):
    sequence: str
    N: int = Field(..., ge=0)
    x: float


class ValueResponse(BaseModel):
    value: float


@router.post("/partial-sum", response_model=ValueResponse)
def partial_sum(request: PartialSumRequest) -> ValueResponse:
    """S_N(x) = Σ_{n=0}^N a_n cos(nx)"""
    try:
        entry = gallery.get(request.sequence)
        if entry.sequence is None:
            raise ValueError(f"{request.sequence} は関数です")
        return ValueResponse(value=cosine_partial_sum(entry.sequence, request.N, request.x))
    except Exception as e:
        raise to_http_exception(e, "series")


@router.get("/dirichlet", response_model=ValueResponse)
def dirichlet(N: int = Query(..., ge=0), x: float = Query(...)) -> ValueResponse:
    """D_N(x)"""
    try:
        return ValueResponse(value=dirichlet_kernel(N, x))
    except Exception as e:
        raise to_http_exception(e, "series")
