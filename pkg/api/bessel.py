"""ベッセル関数ルーター - j_α の評価・包絡・S_α"""
import logging

from fastapi import APIRouter, Query
from pydantic import BaseModel, Field

from api.errors import to_http_exception
from lab.bessel import EnvelopePair, as_order, asymptotic_amplitude, compute_S, envelope_bounds, eval_j

# ロギング設定
logger = logging.getLogger(__name__)

router = APIRouter(prefix="/bessel", tags=["bessel"])


class EvalRequest(BaseModel):
    """j_α(x) の評価リクエスト"""
    alpha: float
    x: float = Field(..., ge=0.0)


class EvalResponse(BaseModel):
    alpha: float
    x: float
    value: float


class EnvelopeRequest(EvalRequest):
    """包絡リクエスト（m 番目の部分和の組）"""
    m: int = Field(..., ge=0)


class SResponse(BaseModel):
    alpha: float
    S: float
    asymptotic_amplitude: float


@router.post("/eval", response_model=EvalResponse)
def evaluate(request: EvalRequest) -> EvalResponse:
    """j_α(x) を評価する"""
    try:
        value = eval_j(as_order(request.alpha), request.x)
    except Exception as e:
        raise to_http_exception(e, "bessel")
    logger.info(f"[bessel] 評価: alpha={request.alpha}, x={request.x}, value={value:.15g}")
    return EvalResponse(alpha=request.alpha, x=request.x, value=value)


@router.post("/envelope", response_model=EnvelopePair)
def envelope(request: EnvelopeRequest) -> EnvelopePair:
    """原点付近の上下包絡"""
    try:
        return envelope_bounds(as_order(request.alpha), request.x, request.m)
    except Exception as e:
        raise to_http_exception(e, "bessel")


@router.get("/s", response_model=SResponse)
def s_constant(alpha: float = Query(..., description="次数 α ≥ -1/2")) -> SResponse:
    """S_α = sup_{x≥1} x^{α+1/2}|j_α(x)|"""
    try:
        order = as_order(alpha)
        return SResponse(alpha=alpha, S=compute_S(order), asymptotic_amplitude=asymptotic_amplitude(order))
    except Exception as e:
        raise to_http_exception(e, "bessel")
