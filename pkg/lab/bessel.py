"""正規化ベッセル関数 j_α

べき級数による評価（拡張精度で累積）、原点付近の上下包絡、
微分恒等式の残差、定数 S_α = sup_{x≥1} x^{α+1/2}|j_α(x)| の計算を提供します。
"""
import logging
import math
from functools import lru_cache
from typing import Optional

import mpmath
import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator
from scipy.special import gammaln, jv

from core.errors import InvalidOrderError, StabilizationError
from lab.numerics import refine_supremum

# ロギング設定
logger = logging.getLogger(__name__)

# この点までは級数、その先はライブラリの J_α（[40, 60] で級数と照合済み）
SERIES_LIMIT = 60.0
# 級数の打ち切り：次の項が部分和の 1e-16 倍未満
SERIES_RELATIVE_STOP = 1e-16
SERIES_MAX_TERMS = 10_000
# S_α の裾包絡と漸近振幅の許容差
STABILIZATION_TOL = 0.05


class BesselOrder(BaseModel):
    """ベッセル関数の次数 α（α ≥ -1/2）"""
    model_config = ConfigDict(frozen=True)

    alpha: float

    @field_validator("alpha")
    @classmethod
    def _check_alpha(cls, value: float) -> float:
        if not math.isfinite(value) or value < -0.5:
            raise ValueError(f"次数は α ≥ -1/2 である必要があります: {value}")
        return value


def as_order(alpha: "float | BesselOrder") -> BesselOrder:
    """数値または BesselOrder を BesselOrder に揃える

    Raises:
        InvalidOrderError: α < -1/2 の場合
    """
    if isinstance(alpha, BesselOrder):
        return alpha
    try:
        return BesselOrder(alpha=float(alpha))
    except ValidationError as e:
        raise InvalidOrderError(f"次数 α={alpha} は扱えません（α ≥ -1/2）", {"alpha": alpha}) from e


class EnvelopePair(BaseModel):
    """原点付近の上下包絡（部分和）"""
    lower: float
    upper: float
    order_m: int
    valid: bool

    @model_validator(mode="after")
    def _ordered(self) -> "EnvelopePair":
        if self.valid and self.lower > self.upper:
            raise ValueError("valid な包絡は lower ≤ upper を満たす必要があります")
        return self


def alternating_terms_from(order: BesselOrder, x: float) -> int:
    """級数の項が単調減少になる最初の添字 n（x ≤ 2√((n+1)(n+α+1))）"""
    alpha = order.alpha
    n = 0
    while x > 2.0 * math.sqrt((n + 1) * (n + alpha + 1)):
        n += 1
    return n


def _working_precision(x: float) -> int:
    # 最大項は e^x 程度なので、その桁数ぶん精度を上乗せする
    return 30 + int(x / math.log(10)) + 5


def _series_terms(order: BesselOrder, x: float):
    """級数の項を順に返す（第0項は1、比で漸化）。呼び出し側の精度で計算される"""
    alpha = mpmath.mpf(order.alpha)
    quarter = -(mpmath.mpf(x) / 2) ** 2
    term = mpmath.mpf(1)
    n = 0
    while True:
        yield n, term
        term = term * quarter / ((n + 1) * (n + alpha + 1))
        n += 1


def _series_value(order: BesselOrder, x: float) -> float:
    start = alternating_terms_from(order, x)
    with mpmath.workdps(_working_precision(x)):
        alpha = mpmath.mpf(order.alpha)
        quarter = -(mpmath.mpf(x) / 2) ** 2
        term = mpmath.mpf(1)
        partial = mpmath.mpf(0)
        n = 0
        while True:
            partial += term
            term = term * quarter / ((n + 1) * (n + alpha + 1))
            # 減少域に入った後は |剰余| ≤ |次の項|
            if n >= start and abs(term) < SERIES_RELATIVE_STOP * abs(partial):
                break
            n += 1
            if n >= SERIES_MAX_TERMS:
                logger.warning(f"[bessel] 級数の項数が上限に達しました: alpha={order.alpha}, x={x}")
                break
        return float(partial)


def _library_value(order: BesselOrder, x: float) -> float:
    alpha = order.alpha
    scale = math.exp(gammaln(alpha + 1.0) + alpha * math.log(2.0 / x))
    return float(scale * jv(alpha, x))


def eval_j(order: BesselOrder, x: float) -> float:
    """j_α(x) を評価する

    x ≤ 60 では拡張精度でべき級数を累積し、それより先はライブラリの J_α を
    j_α(x) = Γ(α+1)(2/x)^α J_α(x) で正規化して使います。

    Args:
        order: 次数
        x: 評価点（x ≥ 0）

    Returns:
        j_α(x)（絶対誤差 1e-13 以下）
    """
    if x < 0:
        raise ValueError(f"x は非負である必要があります: {x}")
    if x == 0.0:
        return 1.0
    if x <= SERIES_LIMIT:
        return _series_value(order, x)
    return _library_value(order, x)


def j_kernel(order: BesselOrder, x: np.ndarray) -> np.ndarray:
    """ベクトル化した j_α（求積のカーネル用）

    原点付近は2項のべき級数、それ以外は正規化したライブラリの J_α。
    """
    alpha = order.alpha
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < 1e-4
    if np.any(small):
        q = (x[small] / 2.0) ** 2
        out[small] = 1.0 - q / (alpha + 1.0) + q * q / (2.0 * (alpha + 1.0) * (alpha + 2.0))
    big = ~small
    if np.any(big):
        xb = x[big]
        out[big] = np.exp(gammaln(alpha + 1.0) + alpha * np.log(2.0 / xb)) * jv(alpha, xb)
    return out


def envelope_bounds(order: BesselOrder, x: float, m: int) -> EnvelopePair:
    """原点付近の上下包絡を返す

    lower は n = 2m+1 まで、upper は n = 2m までの部分和。
    x ≤ 2√(α+1) のときに限り valid で、lower ≤ j_α(x) ≤ upper が成り立ちます。
    """
    if m < 0:
        raise ValueError(f"m は非負整数である必要があります: {m}")
    valid = x <= 2.0 * math.sqrt(order.alpha + 1.0)
    with mpmath.workdps(_working_precision(x)):
        partial = mpmath.mpf(0)
        upper = lower = None
        for n, term in _series_terms(order, x):
            partial += term
            if n == 2 * m:
                upper = float(partial)
            if n == 2 * m + 1:
                lower = float(partial)
                break
    logger.debug(f"[bessel] 包絡: alpha={order.alpha}, x={x}, m={m}, lower={lower}, upper={upper}, valid={valid}")
    return EnvelopePair(lower=lower, upper=upper, order_m=m, valid=valid)


def derivative_identity_residual(order: BesselOrder, x: float, h: float) -> float:
    """微分恒等式 d/dx(x^{2α+2} j_{α+1}(x)) = (2α+2) x^{2α+1} j_α(x) の残差

    左辺は刻み h の中心差分。戻り値は |左辺| - |右辺|（符号付き）。
    """
    if not x > h > 0:
        raise ValueError(f"x > h > 0 である必要があります: x={x}, h={h}")
    alpha = order.alpha
    shifted = BesselOrder(alpha=alpha + 1.0)

    def weighted(t: float) -> float:
        return t ** (2 * alpha + 2) * eval_j(shifted, t)

    derivative = (weighted(x + h) - weighted(x - h)) / (2.0 * h)
    rhs = (2 * alpha + 2) * x ** (2 * alpha + 1) * eval_j(order, x)
    return abs(derivative) - abs(rhs)


def asymptotic_amplitude(order: BesselOrder) -> float:
    """x^{α+1/2}|j_α(x)| の x → ∞ での振幅 Γ(α+1) 2^α √(2/π)"""
    alpha = order.alpha
    return math.exp(math.lgamma(alpha + 1.0) + alpha * math.log(2.0)) * math.sqrt(2.0 / math.pi)


def default_s_cutoff(order: BesselOrder) -> float:
    return 200.0 + 20.0 * max(order.alpha, 0.0)


@lru_cache(maxsize=128)
def compute_S(order: BesselOrder, x_max: Optional[float] = None) -> float:
    """S_α = sup_{x≥1} x^{α+1/2}|j_α(x)| を計算する

    [1, x_max] の格子で最大値を探して局所最大化で精密化し、裾の極大値が
    漸近振幅に近づいていることで打ち切りを確認します。α ≤ 1/2 では包絡が
    漸近振幅へ単調に増加するので、上限はその振幅です。

    Raises:
        StabilizationError: x_max までに裾の包絡が安定しない場合
    """
    cutoff = default_s_cutoff(order) if x_max is None else float(x_max)
    if cutoff < 1.0:
        raise ValueError(f"x_max は 1 以上である必要があります: {cutoff}")
    alpha = order.alpha

    def weighted(x: np.ndarray) -> np.ndarray:
        return np.power(x, alpha + 0.5) * np.abs(j_kernel(order, x))

    grid = np.linspace(1.0, cutoff, int((cutoff - 1.0) * 40) + 2)
    supremum, location = refine_supremum(weighted, grid, max_refinements=64)

    amplitude = asymptotic_amplitude(order)
    tail = grid[grid >= 0.75 * cutoff]
    tail_max, _ = refine_supremum(weighted, tail) if tail.size >= 3 else (supremum, location)
    deviation = abs(tail_max - amplitude) / amplitude
    if deviation > STABILIZATION_TOL:
        logger.error(f"[bessel] 裾包絡が未安定: alpha={alpha}, x_max={cutoff}, deviation={deviation:.3e}")
        raise StabilizationError(
            "S_α の裾包絡が x_max までに安定しませんでした",
            {"alpha": alpha, "x_max": cutoff, "deviation": deviation},
        )

    if alpha <= 0.5:
        supremum = max(supremum, amplitude)

    logger.info(f"[bessel] S_α を計算: alpha={alpha}, S={supremum:.12g}, at={location:.6g}, x_max={cutoff}")
    return float(supremum)


def s_growth_ratio(order: BesselOrder) -> float:
    """S_α / (α^{1/6} 2^α Γ(α+1))（α → ∞ で 0.6748… に近づく）"""
    alpha = order.alpha
    if alpha <= 0:
        raise ValueError(f"比は α > 0 でのみ定義されます: {alpha}")
    scale = math.exp(math.log(alpha) / 6.0 + alpha * math.log(2.0) + math.lgamma(alpha + 1.0))
    return compute_S(order) / scale
