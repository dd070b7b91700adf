"""ハンケル変換の部分積分と評価式

部分積分 ∫_0^N t^{2α+1} f(t) j_α(ut) dt を振動を解像するパネル求積で計算し、
広義積分の極限（半周期シフトの反復平均）、一様収束の診断、
M_{2α+2}(f)、スティルチェス積分の上限、評価式の各項を提供します。
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, computed_field

from core.errors import DivergenceError, NonConvergenceError, ProfileError, UnboundedError
from lab.bessel import BesselOrder, as_order, compute_S, j_kernel
from lab.gm_analysis import (
    ONE_SIDED,
    GMCertificate,
    RadialProfile,
    integrate_profile,
    sample_edges,
    stieltjes,
    window_supremum,
)
from lab.numerics import shift_offsets, sign_change_edges

# ロギング設定
logger = logging.getLogger(__name__)

# 反復平均の段数の上限
MAX_AVERAGING_DEPTH = 12
# 地平線を倍にする回数の上限
MAX_HORIZON_DOUBLINGS = 10
# 振動数がこれ以下なら 0 とみなす
ZERO_FREQUENCY = 1e-12
# m_weight の格子の範囲（原点側・無限遠側）
WEIGHT_WINDOW = (1e-6, 1e6)
# sup_ibp の二進プローブ 2^k の範囲
DYADIC_PROBES = range(-20, 31)
# 評価式の判定に使う許容差
BOUND_TOLERANCE = 1e-9


class PartialIntegralResult(BaseModel):
    """部分積分 ∫_0^N t^{2α+1} f(t) j_α(ut) dt"""
    value: float
    error_estimate: float = Field(..., ge=0.0)
    u: float = Field(..., ge=0.0)
    N: float = Field(..., ge=0.0)
    alpha: float


class CellRow(BaseModel):
    """CSV の1行（alpha,u,N,value,error_estimate）"""
    alpha: float
    u: float
    N: float
    value: float
    error_estimate: float

    @classmethod
    def from_result(cls, result: PartialIntegralResult) -> "CellRow":
        return cls(alpha=result.alpha, u=result.u, N=result.N, value=result.value, error_estimate=result.error_estimate)


class BoundVariant(str, Enum):
    """評価式で使う S の種類"""
    STATEMENT = "statement"  # S_α
    PROOF = "proof"  # S_{α+1}


class BoundReport(BaseModel):
    """評価式の左辺と右辺の4項"""
    alpha: float
    N: float
    lhs: float
    lhs_u: Optional[float] = None
    term_partial: float
    term_boundary: float
    term_constant: float
    term_sup_ibp: float
    S_used: float
    variant: BoundVariant
    constant_factor: float
    m_weight: float
    tolerance: float = BOUND_TOLERANCE

    @computed_field
    @property
    def rhs(self) -> float:
        return math.fsum([self.term_partial, self.term_boundary, self.term_constant, self.term_sup_ibp])

    @computed_field
    @property
    def passed(self) -> bool:
        return self.lhs <= self.rhs + self.tolerance


def default_u_grid(lo: float = 1e-3, hi: float = 1e3, per_decade: int = 25) -> List[float]:
    """u の既定グリッド（u=0 と等比格子）"""
    count = int(round(per_decade * math.log10(hi / lo))) + 1
    return [0.0] + np.geomspace(lo, hi, count).tolist()


def _check_origin(profile: RadialProfile, order: BesselOrder) -> None:
    # t^{2α+1} f(t) が原点で可積分であること
    q = profile.origin_exponent()
    if q >= 2.0 * order.alpha + 2.0:
        raise ProfileError(
            f"t^(2α+1) f(t) が原点で可積分ではありません（q={q:g}, α={order.alpha:g}）",
            {"profile": profile.name, "alpha": order.alpha, "origin_exponent": q},
        )


def hankel_integrand(profile: RadialProfile, order: BesselOrder, u: float) -> Callable[[np.ndarray], np.ndarray]:
    """t ↦ t^{2α+1} f(t) j_α(ut)"""
    weight = 2.0 * order.alpha + 1.0

    def integrand(t: np.ndarray) -> np.ndarray:
        return np.power(t, weight) * profile(t) * j_kernel(order, u * t)

    return integrand


def hankel_segment(
    profile: RadialProfile,
    alpha: "float | BesselOrder",
    u: float,
    a: float,
    b: float,
    tol: float = 1e-10,
) -> Tuple[float, float]:
    """∫_a^b t^{2α+1} f(t) j_α(ut) dt と誤差推定

    パネル長は非滑らかな点とカーネルの振動 π/(2u) に合わせます。
    """
    order = as_order(alpha)
    if u < 0:
        raise ValueError(f"u は非負である必要があります: {u}")
    if b <= a or profile.is_zero():
        return 0.0, 0.0
    if a == 0.0:
        _check_origin(profile, order)
    max_panel = math.pi / (2.0 * u) if u > 0 else None
    result = integrate_profile(
        profile,
        hankel_integrand(profile, order, u),
        a,
        b,
        weight_exponent=2.0 * order.alpha + 1.0,
        origin_shift=0.0,
        max_panel=max_panel,
        tol=tol,
    )
    return result.value, result.error


def partial_hankel(
    profile: RadialProfile,
    alpha: "float | BesselOrder",
    u: float,
    N: float,
    tol: float = 1e-10,
) -> PartialIntegralResult:
    """部分積分 ∫_0^N t^{2α+1} f(t) j_α(ut) dt

    Raises:
        ProfileError: t^{2α+1} f(t) が原点で可積分でない場合
        QuadratureError: パネル予算内で許容誤差に到達しない場合
    """
    order = as_order(alpha)
    if N < 0:
        raise ValueError(f"N は非負である必要があります: {N}")
    value, error = hankel_segment(profile, order, u, 0.0, N, tol)
    logger.debug(f"[transforms] 部分積分: profile={profile.name}, α={order.alpha:g}, u={u:g}, N={N:g}, value={value:.15g}")
    return PartialIntegralResult(value=value, error_estimate=error, u=u, N=N, alpha=order.alpha)


def tail_frequencies(profile: RadialProfile, u: float) -> List[float]:
    """被積分関数の裾に現れる振動数（0 は除く）"""
    omega = profile.oscillation_frequency
    if omega <= 0:
        candidates = [u]
    else:
        candidates = [u + omega, abs(u - omega)]
    return sorted({f for f in candidates if f > ZERO_FREQUENCY}, reverse=True)


def _envelope_exponent(profile: RadialProfile, order: BesselOrder, u: float) -> float:
    # 裾での被積分関数の大きさ t^{e}（u > 0 ならカーネルが t^{-(α+1/2)} だけ減衰）
    p = profile.decay_hint.exponent
    kernel_decay = order.alpha + 0.5 if u > 0 else 0.0
    return 2.0 * order.alpha + 1.0 - p - kernel_decay


def _has_resonance(profile: RadialProfile, u: float) -> bool:
    omega = profile.oscillation_frequency
    return omega > 0 and abs(u - omega) <= ZERO_FREQUENCY


def hankel_limit(
    profile: RadialProfile,
    alpha: "float | BesselOrder",
    u: float,
    tol: float = 1e-8,
) -> float:
    """ハンケル変換 H_α f(u) = ∫_0^∞ t^{2α+1} f(t) j_α(ut) dt

    部分積分を裾の各振動数の半周期だけずらした点で評価し、反復ペア平均
    （深さ ≤ 12、振動数を順に巡回）で加速します。地平線 T を倍にしながら
    加速値の差がコーシー判定を満たしたところで返します。

    Raises:
        DivergenceError: 加速値がコーシー判定を満たさない、または裾が可積分でない場合
    """
    order = as_order(alpha)
    if u < 0:
        raise ValueError(f"u は非負である必要があります: {u}")
    if profile.is_zero():
        return 0.0
    _check_origin(profile, order)
    if profile.support_end is not None:
        value, _ = hankel_segment(profile, order, u, 0.0, profile.support_end, tol)
        logger.info(f"[transforms] 有限台の積分: profile={profile.name}, α={order.alpha:g}, u={u:g}, value={value:.15g}")
        return value

    context = {"profile": profile.name, "alpha": order.alpha, "u": u}
    exponent = _envelope_exponent(profile, order, u)
    frequencies = tail_frequencies(profile, u)

    if _has_resonance(profile, u) and exponent >= -1.0:
        raise DivergenceError(f"u={u:g} で振動が打ち消し合い、裾 t^{exponent:.3g} が可積分ではありません", context)
    if exponent >= 0.0:
        raise DivergenceError(f"裾の振幅 t^{exponent:.3g} が減衰しません", context)

    if not frequencies:
        try:
            value = integrate_profile(
                profile, hankel_integrand(profile, order, u), 0.0, math.inf, 2.0 * order.alpha + 1.0,
                origin_shift=0.0, tol=tol,
            ).value
        except NonConvergenceError as e:
            raise DivergenceError(f"u={u:g} の積分は無限遠で収束しません", context) from e
        logger.info(f"[transforms] 絶対収束する積分: profile={profile.name}, α={order.alpha:g}, value={value:.15g}")
        return value

    shifts = [math.pi / frequencies[k % len(frequencies)] for k in range(MAX_AVERAGING_DEPTH)]
    offsets, weights = shift_offsets(shifts)
    period = 2.0 * math.pi / frequencies[-1]
    start = profile.decay_hint.start
    horizon = max(16.0 * period, 4.0 * start, 1.0)
    segment_tol = tol / (4.0 * (offsets.size + MAX_HORIZON_DOUBLINGS))

    def accelerated(base: float, at_base: float) -> float:
        # I(T + o_j) を累積して重み付き平均を取る
        points = base + offsets
        values = np.empty_like(points)
        running, previous = at_base, base
        for j, point in enumerate(points):
            if point > previous:
                running += hankel_segment(profile, order, u, previous, point, segment_tol)[0]
                previous = point
            values[j] = running
        return float(values @ weights)

    at_horizon, _ = hankel_segment(profile, order, u, 0.0, horizon, segment_tol)
    previous_value = accelerated(horizon, at_horizon)
    differences: List[float] = []
    for _ in range(MAX_HORIZON_DOUBLINGS):
        at_horizon += hankel_segment(profile, order, u, horizon, 2.0 * horizon, segment_tol)[0]
        horizon *= 2.0
        value = accelerated(horizon, at_horizon)
        differences.append(abs(value - previous_value))
        logger.debug(f"[transforms] 加速: T={horizon:g}, value={value:.15g}, diff={differences[-1]:.3e}")
        if differences[-1] <= tol:
            logger.info(
                f"[transforms] 広義積分: profile={profile.name}, α={order.alpha:g}, u={u:g}, "
                f"value={value:.15g}, T={horizon:g}"
            )
            return value
        previous_value = value

    logger.warning(f"[transforms] コーシー判定に失敗: profile={profile.name}, u={u:g}, diffs={differences[-3:]}")
    raise DivergenceError(
        f"u={u:g} で加速した部分積分がコーシー判定を満たしません",
        {**context, "last_differences": differences[-3:], "tol": tol},
    )


def _map_cells(fn: Callable[[float], float], points: Sequence[float], workers: int) -> List[float]:
    # 結果の順序は points の順序
    if workers <= 1 or len(points) <= 1:
        return [fn(p) for p in points]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, points))


def uniform_tail(
    profile: RadialProfile,
    alpha: "float | BesselOrder",
    u_grid: Sequence[float],
    M: float,
    N: float,
    tol: float = 1e-10,
    workers: int = 1,
) -> float:
    """max_u |∫_M^N t^{2α+1} f(t) j_α(ut) dt|（一様収束の診断）"""
    order = as_order(alpha)
    if not 0 <= M < N:
        raise ValueError(f"0 ≤ M < N である必要があります: M={M}, N={N}")
    if len(u_grid) == 0:
        raise ValueError("u_grid が空です")
    tails = _map_cells(lambda u: abs(hankel_segment(profile, order, float(u), M, N, tol)[0]), list(u_grid), workers)
    worst = max(tails)
    logger.info(f"[transforms] 一様裾: profile={profile.name}, α={order.alpha:g}, M={M:g}, N={N:g}, max={worst:.6g}")
    return worst


def m_weight(profile: RadialProfile, alpha: "float | BesselOrder") -> float:
    """M_{2α+2}(f) = sup_t t^{2α+2}|f(t)|

    格子＋局所最大化の上限に、原点側・無限遠側のヒントから得る上界を合わせます。

    Raises:
        UnboundedError: ヒントが t^{2α+2}|f(t)| の増大を示す場合
    """
    order = as_order(alpha)
    weight = 2.0 * order.alpha + 2.0
    if profile.is_zero():
        return 0.0
    context = {"profile": profile.name, "alpha": order.alpha}

    q = profile.origin_exponent()
    if q > weight:
        raise UnboundedError(f"原点で t^(2α+2)|f| が発散します（q={q:g} > {weight:g}）", context)
    if profile.support_end is None and profile.decay_hint.exponent < weight:
        raise UnboundedError(
            f"無限遠で t^(2α+2)|f| が増大します（p={profile.decay_hint.exponent:g} < {weight:g}）", context
        )

    lo, hi = WEIGHT_WINDOW
    origin = profile.origin_hint
    lo = min(lo, origin.start)
    origin_bound = origin.constant * lo ** (weight - q)

    if profile.support_end is not None:
        hi = profile.support_end
        tail_bound = 0.0
    else:
        hint = profile.decay_hint
        if profile.oscillation_frequency > 0:
            hi = min(hi, 1e4)
        hi = max(hi, 2.0 * hint.start)
        tail_bound = hint.constant * hi ** (weight - hint.exponent)

    grid_sup, location = window_supremum(profile, lo, hi, weight_exponent=weight)
    value = max(grid_sup, origin_bound, tail_bound)
    logger.info(
        f"[transforms] M_(2α+2): profile={profile.name}, α={order.alpha:g}, value={value:.12g}, "
        f"at={location:.6g}, origin={origin_bound:.3e}, tail={tail_bound:.3e}"
    )
    return value


def _probe_points(profile: RadialProfile, top: float, extra: Iterable[float]) -> np.ndarray:
    # 二進点・非滑らかな点の両側・f' の零点・指定点
    dyadic = [2.0 ** k for k in DYADIC_PROBES]
    lo = 2.0 ** DYADIC_PROBES.start
    breaks = np.array(profile.breaks_in(lo, top) + [top])
    sides = np.concatenate([breaks * (1.0 - ONE_SIDED), breaks])
    critical = sign_change_edges(profile.derivative, sample_edges(profile, lo, top, per_octave=16))
    points = np.concatenate([dyadic, sides, critical, np.asarray(list(extra), dtype=float)])
    points = points[np.isfinite(points) & (points > 0.0) & (points <= top)]
    return np.unique(points)


def sup_ibp_integral(
    profile: RadialProfile,
    alpha: "float | BesselOrder",
    probe_pairs: Optional[Sequence[Tuple[float, float]]] = None,
    tol: float = 1e-12,
) -> float:
    """sup_{0≤a<b≤∞} |∫_a^b (t^{2α+2}/(2α+2)) df(t)| をプローブ点で評価する

    F(x) = ∫_0^x g df を二進点、非滑らかな点の両側、f' の零点、指定された
    端点で計算し、max F - min F を返します（0 と ∞ を含む）。

    Raises:
        NonConvergenceError: ∫ g df が無限遠で収束しない場合
    """
    order = as_order(alpha)
    if profile.is_zero():
        return 0.0
    weight = 2.0 * order.alpha + 2.0

    def g(t: np.ndarray) -> np.ndarray:
        return np.power(t, weight) / weight

    if profile.support_end is not None:
        top = profile.support_end
    else:
        hint = profile.decay_hint
        if hint.exponent <= weight:
            raise NonConvergenceError(
                f"∫ t^(2α+2) df が無限遠で収束しません（p={hint.exponent:g} ≤ {weight:g}）",
                {"profile": profile.name, "alpha": order.alpha},
            )
        top = 2.0 ** DYADIC_PROBES.stop

    extra: List[float] = []
    for a, b in probe_pairs or []:
        extra.extend(x for x in (a, b) if 0.0 < x < math.inf)
    points = _probe_points(profile, top, extra)

    values = [0.0]
    running, previous = 0.0, 0.0
    for point in points:
        running += stieltjes(profile, g, weight, previous, float(point), tol)
        previous = float(point)
        values.append(running)
    if profile.support_end is None:
        running += stieltjes(profile, g, weight, previous, math.inf, tol)
        values.append(running)

    result = max(values) - min(values)
    logger.info(f"[transforms] sup_ibp: profile={profile.name}, α={order.alpha:g}, probes={len(values)}, value={result:.12g}")
    return result


def hypotheses_hold(profile: RadialProfile, alpha: "float | BesselOrder") -> bool:
    """t^{2α+1} f ∈ L¹(0,1) かつ（有限台または減衰指数 > 2α+2）"""
    order = as_order(alpha)
    weight = 2.0 * order.alpha + 2.0
    if profile.origin_hint is None or profile.origin_hint.exponent >= weight:
        return False
    return profile.support_end is not None or profile.decay_hint.exponent > weight


def constant_factor(cert: GMCertificate, alpha: "float | BesselOrder", S: float) -> float:
    """(Cλ(2λ)^{2α+2}/(2α+2)) · (λ^4/(2(α+2)) + S/(α+3/2))"""
    order = as_order(alpha)
    a, lam = order.alpha, cert.lam
    weight = 2.0 * a + 2.0
    return cert.C * lam * (2.0 * lam) ** weight / weight * (lam ** 4 / (2.0 * (a + 2.0)) + S / (a + 1.5))


def cossup_bounds(
    profile: RadialProfile,
    alpha: "float | BesselOrder",
    N: float,
    cert: GMCertificate,
    u_grid: Sequence[float],
    tol: float = 1e-10,
    workers: int = 1,
) -> Dict[BoundVariant, BoundReport]:
    """評価式 sup_u |∫_0^N ...| ≤ 右辺4項 を両方の S で評価する

    Returns:
        statement（S_α）と proof（S_{α+1}）の BoundReport
    """
    order = as_order(alpha)
    if N < 0:
        raise ValueError(f"N は非負である必要があります: {N}")
    if len(u_grid) == 0:
        raise ValueError("u_grid が空です")

    magnitudes = _map_cells(lambda u: abs(partial_hankel(profile, order, float(u), N, tol).value), list(u_grid), workers)
    best = int(np.argmax(magnitudes))
    lhs, lhs_u = float(magnitudes[best]), float(u_grid[best])

    weight = 2.0 * order.alpha + 2.0
    term_partial = abs(partial_hankel(profile, order, 0.0, N, tol).value)
    term_boundary = 0.0 if N == 0 else N ** weight * abs(float(profile(np.array([N]))[0])) / (order.alpha + 1.0)
    moment = m_weight(profile, order)
    term_sup_ibp = sup_ibp_integral(profile, order, [(0.0, N)] if N > 0 else None)

    reports: Dict[BoundVariant, BoundReport] = {}
    for variant, s_order in (
        (BoundVariant.STATEMENT, order),
        (BoundVariant.PROOF, BesselOrder(alpha=order.alpha + 1.0)),
    ):
        S = compute_S(s_order)
        factor = constant_factor(cert, order, S)
        reports[variant] = BoundReport(
            alpha=order.alpha,
            N=N,
            lhs=lhs,
            lhs_u=lhs_u,
            term_partial=term_partial,
            term_boundary=term_boundary,
            term_constant=factor * moment,
            term_sup_ibp=term_sup_ibp,
            S_used=S,
            variant=variant,
            constant_factor=factor,
            m_weight=moment,
        )
        report = reports[variant]
        level = logging.INFO if report.passed else logging.WARNING
        logger.log(
            level,
            f"[transforms] 評価式: profile={profile.name}, α={order.alpha:g}, N={N:g}, variant={variant.value}, "
            f"lhs={report.lhs:.6g}, rhs={report.rhs:.6g}, passed={report.passed}",
        )
    return reports


def cossup_bound(
    profile: RadialProfile,
    alpha: "float | BesselOrder",
    N: float,
    cert: GMCertificate,
    u_grid: Sequence[float],
    variant: BoundVariant = BoundVariant.STATEMENT,
    tol: float = 1e-10,
    workers: int = 1,
) -> BoundReport:
    """評価式を指定した S で評価する（既定は S_α）"""
    return cossup_bounds(profile, alpha, N, cert, u_grid, tol, workers)[BoundVariant(variant)]
