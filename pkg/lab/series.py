"""余弦級数

部分和 S_N(x) = Σ_{n=0}^N a_n cos nx の補償付き計算、GMS 条件の検査、
離散版の Abel–Olivier 判定、ディリクレ核、Σcos²n の恒等式、
一様収束の診断と ln N に対する発散の傾きを提供します。
"""
import logging
import math
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import stats

from core.errors import NotGMOnGridError, ProfileError
from lab.gm_analysis import DecayProfile, PowerHint, assemble_decay_profile

# ロギング設定
logger = logging.getLogger(__name__)

# 一度に足し合わせる項数
CHUNK = 1 << 20
# |sin(x/2)| がこれ以下なら閉じた形をやめて和を直接計算する
DIRICHLET_SWITCH = 1e-8
# 減衰プロファイルで直接調べる範囲（最大の m の何倍まで）
ABEL_OLIVIER_CUT = 4


class SequenceProfile(BaseModel):
    """実数列 a_n（n ≥ 0）

    term はベクトル化された関数（整数配列 → 実数配列）。a_n → 0 は decay_hint
    （|a_n| ≤ K n^{-p}、n ≥ start）または有限の台 support_end で宣言します。
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str
    term: Callable[[np.ndarray], np.ndarray]
    decay_hint: Optional[PowerHint] = None
    support_end: Optional[int] = None
    closed_form_tag: Optional[str] = None

    @model_validator(mode="after")
    def _vanishes(self) -> "SequenceProfile":
        if self.decay_hint is None and self.support_end is None:
            raise ProfileError(f"a_n → 0 をヒントで宣言してください: {self.name}", {"sequence": self.name})
        return self

    def terms(self, n: np.ndarray) -> np.ndarray:
        n = np.asarray(n, dtype=np.int64)
        values = np.asarray(self.term(n), dtype=float)
        values = np.broadcast_to(values, n.shape).copy()
        if self.support_end is not None:
            values[n > self.support_end] = 0.0
        values[n < 0] = 0.0
        return values


def _chunked_fsum(start: int, stop: int, block: Callable[[np.ndarray], np.ndarray]) -> float:
    # [start, stop] の添字を CHUNK ごとに評価して補償付きで足す
    partials: List[float] = []
    for lo in range(start, stop + 1, CHUNK):
        n = np.arange(lo, min(lo + CHUNK, stop + 1), dtype=np.int64)
        partials.append(math.fsum(block(n).tolist()))
    return math.fsum(partials)


def _effective_stop(s: SequenceProfile, N: int) -> int:
    return N if s.support_end is None else min(N, s.support_end)


def cosine_partial_sum(s: SequenceProfile, N: int, x: float) -> float:
    """S_N(x) = Σ_{n=0}^N a_n cos(nx)（補償付き和）"""
    if N < 0:
        raise ValueError(f"N ≥ 0 である必要があります: {N}")
    stop = _effective_stop(s, N)
    return _chunked_fsum(0, stop, lambda n: s.terms(n) * np.cos(n * x))


def _segment_sum(s: SequenceProfile, M: int, N: int, x: float) -> float:
    # Σ_{n=M+1}^N a_n cos(nx)
    stop = _effective_stop(s, N)
    if stop <= M:
        return 0.0
    return _chunked_fsum(M + 1, stop, lambda n: s.terms(n) * np.cos(n * x))


def dirichlet_kernel(N: int, x: float) -> float:
    """D_N(x) = Σ_{n=-N}^{N} e^{inx} = sin((N+1/2)x) / sin(x/2)

    |sin(x/2)| ≤ 1e-8 の近くでは 1 + 2Σcos(nx) を直接足します。
    """
    if N < 0:
        raise ValueError(f"N ≥ 0 である必要があります: {N}")
    half = math.sin(0.5 * x)
    if abs(half) > DIRICHLET_SWITCH:
        return math.sin((N + 0.5) * x) / half
    return 1.0 + 2.0 * _chunked_fsum(1, N, lambda n: np.cos(n * x))


def cos_square_sum_identity(N: int) -> float:
    """|Σ_{n=1}^N cos²n - (N/2 + (D_N(2) - 1)/4)|"""
    if N < 1:
        raise ValueError(f"N ≥ 1 である必要があります: {N}")
    direct = _chunked_fsum(1, N, lambda n: np.cos(n.astype(float)) ** 2)
    closed = N / 2.0 + (dirichlet_kernel(N, 2.0) - 1.0) / 4.0
    residual = abs(direct - closed)
    logger.debug(f"[series] Σcos²n の恒等式: N={N}, direct={direct:.17g}, closed={closed:.17g}, residual={residual:.3e}")
    return residual


class GMSPoint(BaseModel):
    """GMS 条件の1点での検査結果"""
    n: int
    lhs: float
    rhs: float
    passed: bool


class GMSReport(BaseModel):
    """GMS 条件 Σ_{k=n}^{2n}|a_k - a_{k+1}| ≤ C Σ_{k=⌈n/λ⌉}^{⌊λn⌋} |a_k|/k の検査結果"""
    sequence: str
    C: float = Field(..., ge=0.0)
    nu: int = Field(..., ge=1)
    lam: int
    points: List[GMSPoint]

    @property
    def passed(self) -> bool:
        return all(point.passed for point in self.points)

    def failing_points(self) -> List[GMSPoint]:
        return [point for point in self.points if not point.passed]


def gms_sides(s: SequenceProfile, n: int, lam: int) -> Tuple[float, float]:
    """(Σ_{k=n}^{2n}|a_k - a_{k+1}|, Σ_{k=⌈n/λ⌉}^{⌊λn⌋} |a_k|/k)"""
    k = np.arange(n, 2 * n + 2, dtype=np.int64)
    a = s.terms(k)
    lhs = math.fsum(np.abs(np.diff(a)).tolist())
    lo, hi = max(1, -(-n // lam)), lam * n
    j = np.arange(lo, hi + 1, dtype=np.int64)
    rhs = math.fsum((np.abs(s.terms(j)) / j).tolist())
    return lhs, rhs


def _gms_passes(lhs: float, rhs: float, C: float) -> bool:
    if lhs == 0.0 and rhs == 0.0:
        return True
    return lhs <= C * rhs


def gms_verify(s: SequenceProfile, C: float, nu: int, n_grid: Sequence[int]) -> GMSReport:
    """n_grid の各点で GMS 条件を検査する（λ = 2^ν）"""
    if any(int(n) < 1 for n in n_grid):
        raise ValueError("n_grid は正の整数である必要があります")
    lam = 2 ** nu
    points: List[GMSPoint] = []
    for n in n_grid:
        lhs, rhs = gms_sides(s, int(n), lam)
        points.append(GMSPoint(n=int(n), lhs=lhs, rhs=rhs, passed=_gms_passes(lhs, rhs, C)))
    report = GMSReport(sequence=s.name, C=C, nu=nu, lam=lam, points=points)
    logger.info(
        f"[series] GMS検査: sequence={s.name}, C={C:.6g}, λ={lam}, points={len(points)}, "
        f"failures={len(report.failing_points())}"
    )
    return report


def gms_fit_constant(s: SequenceProfile, nu: int, n_grid: Sequence[int]) -> float:
    """n_grid 上で GMS 条件を満たす最小の C

    Raises:
        NotGMOnGridError: lhs > 0 かつ rhs = 0 となる点がある場合
    """
    lam = 2 ** nu
    best = 0.0
    for n in n_grid:
        lhs, rhs = gms_sides(s, int(n), lam)
        if rhs == 0.0:
            if lhs > 0.0:
                raise NotGMOnGridError(
                    f"n={n} で lhs > 0 かつ rhs = 0 です",
                    {"sequence": s.name, "n": int(n), "lhs": lhs},
                )
            continue
        best = max(best, lhs / rhs)
    logger.info(f"[series] GMS 定数を当てはめ: sequence={s.name}, ν={nu}, C={best:.6g}")
    return best


def gms_abel_olivier(s: SequenceProfile, n_grid: Sequence[int]) -> DecayProfile:
    """m ↦ max_{n ≥ m} n|a_n| の減衰プロファイル

    n ≤ 4 max(n_grid) は直接、その先は減衰ヒント K n^{1-p}（p > 1）で抑えます。
    """
    ms = sorted({int(m) for m in n_grid})
    if not ms or ms[0] < 1:
        raise ValueError("n_grid は正の整数の空でない列である必要があります")
    cut = ABEL_OLIVIER_CUT * ms[-1]

    if s.support_end is not None and cut >= s.support_end:
        tail = 0.0
    elif s.decay_hint is not None and s.decay_hint.exponent > 1.0:
        hint = s.decay_hint
        tail = hint.constant * max(cut, hint.start) ** (1.0 - hint.exponent)
    else:
        tail = math.inf

    n = np.arange(ms[0], cut + 1, dtype=np.int64)
    weighted = n * np.abs(s.terms(n))
    edges = ms + [cut + 1]
    segment_sups = [
        float(weighted[lo - ms[0]:hi - ms[0]].max()) if hi > lo else 0.0
        for lo, hi in zip(edges, edges[1:])
    ]
    result = assemble_decay_profile([float(m) for m in ms], segment_sups, tail)
    logger.info(
        f"[series] 減衰プロファイル: sequence={s.name}, status={result.status.value}, "
        f"last=({ms[-1]}, {result.points[-1].sup:.6g})"
    )
    return result


def uniform_tail_series(s: SequenceProfile, x_grid: Sequence[float], M: int, N: int) -> float:
    """max_x |S_N(x) - S_M(x)|"""
    if not 0 <= M < N:
        raise ValueError(f"0 ≤ M < N である必要があります: M={M}, N={N}")
    if len(x_grid) == 0:
        raise ValueError("x_grid が空です")
    worst = max(abs(_segment_sum(s, M, N, float(x))) for x in x_grid)
    logger.info(f"[series] 一様裾: sequence={s.name}, M={M}, N={N}, max={worst:.6g}")
    return worst


def max_abs_partial(s: SequenceProfile, N: int, x_grid: Sequence[float]) -> float:
    """max_x |S_N(x)|"""
    return max(abs(cosine_partial_sum(s, N, float(x))) for x in x_grid)


class DivergenceFit(BaseModel):
    """S_N(x) を ln N に当てはめた直線"""
    x: float
    slope: float
    intercept: float
    stderr: float
    band_low: float
    band_high: float
    ladder: List[int]
    partial_sums: List[float]

    def contains(self, slope: float) -> bool:
        return self.band_low <= slope <= self.band_high


def partial_sum_ladder(s: SequenceProfile, x: float, ladder: Sequence[int]) -> List[float]:
    """昇順の N の列での S_N(x)（区間ごとに足して累積）"""
    sums: List[float] = []
    running, previous = 0.0, None
    for N in ladder:
        if previous is None:
            running = cosine_partial_sum(s, int(N), x)
        else:
            running = math.fsum([running, _segment_sum(s, previous, int(N), x)])
        previous = int(N)
        sums.append(running)
    return sums


def divergence_slope(s: SequenceProfile, x: float, ladder: Sequence[int], confidence: float = 0.95) -> DivergenceFit:
    """二進的な N の列で S_N(x) を ln N に最小二乗で当てはめ、傾きと信頼区間を返す"""
    ordered = sorted(int(N) for N in ladder)
    if len(ordered) < 3:
        raise ValueError("当てはめには3点以上の N が必要です")
    sums = partial_sum_ladder(s, x, ordered)
    fit = stats.linregress(np.log(ordered), sums)
    half_width = stats.t.ppf(0.5 + confidence / 2.0, len(ordered) - 2) * fit.stderr
    logger.info(
        f"[series] 発散の傾き: sequence={s.name}, x={x:g}, slope={fit.slope:.6g} ± {half_width:.3g}, "
        f"N=[{ordered[0]}, {ordered[-1]}]"
    )
    return DivergenceFit(
        x=x,
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        stderr=float(fit.stderr),
        band_low=float(fit.slope - half_width),
        band_high=float(fit.slope + half_width),
        ladder=ordered,
        partial_sums=sums,
    )


def dyadic_ladder(lo: int, hi: int) -> List[int]:
    """lo から hi までの 2 倍刻みの N"""
    ladder, N = [], lo
    while N <= hi:
        ladder.append(N)
        N *= 2
    return ladder
