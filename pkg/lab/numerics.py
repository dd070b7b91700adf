"""数値計算の共通部品

パネル分割のガウス・ルジャンドル求積、半周期シフトによる反復平均、
グリッド＋局所最大化による上限の計算をまとめています。
"""
import logging
import math
from functools import lru_cache
from typing import Callable, Dict, List, NamedTuple, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import minimize_scalar

from core.errors import QuadratureError

# ロギング設定
logger = logging.getLogger(__name__)

VectorFunction = Callable[[np.ndarray], np.ndarray]

# パネルごとの高次・低次の求積点数（誤差推定は両者の差）
HIGH_ORDER = 20
LOW_ORDER = 10
MAX_REFINEMENTS = 40
DEFAULT_PANEL_BUDGET = 4_000_000
# abs_integral の相対許容誤差
ABS_RELATIVE_TOL = 1e-10


class QuadratureResult(NamedTuple):
    """求積結果"""
    value: float
    error: float
    panels: int


@lru_cache(maxsize=8)
def gauss_rule(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """[-1, 1] 上のガウス・ルジャンドル節点と重み"""
    return leggauss(order)


def _apply_rule(func: VectorFunction, a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    nodes, weights = gauss_rule(order)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    points = mid[:, None] + half[:, None] * nodes[None, :]
    values = np.asarray(func(points.ravel()), dtype=float).reshape(points.shape)
    if not np.all(np.isfinite(values)):
        bad = points[~np.isfinite(values)]
        raise QuadratureError(
            "被積分関数が有限でない値を返しました",
            {"first_bad_point": float(bad.flat[0])},
        )
    return half * (values @ weights)


def _refine(
    func: VectorFunction,
    grid: np.ndarray,
    tol: float,
    panel_budget: int,
    strict: bool,
) -> Tuple[np.ndarray, float, int]:
    """各パネルの積分値（誤差の大きいものは二分割して再計算）・誤差推定の和・使用パネル数"""
    span = grid[-1] - grid[0]
    a, b = grid[:-1], grid[1:]
    owner = np.arange(a.size)
    totals = np.zeros(a.size)
    accepted_error = 0.0
    used = 0

    for _ in range(MAX_REFINEMENTS):
        used += a.size
        if used > panel_budget:
            raise QuadratureError(
                "パネル予算内で許容誤差に到達しませんでした",
                {"panels": used, "tol": tol},
            )
        high = _apply_rule(func, a, b, HIGH_ORDER)
        low = _apply_rule(func, a, b, LOW_ORDER)
        error = np.abs(high - low)
        share = tol * (b - a) / span
        converged = (error <= share) | (error <= 1e-15 * np.abs(high))
        tiny = (b - a) <= 1e-14 * np.maximum(np.abs(a), 1.0)
        stuck = tiny & ~converged & (error > tol)
        if strict and np.any(stuck):
            point = float(a[stuck][0])
            raise QuadratureError(
                f"点 {point:.15g} に向かって再分割が続きます（特異点の可能性）",
                {"point": point, "tol": tol},
            )
        ok = converged | tiny
        np.add.at(totals, owner[ok], high[ok])
        accepted_error += float(np.sum(error[ok]))
        if np.all(ok):
            return totals, accepted_error, used
        keep = ~ok
        mid = 0.5 * (a[keep] + b[keep])
        a, b = np.concatenate([a[keep], mid]), np.concatenate([mid, b[keep]])
        owner = np.concatenate([owner[keep], owner[keep]])

    raise QuadratureError(
        "再分割の回数が上限に達しました",
        {"remaining_panels": int(a.size), "tol": tol},
    )


def integrate_panels(
    func: VectorFunction,
    edges: Sequence[float],
    tol: float = 1e-12,
    panel_budget: int = DEFAULT_PANEL_BUDGET,
    strict: bool = False,
) -> QuadratureResult:
    """パネル列上で積分する（誤差の大きいパネルは二分割して再計算）

    Args:
        func: ベクトル化された被積分関数
        edges: 昇順のパネル境界
        tol: 絶対許容誤差（パネル長に比例して配分）
        panel_budget: 評価するパネル数の上限
        strict: True なら丸め誤差の幅まで縮んでも誤差が tol を超えるパネルをエラーにする

    Returns:
        積分値・誤差推定・使用パネル数

    Raises:
        QuadratureError: 予算内で許容誤差に到達しない場合、または strict で
            一点に向かって再分割が続く場合
    """
    grid = np.unique(np.asarray(edges, dtype=float))
    if grid.size < 2:
        return QuadratureResult(0.0, 0.0, 0)
    totals, error, used = _refine(func, grid, tol, panel_budget, strict)
    return QuadratureResult(math.fsum(totals.tolist()), error, used)


def split_edges(start: float, stop: float, max_length: float) -> np.ndarray:
    """[start, stop] を長さ max_length 以下の等分パネル境界に分ける"""
    if stop <= start:
        return np.array([start])
    count = max(1, int(math.ceil((stop - start) / max_length)))
    return np.linspace(start, stop, count + 1)


def geometric_edges(start: float, stop: float, per_octave: int = 4) -> np.ndarray:
    """等比のパネル境界（0 < start < stop）"""
    if stop <= start:
        return np.array([start])
    count = max(1, int(math.ceil(per_octave * math.log2(stop / start))))
    return np.geomspace(start, stop, count + 1)


def shift_offsets(shifts: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """反復ペア平均 A_{k+1}(t) = (A_k(t) + A_k(t + s_k)) / 2 を展開したオフセットと重み

    Args:
        shifts: 各段のシフト幅

    Returns:
        オフセット（昇順）と重み（総和1）
    """
    table: Dict[float, float] = {0.0: 1.0}
    for shift in shifts:
        nxt: Dict[float, float] = {}
        for offset, weight in table.items():
            for key in (offset, round(offset + shift, 12)):
                nxt[key] = nxt.get(key, 0.0) + 0.5 * weight
        table = nxt
    offsets = np.array(sorted(table))
    weights = np.array([table[o] for o in offsets])
    return offsets, weights


def iterated_average(values: Sequence[float], depth: int) -> float:
    """隣接ペアの平均を depth 回繰り返した末尾の値"""
    level = np.asarray(values, dtype=float)
    for _ in range(min(depth, level.size - 1)):
        level = 0.5 * (level[1:] + level[:-1])
    return float(level[-1])


def refine_supremum(
    func: VectorFunction,
    grid: np.ndarray,
    max_refinements: int = 16,
) -> Tuple[float, float]:
    """グリッド上の最大値を局所最大化で精密化する

    Args:
        func: ベクトル化された非負関数
        grid: 昇順の評価点
        max_refinements: 局所最大化する候補数の上限

    Returns:
        (上限の推定値, 達成点)
    """
    values = np.asarray(func(grid), dtype=float)
    best_index = int(np.argmax(values))
    best_value, best_point = float(values[best_index]), float(grid[best_index])
    if grid.size < 3:
        return best_value, best_point

    interior = (values[1:-1] >= values[:-2]) & (values[1:-1] >= values[2:])
    candidates = np.nonzero(interior)[0] + 1
    if candidates.size > max_refinements:
        order = np.argsort(values[candidates])[::-1]
        candidates = candidates[order[:max_refinements]]

    def negative(x: float) -> float:
        return -float(func(np.array([x]))[0])

    for index in candidates:
        lo, hi = float(grid[index - 1]), float(grid[index + 1])
        result = minimize_scalar(negative, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12 * max(1.0, hi)})
        if result.success and -result.fun > best_value:
            best_value, best_point = float(-result.fun), float(result.x)

    return best_value, best_point


def panel_integrals(func: VectorFunction, edges: Sequence[float], order: int = HIGH_ORDER) -> np.ndarray:
    """各パネルの積分値（固定次数、再分割なし）"""
    grid = np.asarray(edges, dtype=float)
    if grid.size < 2:
        return np.zeros(0)
    return _apply_rule(func, grid[:-1], grid[1:], order)


def vector_bisect(func: VectorFunction, lo: np.ndarray, hi: np.ndarray, iterations: int = 60) -> np.ndarray:
    """符号変化を挟む区間の列を一斉に二分法で縮める"""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    if lo.size == 0:
        return lo
    f_lo = np.sign(np.asarray(func(lo), dtype=float))
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        f_mid = np.sign(np.asarray(func(mid), dtype=float))
        same = f_mid == f_lo
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    return 0.5 * (lo + hi)


def sign_change_edges(func: VectorFunction, edges: np.ndarray) -> np.ndarray:
    """パネル内部の零点をパネル境界に加える

    端点のすぐ内側で符号を比べるので、境界上の跳びは零点として扱いません。
    """
    grid = np.unique(np.asarray(edges, dtype=float))
    if grid.size < 2:
        return grid
    a, b = grid[:-1], grid[1:]
    eps = 1e-9 * (b - a)
    left = np.asarray(func(a + eps), dtype=float)
    right = np.asarray(func(b - eps), dtype=float)
    change = left * right < 0
    zeros = vector_bisect(func, (a + eps)[change], (b - eps)[change])
    return np.unique(np.concatenate([grid, zeros]))


def abs_integral(func: VectorFunction, edges: Sequence[float], rel_tol: float = ABS_RELATIVE_TOL) -> float:
    """∫|func| を零点で分割したパネルの |∫func| の和として計算する（パネルごとに誤差制御）

    Raises:
        QuadratureError: 非有限値、または一点に向かって再分割が続く場合（発散する特異点）
    """
    grid = sign_change_edges(func, np.asarray(edges, dtype=float))
    if grid.size < 2:
        return 0.0
    rough = math.fsum(np.abs(panel_integrals(func, grid)).tolist())
    if rough == 0.0:
        return 0.0
    totals, _, _ = _refine(func, grid, rel_tol * rough, DEFAULT_PANEL_BUDGET, strict=True)
    return math.fsum(np.abs(totals).tolist())
