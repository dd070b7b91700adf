"""一般単調（GM）関数の解析

実数値プロファイル f とその変動測度 |df|（導関数密度＋跳び）を表現し、
GM 条件の検証、二進ブロックの good / bad 判定、E_n の測度、符号区間の証拠探索、
Abel–Olivier 型の減衰プロファイル、部分積分恒等式の検証を行います。
"""
import logging
import math
from enum import Enum
from typing import Callable, List, NamedTuple, Optional, Protocol, Sequence, Tuple

import numpy as np
import sympy
from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.errors import (
    BadBlockError,
    NonConvergenceError,
    NotGMOnGridError,
    ProfileError,
    QuadratureError,
    WitnessNotFoundError,
)
from lab.numerics import (
    QuadratureResult,
    VectorFunction,
    abs_integral,
    geometric_edges,
    integrate_panels,
    refine_supremum,
    split_edges,
)

# ロギング設定
logger = logging.getLogger(__name__)

# 変動・積分のサンプリング密度（1オクターブあたり）
SAMPLES_PER_OCTAVE = 64
# A_n, B_n の窓あたりの格子点数
SUP_GRID_POINTS = 2 ** 12
# E_n 測度の中点格子（二進ブロックあたり）
MEASURE_CELLS_PER_BLOCK = 2 ** 12
# 跳びの片側極限を取るための相対オフセット
ONE_SIDED = 1e-13
# 一度に扱う格子点の上限
MAX_GRID_POINTS = 5_000_000
# 無限区間積分の打ち切り（切り捨てた部分がこの値未満になる位置で止める）
TRUNCATION_TOL = 1e-17


class PowerHint(BaseModel):
    """|f(t)| ≤ constant · t^{-exponent}（decay は t ≥ start、origin は t ≤ start）"""
    model_config = ConfigDict(frozen=True)

    exponent: float
    constant: float = 1.0
    start: float = 1.0


class JumpAtom(BaseModel):
    """跳び f(t0+) - f(t0-)"""
    model_config = ConfigDict(frozen=True)

    location: float
    jump: float


BreakRule = Callable[[float, float], List[float]]
AtomRule = Callable[[float, float], List[JumpAtom]]


class RadialProfile(BaseModel):
    """(0, ∞) 上の実数値関数 f

    値・導関数密度はベクトル化された関数で与えます。非滑らかな点は
    breakpoints（有限個）または breakpoint_rule（区間ごとの列挙）で宣言します。
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str
    value: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]
    breakpoints: Tuple[float, ...] = ()
    jump_atoms: Tuple[JumpAtom, ...] = ()
    breakpoint_rule: Optional[BreakRule] = None
    atom_rule: Optional[AtomRule] = None
    decay_hint: Optional[PowerHint] = None
    origin_hint: Optional[PowerHint] = None
    support_end: Optional[float] = None
    oscillation_frequency: float = 0.0
    identically_zero: bool = False

    @model_validator(mode="after")
    def _check_declarations(self) -> "RadialProfile":
        if self.decay_hint is None and self.support_end is None:
            raise ProfileError(
                f"無限遠で消えることをヒントで宣言してください: {self.name}",
                {"profile": self.name},
            )
        if self.decay_hint is not None and self.decay_hint.exponent <= 0 and self.support_end is None:
            raise ProfileError(f"減衰指数は正である必要があります: {self.name}", {"profile": self.name})
        declared = set(self.breakpoints)
        stray = [atom.location for atom in self.jump_atoms if atom.location not in declared]
        if stray:
            raise ProfileError(
                f"跳びの位置が breakpoints に含まれていません: {stray}",
                {"profile": self.name},
            )
        return self

    def __call__(self, t: "float | np.ndarray") -> np.ndarray:
        return np.asarray(self.value(np.asarray(t, dtype=float)), dtype=float)

    def breaks_in(self, a: float, b: float) -> List[float]:
        """開区間 (a, b) 内の非滑らかな点"""
        if self.breakpoint_rule is not None:
            points = self.breakpoint_rule(a, b)
        else:
            points = self.breakpoints
        return sorted(p for p in points if a < p < b)

    def atoms_in(self, a: float, b: float) -> List[JumpAtom]:
        """半開区間 (a, b] 内の跳び"""
        if self.atom_rule is not None:
            atoms = self.atom_rule(a, b)
        else:
            atoms = self.jump_atoms
        return [atom for atom in atoms if a < atom.location <= b]

    def origin_exponent(self) -> float:
        if self.origin_hint is None:
            raise ProfileError(f"原点での挙動（origin_hint）が宣言されていません: {self.name}")
        return self.origin_hint.exponent

    def is_zero(self) -> bool:
        return self.identically_zero


class Piece(NamedTuple):
    """区間 (start, end] 上の滑らかな部分"""
    start: float
    end: float
    value: VectorFunction
    derivative: VectorFunction


def piecewise_profile(
    name: str,
    pieces: Sequence[Piece],
    decay_hint: Optional[PowerHint] = None,
    origin_hint: Optional[PowerHint] = None,
    oscillation_frequency: float = 0.0,
    identically_zero: bool = False,
) -> RadialProfile:
    """区分的に滑らかなプロファイルを作る

    各区間は (start, end] で、最後の区間の end が有限ならそこから先は 0 です。
    区間の境目の跳びは両側の式から計算します。
    """
    ordered = sorted(pieces, key=lambda piece: piece.start)
    if not ordered or ordered[0].start != 0.0:
        raise ProfileError(f"区間は 0 から始まる必要があります: {name}")
    for left, right in zip(ordered, ordered[1:]):
        if left.end != right.start:
            raise ProfileError(f"区間が連続していません: {left.end} != {right.start}")

    def _assemble(attribute: str) -> VectorFunction:
        def evaluate(t: np.ndarray) -> np.ndarray:
            t = np.asarray(t, dtype=float)
            out = np.zeros_like(t)
            for piece in ordered:
                mask = (t > piece.start) & (t <= piece.end)
                if np.any(mask):
                    out[mask] = getattr(piece, attribute)(t[mask])
            return out
        return evaluate

    breakpoints: List[float] = []
    atoms: List[JumpAtom] = []
    for index, piece in enumerate(ordered):
        if not math.isfinite(piece.end):
            continue
        at = np.array([piece.end])
        left_value = float(piece.value(at)[0])
        right_value = float(ordered[index + 1].value(at)[0]) if index + 1 < len(ordered) else 0.0
        breakpoints.append(piece.end)
        if right_value != left_value:
            atoms.append(JumpAtom(location=piece.end, jump=right_value - left_value))

    last_end = ordered[-1].end
    return RadialProfile(
        name=name,
        value=_assemble("value"),
        derivative=_assemble("derivative"),
        breakpoints=tuple(breakpoints),
        jump_atoms=tuple(atoms),
        decay_hint=decay_hint,
        origin_hint=origin_hint,
        support_end=last_end if math.isfinite(last_end) else None,
        oscillation_frequency=oscillation_frequency,
        identically_zero=identically_zero,
    )


class PieceDescription(BaseModel):
    """設定ファイル用の区間記述（式は t の式）"""
    start: float
    end: Optional[float] = None
    expression: str


class ProfileDescription(BaseModel):
    """宣言的なプロファイル記述"""
    name: str
    pieces: List[PieceDescription]
    decay_exponent: Optional[float] = None
    decay_constant: float = 1.0
    origin_exponent: float = 0.0
    oscillation_frequency: float = 0.0


def from_description(description: ProfileDescription) -> RadialProfile:
    """記述から導関数つきのプロファイルを作る（導関数は記号微分）

    Raises:
        ProfileError: 式を解釈できない場合
    """
    t = sympy.Symbol("t", positive=True)
    pieces: List[Piece] = []
    vanishing = True
    for item in description.pieces:
        try:
            expression = sympy.sympify(item.expression, locals={"t": t})
        except (sympy.SympifyError, TypeError) as e:
            raise ProfileError(f"式を解釈できません: {item.expression}", {"profile": description.name}) from e
        vanishing = vanishing and expression.is_zero is True
        derivative = sympy.diff(expression, t)
        value_fn = sympy.lambdify(t, expression, modules="numpy")
        derivative_fn = sympy.lambdify(t, derivative, modules="numpy")
        pieces.append(
            Piece(
                start=item.start,
                end=math.inf if item.end is None else item.end,
                value=_broadcasting(value_fn),
                derivative=_broadcasting(derivative_fn),
            )
        )
    logger.info(f"[gm] 記述からプロファイルを作成: name={description.name}, pieces={len(pieces)}")
    return piecewise_profile(
        description.name,
        pieces,
        decay_hint=None if description.decay_exponent is None else PowerHint(
            exponent=description.decay_exponent, constant=description.decay_constant
        ),
        origin_hint=PowerHint(exponent=description.origin_exponent),
        oscillation_frequency=description.oscillation_frequency,
        identically_zero=vanishing,
    )


def _broadcasting(fn: Callable) -> VectorFunction:
    # 定数式の lambdify はスカラーを返すので形を揃える
    def evaluate(t: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.asarray(fn(t), dtype=float), np.shape(t)).copy()
    return evaluate


def weighted(profile: RadialProfile, w: float) -> RadialProfile:
    """t ↦ t^w f(t) のプロファイル

    無限遠で消えなくなる重み（台が有限でなく減衰指数 - w ≤ 0）は ProfileError になります。
    """
    base = profile

    def value(t: np.ndarray) -> np.ndarray:
        return np.power(t, w) * base.value(t)

    def derivative(t: np.ndarray) -> np.ndarray:
        return w * np.power(t, w - 1.0) * base.value(t) + np.power(t, w) * base.derivative(t)

    def scale_atoms(atoms: Sequence[JumpAtom]) -> List[JumpAtom]:
        return [JumpAtom(location=a.location, jump=a.jump * a.location ** w) for a in atoms]

    def shifted(hint: Optional[PowerHint]) -> Optional[PowerHint]:
        if hint is None:
            return None
        return PowerHint(exponent=hint.exponent - w, constant=hint.constant, start=hint.start)

    return RadialProfile(
        name=f"{profile.name}*t^{w:g}",
        value=value,
        derivative=derivative,
        breakpoints=profile.breakpoints,
        jump_atoms=tuple(scale_atoms(profile.jump_atoms)),
        breakpoint_rule=profile.breakpoint_rule,
        atom_rule=None if profile.atom_rule is None else (lambda a, b: scale_atoms(base.atom_rule(a, b))),
        decay_hint=shifted(profile.decay_hint),
        origin_hint=shifted(profile.origin_hint),
        support_end=profile.support_end,
        oscillation_frequency=profile.oscillation_frequency,
        identically_zero=profile.identically_zero,
    )


class StepSource(Protocol):
    """step_profile が受け取る数列（series.SequenceProfile が満たす）"""
    name: str
    decay_hint: Optional[PowerHint]
    support_end: Optional[int]

    def terms(self, n: np.ndarray) -> np.ndarray: ...


# 整数添字に直す上限（2^53 を超えると整数の区別がつかない）
STEP_INDEX_LIMIT = 2.0 ** 53


def step_profile(sequence: StepSource) -> RadialProfile:
    """数列の埋め込み f(x) = a_n（x ∈ (n, n+1]）

    整数 k ≥ 1 に跳び a_k - a_{k-1} を置きます。減衰ヒント |a_n| ≤ K n^{-p}
    （n ≥ n0）は t ≥ 2 max(n0, 1) で |f(t)| ≤ K 2^p t^{-p} に移ります。
    """
    def index_of(t: np.ndarray) -> np.ndarray:
        return (np.minimum(np.ceil(np.asarray(t, dtype=float)), STEP_INDEX_LIMIT) - 1.0).astype(np.int64)

    def value(t: np.ndarray) -> np.ndarray:
        return np.asarray(sequence.terms(index_of(t)), dtype=float)

    def derivative(t: np.ndarray) -> np.ndarray:
        return np.zeros_like(np.asarray(t, dtype=float))

    def integers_in(a: float, b: float) -> np.ndarray:
        top = b if sequence.support_end is None else min(b, sequence.support_end + 1.5)
        first, last = math.floor(a) + 1, math.ceil(top) - 1
        if last - first > MAX_GRID_POINTS:
            raise ProfileError(
                f"区間 ({a}, {b}) の整数点が多すぎます",
                {"profile": sequence.name},
            )
        return np.arange(max(first, 1), last + 1, dtype=np.int64)

    def breakpoint_rule(a: float, b: float) -> List[float]:
        return integers_in(a, b).astype(float).tolist()

    def atom_rule(a: float, b: float) -> List[JumpAtom]:
        # 半開区間 (a, b] なので b 自身が整数なら含める
        ks = integers_in(a, math.floor(b) + 0.5)
        ks = ks[ks <= b]
        if ks.size == 0:
            return []
        jumps = np.asarray(sequence.terms(ks), dtype=float) - np.asarray(sequence.terms(ks - 1), dtype=float)
        return [JumpAtom(location=float(k), jump=float(j)) for k, j in zip(ks, jumps) if j != 0.0]

    decay_hint = None
    if sequence.decay_hint is not None:
        hint = sequence.decay_hint
        decay_hint = PowerHint(
            exponent=hint.exponent,
            constant=hint.constant * 2.0 ** hint.exponent,
            start=2.0 * max(hint.start, 1.0),
        )
    first_term = abs(float(sequence.terms(np.array([0], dtype=np.int64))[0]))
    return RadialProfile(
        name=f"step({sequence.name})",
        value=value,
        derivative=derivative,
        breakpoint_rule=breakpoint_rule,
        atom_rule=atom_rule,
        decay_hint=decay_hint,
        origin_hint=PowerHint(exponent=0.0, constant=max(first_term, 1.0), start=1.0),
        support_end=None if sequence.support_end is None else float(sequence.support_end + 1),
    )


# ---------------------------------------------------------------------------
# 変動と積分
# ---------------------------------------------------------------------------


def sample_edges(profile: RadialProfile, a: float, b: float, per_octave: int = SAMPLES_PER_OCTAVE) -> np.ndarray:
    """[a, b] の標本点（等比格子＋振動の解像＋非滑らかな点）"""
    parts = [geometric_edges(a, b, per_octave), np.array([a, b])]
    if profile.oscillation_frequency > 0:
        step = math.pi / (8.0 * profile.oscillation_frequency)
        if (b - a) / step > MAX_GRID_POINTS:
            raise ProfileError(
                f"振動を解像する格子が大きすぎます: [{a}, {b}]",
                {"profile": profile.name},
            )
        parts.append(split_edges(a, b, step))
    parts.append(np.array(profile.breaks_in(a, b)))
    return np.unique(np.concatenate(parts))


def variation(profile: RadialProfile, a: float, b: float) -> float:
    """∫_a^b |df|（滑らかな部分の ∫|f'| と (a, b] 内の跳びの絶対値の和）

    Raises:
        ProfileError: 宣言されていない特異点を含む区間
    """
    if not 0 < a < b < math.inf:
        raise ValueError(f"0 < a < b < ∞ である必要があります: a={a}, b={b}")
    edges = sample_edges(profile, a, b)
    try:
        smooth = abs_integral(profile.derivative, edges)
    except QuadratureError as e:
        raise ProfileError(
            f"区間 [{a}, {b}] に宣言されていない特異点があります",
            {"profile": profile.name, **e.context},
        ) from e
    atoms = math.fsum(abs(atom.jump) for atom in profile.atoms_in(a, b))
    return smooth + atoms


def log_weighted_mass(profile: RadialProfile, a: float, b: float) -> float:
    """∫_a^b |f(t)|/t dt"""
    if b <= a:
        return 0.0
    hi = b if profile.support_end is None else min(b, profile.support_end)
    if hi <= a:
        return 0.0
    edges = sample_edges(profile, a, hi)
    return abs_integral(lambda t: profile(t) / t, edges)


def _origin_cut(exponent: float, constant: float) -> float:
    # ∫_0^cut K t^{s} dt < TRUNCATION_TOL となる cut（s = exponent > -1）
    power = exponent + 1.0
    cut = (TRUNCATION_TOL * power / max(constant, 1e-300)) ** (1.0 / power)
    return min(max(cut, 1e-300), 1e-3)


def _tail_cut(exponent: float, constant: float, start: float) -> float:
    # ∫_cut^∞ K t^{s} dt < TRUNCATION_TOL となる cut（s = exponent < -1）
    power = -(exponent + 1.0)
    cut = (max(constant, 1e-300) / (TRUNCATION_TOL * power)) ** (1.0 / power)
    return max(min(cut, 1e300), 2.0 * max(start, 1.0))


def integrate_profile(
    profile: RadialProfile,
    integrand: VectorFunction,
    a: float,
    b: float,
    weight_exponent: float,
    origin_shift: float = -1.0,
    max_panel: Optional[float] = None,
    tol: float = 1e-12,
) -> QuadratureResult:
    """プロファイルから作った被積分関数を (a, b) で積分する

    a = 0 のときは原点での挙動 t^{weight_exponent + origin_shift - q}、b = ∞ の
    ときは無限遠での挙動 t^{weight_exponent + origin_shift - p} を宣言から読み取り、
    切り捨て部分が無視できる位置までの等比パネルで積分します。原点側では
    先頭のべき項を解析的に加えます。

    Args:
        profile: プロファイル
        integrand: ベクトル化された被積分関数
        a, b: 積分区間（0 ≤ a < b ≤ ∞）
        weight_exponent: 被積分関数が t^w · (f または f') の形であるときの w
        origin_shift: f なら 0、f' なら -1 を加えた実効指数を使う
        max_panel: パネル長の上限（振動カーネル用）
        tol: 絶対許容誤差

    Raises:
        NonConvergenceError: 端点で積分できない場合
    """
    lo, hi = a, b
    leading = 0.0
    if profile.support_end is not None:
        hi = min(hi, profile.support_end)
    if hi <= lo:
        return QuadratureResult(0.0, 0.0, 0)

    if lo == 0.0:
        q = profile.origin_exponent()
        s = weight_exponent + origin_shift - q
        if s <= -1.0:
            raise NonConvergenceError(
                f"原点で積分できません（指数 {s:.3g} ≤ -1）",
                {"profile": profile.name},
            )
        constant = profile.origin_hint.constant if profile.origin_hint else 1.0
        lo = _origin_cut(s, constant)
        leading = float(integrand(np.array([lo]))[0]) * lo / (s + 1.0)

    if math.isinf(hi):
        if profile.oscillation_frequency > 0:
            raise NonConvergenceError(
                "振動するプロファイルの無限区間の絶対積分は扱いません（hankel_limit を使用）",
                {"profile": profile.name},
            )
        hint = profile.decay_hint
        s = weight_exponent + origin_shift - hint.exponent
        if s >= -1.0:
            raise NonConvergenceError(
                f"無限遠で積分できません（指数 {s:.3g} ≥ -1）",
                {"profile": profile.name},
            )
        hi = _tail_cut(s, hint.constant, hint.start)

    parts = [geometric_edges(lo, hi, 8), np.array([lo, hi]), np.array(profile.breaks_in(lo, hi))]
    if max_panel is not None:
        parts.append(split_edges(lo, hi, max_panel))
    if profile.oscillation_frequency > 0:
        parts.append(split_edges(lo, hi, math.pi / (2.0 * profile.oscillation_frequency)))
    edges = np.unique(np.concatenate(parts))
    result = integrate_panels(integrand, edges, tol=tol)
    return QuadratureResult(result.value + leading, result.error, result.panels)


def stieltjes(
    profile: RadialProfile,
    g: VectorFunction,
    g_exponent: float,
    a: float,
    b: float,
    tol: float = 1e-12,
) -> float:
    """∫_a^b g df（密度部分 ∫ g f' dt と (a, b] 内の跳び g(t0)·jump）

    Args:
        g: ベクトル化された重み（g(t) ~ t^{g_exponent}）
        g_exponent: 端点での収束判定に使う g の指数
    """
    density = integrate_profile(
        profile, lambda t: g(t) * profile.derivative(t), a, b, g_exponent, origin_shift=-1.0, tol=tol
    ).value
    top = b
    if math.isinf(top):
        top = profile.support_end if profile.support_end is not None else _tail_cut(
            g_exponent - 1.0 - profile.decay_hint.exponent, profile.decay_hint.constant, profile.decay_hint.start
        )
    atoms = profile.atoms_in(a, top)
    if atoms:
        locations = np.array([atom.location for atom in atoms])
        jumps = np.array([atom.jump for atom in atoms])
        atom_sum = math.fsum((g(locations) * jumps).tolist())
    else:
        atom_sum = 0.0
    return density + atom_sum


# ---------------------------------------------------------------------------
# GM 条件
# ---------------------------------------------------------------------------


class CheckedPoint(BaseModel):
    """GM 条件の1点での検査結果"""
    x: float
    lhs: float
    rhs: float
    passed: bool


class GMCertificate(BaseModel):
    """GM 条件の定数 (C, λ = 2^ν) と検査結果"""
    model_config = ConfigDict(populate_by_name=True)

    C: float = Field(..., ge=0.0)
    nu: int = Field(..., ge=1)
    lambda_: Optional[float] = Field(default=None, alias="lambda")
    checked_points: List[CheckedPoint] = Field(default_factory=list)

    @model_validator(mode="after")
    def _lambda_is_power_of_two(self) -> "GMCertificate":
        expected = float(2 ** self.nu)
        if self.lambda_ is None:
            self.lambda_ = expected
        elif self.lambda_ != expected:
            raise ValueError(f"λ は 2^ν である必要があります: λ={self.lambda_}, ν={self.nu}")
        return self

    @property
    def lam(self) -> float:
        return float(self.lambda_)

    @property
    def passed(self) -> bool:
        return all(point.passed for point in self.checked_points)

    def failing_points(self) -> List[CheckedPoint]:
        return [point for point in self.checked_points if not point.passed]


def gm_sides(profile: RadialProfile, x: float, lam: float) -> Tuple[float, float]:
    """GM 条件の両辺 (∫_x^{2x}|df|, ∫_{x/λ}^{λx} |f(t)|/t dt)"""
    lhs = variation(profile, x, 2.0 * x)
    rhs = log_weighted_mass(profile, x / lam, lam * x)
    return lhs, rhs


def _passes(lhs: float, rhs: float, C: float) -> bool:
    if lhs == 0.0 and rhs == 0.0:
        return True
    return lhs <= C * rhs


def gm_verify(profile: RadialProfile, cert: GMCertificate, x_grid: Sequence[float]) -> GMCertificate:
    """グリッド上で GM 条件 ∫_x^{2x}|df| ≤ C ∫_{x/λ}^{λx}|f|/t dt を検査する

    Returns:
        checked_points を埋めた新しい証明書
    """
    if len(x_grid) == 0:
        raise ValueError("x_grid が空です")
    points: List[CheckedPoint] = []
    for x in x_grid:
        lhs, rhs = gm_sides(profile, float(x), cert.lam)
        points.append(CheckedPoint(x=float(x), lhs=lhs, rhs=rhs, passed=_passes(lhs, rhs, cert.C)))
    result = cert.model_copy(update={"checked_points": points})
    failures = result.failing_points()
    logger.info(
        f"[gm] GM検査: profile={profile.name}, C={cert.C:.6g}, λ={cert.lam:g}, "
        f"points={len(points)}, failures={len(failures)}"
    )
    if failures:
        logger.debug(f"[gm] 最初の失敗点: x={failures[0].x}, lhs={failures[0].lhs}, rhs={failures[0].rhs}")
    return result


def gm_fit_constant(profile: RadialProfile, nu: int, x_grid: Sequence[float]) -> float:
    """グリッド上で GM 条件を満たす最小の C（max lhs/rhs）

    Raises:
        NotGMOnGridError: lhs > 0 かつ rhs = 0 となる点がある場合
    """
    lam = float(2 ** nu)
    best = 0.0
    for x in x_grid:
        lhs, rhs = gm_sides(profile, float(x), lam)
        if rhs == 0.0:
            if lhs > 0.0:
                raise NotGMOnGridError(
                    f"x={x} で lhs > 0 かつ rhs = 0 です",
                    {"profile": profile.name, "x": float(x), "lhs": lhs},
                )
            continue
        best = max(best, lhs / rhs)
    logger.info(f"[gm] 定数を当てはめ: profile={profile.name}, ν={nu}, C={best:.6g}")
    return best


def gm_fit_certificate(profile: RadialProfile, nu: int, x_grid: Sequence[float]) -> GMCertificate:
    """当てはめた定数で証明書を作り、同じグリッドで検証する"""
    constant = gm_fit_constant(profile, nu, x_grid) + 1e-12
    return gm_verify(profile, GMCertificate(C=constant, nu=nu), x_grid)


def default_x_grid(profile: RadialProfile, lam: float = 2.0, lo: float = 1e-3, hi: float = 1e6) -> np.ndarray:
    """GM 検査の既定グリッド（1桁あたり64点の等比、台に合わせて切り詰め）"""
    if profile.support_end is not None:
        hi = min(hi, lam * profile.support_end)
    if profile.oscillation_frequency > 0:
        hi = min(hi, 1e4)
    count = int(round(64 * math.log10(hi / lo))) + 1
    return np.geomspace(lo, hi, count)


class PointwiseReport(BaseModel):
    """|f(t)| / ∫_{t/λ}^{λt}|f(s)|/s ds の表"""
    ratios: List[Tuple[float, Optional[float]]]
    max_ratio: Optional[float]
    vacuous: bool


def pointwise_bound_check(profile: RadialProfile, cert: GMCertificate, t_grid: Sequence[float]) -> PointwiseReport:
    """点ごとの評価 |f(t)| ≲ ∫_{t/λ}^{λt}|f(s)|/s ds の経験的な定数を求める

    0/0 の点は None（vacuous）として記録します。
    """
    ratios: List[Tuple[float, Optional[float]]] = []
    for t in t_grid:
        numerator = abs(float(profile(np.array([t]))[0]))
        denominator = log_weighted_mass(profile, t / cert.lam, cert.lam * t)
        if denominator == 0.0:
            ratios.append((float(t), None if numerator == 0.0 else math.inf))
        else:
            ratios.append((float(t), numerator / denominator))
    finite = [r for _, r in ratios if r is not None]
    max_ratio = max(finite) if finite else None
    logger.info(f"[gm] 点ごとの評価: profile={profile.name}, max_ratio={max_ratio}")
    return PointwiseReport(ratios=ratios, max_ratio=max_ratio, vacuous=not finite)


# ---------------------------------------------------------------------------
# 二進ブロック
# ---------------------------------------------------------------------------


class DyadicStats(BaseModel):
    """二進ブロック n の統計量"""
    n: int
    A_n: float = Field(..., ge=0.0)
    B_n: float = Field(..., ge=0.0)
    good: bool
    E_threshold: Optional[float] = None
    E_measure: Optional[float] = None
    E_bound: Optional[float] = None
    bound_holds: Optional[bool] = None

    @model_validator(mode="after")
    def _window_contains_block(self) -> "DyadicStats":
        if self.A_n > self.B_n * (1.0 + 1e-9) + 1e-300:
            raise ValueError(f"A_n ≤ B_n が成り立ちません: A_n={self.A_n}, B_n={self.B_n}")
        return self


def window_supremum(
    profile: RadialProfile,
    a: float,
    b: float,
    weight_exponent: float = 0.0,
    points: int = SUP_GRID_POINTS,
) -> Tuple[float, float]:
    """sup_{a≤t≤b} t^w |f(t)|（等比格子＋非滑らかな点の片側値＋局所最大化）"""
    parts = [np.geomspace(a, b, points)]
    if profile.oscillation_frequency > 0:
        parts.append(split_edges(a, b, math.pi / (16.0 * profile.oscillation_frequency)))
    breaks = np.array(profile.breaks_in(a, b) + [a, b])
    parts.append(np.clip(np.concatenate([breaks * (1 - ONE_SIDED), breaks, breaks * (1 + ONE_SIDED)]), a, b))
    grid = np.unique(np.concatenate(parts))

    def target(t: np.ndarray) -> np.ndarray:
        return np.power(t, weight_exponent) * np.abs(profile(t))

    return refine_supremum(target, grid)


def _is_good(n: int, A_n: float, B_n: float, nu: int) -> bool:
    return n == 0 or B_n <= 2.0 ** (4 * nu) * A_n * (1.0 + 1e-12)


def block_stats(profile: RadialProfile, n: int, nu: int) -> DyadicStats:
    a_n, _ = window_supremum(profile, 2.0 ** n, 2.0 ** (n + 1))
    b_n, _ = window_supremum(profile, 2.0 ** (n - 2 * nu), 2.0 ** (n + 2 * nu))
    b_n = max(a_n, b_n)
    return DyadicStats(n=n, A_n=a_n, B_n=b_n, good=_is_good(n, a_n, b_n, nu))


def dyadic_stats(profile: RadialProfile, nu: int, n_range: Tuple[int, int]) -> List[DyadicStats]:
    """n_range（両端を含む）の各ブロックの A_n, B_n と good / bad の判定"""
    n_lo, n_hi = n_range
    stats = [block_stats(profile, n, nu) for n in range(n_lo, n_hi + 1)]
    good = sum(1 for s in stats if s.good)
    logger.info(f"[gm] 二進ブロック統計: profile={profile.name}, ν={nu}, n=[{n_lo}, {n_hi}], good={good}/{len(stats)}")
    return stats


class _MeasureGrid(NamedTuple):
    midpoints: np.ndarray
    widths: np.ndarray
    values: np.ndarray
    tolerance: float


def _measure_grid(profile: RadialProfile, n: int, nu: int) -> _MeasureGrid:
    # [2^{n-ν}, 2^{n+ν}] の各二進ブロックを等分した中点格子
    mids, widths = [], []
    for k in range(n - nu, n + nu):
        lo, width = 2.0 ** k, 2.0 ** k / MEASURE_CELLS_PER_BLOCK
        mids.append(lo + width * (np.arange(MEASURE_CELLS_PER_BLOCK) + 0.5))
        widths.append(np.full(MEASURE_CELLS_PER_BLOCK, width))
    midpoints = np.concatenate(mids)
    cell = np.concatenate(widths)
    return _MeasureGrid(midpoints, cell, profile(midpoints), 2.0 * float(cell.max()))


def _require_good(profile: RadialProfile, n: int, nu: int, C: float) -> DyadicStats:
    if n <= 0:
        raise ValueError(f"n > 0 である必要があります: {n}")
    if C <= 0:
        raise ValueError(f"C > 0 である必要があります: {C}")
    stats = block_stats(profile, n, nu)
    if not stats.good:
        raise BadBlockError(
            f"n={n} は bad です（B_n > 2^{{4ν}} A_n）",
            {"profile": profile.name, "n": n, "A_n": stats.A_n, "B_n": stats.B_n},
        )
    return stats


def en_measure(profile: RadialProfile, n: int, C: float, nu: int) -> DyadicStats:
    """E_n = {x ∈ [2^{n-ν}, 2^{n+ν}] : |f(x)| > A_n/(8C 2^{2ν})} の測度

    下界 2^n/(8C 2^{5ν}) を格子2セル分の許容差で確認し、結果を bound_holds に記録します。

    Raises:
        BadBlockError: n が good でない場合
    """
    stats = _require_good(profile, n, nu, C)
    threshold = stats.A_n / (8.0 * C * 2.0 ** (2 * nu))
    grid = _measure_grid(profile, n, nu)
    measure = math.fsum(grid.widths[np.abs(grid.values) > threshold].tolist())
    bound = 2.0 ** n / (8.0 * C * 2.0 ** (5 * nu))
    if stats.A_n == 0.0:
        # f がブロック上で消えるときは下界の主張がない
        logger.info(f"[gm] A_n = 0 のため E_n の下界は空虚です: profile={profile.name}, n={n}")
        return stats.model_copy(update={"E_threshold": threshold, "E_measure": measure, "E_bound": bound})
    holds = measure >= bound - grid.tolerance
    if not holds:
        logger.warning(f"[gm] E_n の下界が成立しません: profile={profile.name}, n={n}, measure={measure}, bound={bound}")
    return stats.model_copy(
        update={"E_threshold": threshold, "E_measure": measure, "E_bound": bound, "bound_holds": holds}
    )


class SignIntervalWitness(BaseModel):
    """E_n^± を十分に含む符号一定の区間 (ℓ_n, m_n)"""
    n: int
    ell: float
    em: float
    sign: int
    captured_measure: float = Field(..., ge=0.0)
    bound: float

    @model_validator(mode="after")
    def _ordered(self) -> "SignIntervalWitness":
        if self.sign not in (1, -1):
            raise ValueError(f"sign は ±1 です: {self.sign}")
        if not self.ell < self.em:
            raise ValueError(f"ℓ < m である必要があります: {self.ell}, {self.em}")
        return self


def sign_interval_search(profile: RadialProfile, n: int, C: float, nu: int) -> SignIntervalWitness:
    """符号一定の区間のうち E_n^± を最も多く含むものを返す

    Raises:
        BadBlockError: n が good でない場合
        WitnessNotFoundError: 下界 2^n/(256 C^3 2^{15ν}) を満たす区間が格子上にない場合
    """
    stats = _require_good(profile, n, nu, C)
    threshold = stats.A_n / (8.0 * C * 2.0 ** (2 * nu))
    grid = _measure_grid(profile, n, nu)
    signs = np.where(grid.values > 0, 1, -1)
    in_e = np.abs(grid.values) > threshold

    # 符号一定の連続セルの区切り
    boundaries = np.nonzero(np.diff(signs) != 0)[0] + 1
    starts = np.concatenate([[0], boundaries])
    stops = np.concatenate([boundaries, [signs.size]])
    captured = np.array([
        math.fsum(grid.widths[s:e][in_e[s:e]].tolist()) for s, e in zip(starts, stops)
    ])
    best = int(np.argmax(captured))
    s, e = int(starts[best]), int(stops[best])
    ell = float(grid.midpoints[s] - 0.5 * grid.widths[s])
    em = float(grid.midpoints[e - 1] + 0.5 * grid.widths[e - 1])
    bound = 2.0 ** n / (256.0 * C ** 3 * 2.0 ** (15 * nu))

    if captured[best] <= 0.0 or captured[best] < bound - grid.tolerance:
        raise WitnessNotFoundError(
            "格子の解像度で符号区間の証拠が見つかりません",
            {"profile": profile.name, "n": n, "captured": float(captured[best]), "bound": bound},
        )
    logger.info(
        f"[gm] 符号区間: profile={profile.name}, n={n}, (ℓ, m)=({ell:.6g}, {em:.6g}), "
        f"sign={int(signs[s])}, captured={captured[best]:.6g}, bound={bound:.3e}"
    )
    return SignIntervalWitness(
        n=n, ell=ell, em=em, sign=int(signs[s]), captured_measure=float(captured[best]), bound=bound
    )


# ---------------------------------------------------------------------------
# Abel–Olivier 型の減衰と部分積分
# ---------------------------------------------------------------------------


class DecayStatus(str, Enum):
    """減衰プロファイルの判定"""
    DECAYING = "decaying"
    STALLED = "stalled"
    UNBOUNDED = "unbounded"


class DecayPoint(BaseModel):
    """T と sup_{t≥T} t|f(t)|"""
    T: float
    sup: float


class DecayProfile(BaseModel):
    """減衰プロファイル（非増加、裾は解析的な上界で制御）"""
    points: List[DecayPoint]
    status: DecayStatus
    tail_bound: float


def classify_decay(block_sups: Sequence[float]) -> DecayStatus:
    """区間ごとの上限の列から減衰の様子を判定する"""
    first, last = block_sups[0], block_sups[-1]
    if last > 2.0 * first and last > 0:
        return DecayStatus.UNBOUNDED
    if first > 0 and last >= 0.5 * first:
        return DecayStatus.STALLED
    return DecayStatus.DECAYING


def assemble_decay_profile(Ts: Sequence[float], segment_sups: Sequence[float], tail: float) -> DecayProfile:
    """区間ごとの上限 [T_i, T_{i+1}) と裾の上界から累積上限の列を作る"""
    if math.isinf(tail):
        # 裾を抑えられないときは格子上の列だけで判定する
        status = classify_decay(segment_sups) if len(segment_sups) > 1 else DecayStatus.STALLED
        if status == DecayStatus.DECAYING:
            status = DecayStatus.STALLED
    else:
        status = classify_decay(list(segment_sups) + [tail])

    running = 0.0 if math.isinf(tail) else tail
    sups: List[float] = []
    for value in reversed(segment_sups):
        running = max(running, value)
        sups.append(running)
    sups.reverse()
    points = [DecayPoint(T=T, sup=s) for T, s in zip(Ts, sups)]
    return DecayProfile(points=points, status=status, tail_bound=tail)


def abel_olivier_profile(profile: RadialProfile, T_grid: Sequence[float]) -> DecayProfile:
    """T ↦ sup_{t≥T} t|f(t)| を計算する

    [T, 16 max T] は格子＋局所最大化、その先は減衰ヒント K t^{1-p}（p > 1）で抑えます。
    t|f(t)| が増大する場合は status = unbounded を返します。
    """
    Ts = sorted(float(T) for T in T_grid)
    if not Ts or Ts[0] <= 0:
        raise ValueError("T_grid は正の値の空でない列である必要があります")
    cut = 16.0 * Ts[-1]

    if profile.support_end is not None and cut >= profile.support_end:
        tail = 0.0
    elif profile.decay_hint is not None and profile.decay_hint.exponent > 1.0:
        hint = profile.decay_hint
        tail = hint.constant * max(cut, hint.start) ** (1.0 - hint.exponent)
    else:
        tail = math.inf

    edges = Ts + [cut]
    segment_sups: List[float] = []
    for lo, hi in zip(edges, edges[1:]):
        if profile.support_end is not None and lo >= profile.support_end:
            segment_sups.append(0.0)
            continue
        top = hi if profile.support_end is None else min(hi, profile.support_end)
        value, _ = window_supremum(profile, lo, top, weight_exponent=1.0, points=1024)
        segment_sups.append(value)

    result = assemble_decay_profile(Ts, segment_sups, tail)
    logger.info(
        f"[gm] 減衰プロファイル: profile={profile.name}, status={result.status.value}, "
        f"last=({result.points[-1].T:g}, {result.points[-1].sup:.6g}), tail={tail:.3e}"
    )
    return result


class IBPSides(BaseModel):
    """部分積分恒等式の両辺"""
    nu_exp: float
    lhs: float
    rhs: float

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs)


def ibp_sides(profile: RadialProfile, nu_exp: float) -> IBPSides:
    """∫_0^∞ t^{ν-1} f(t) dt と -(1/ν) ∫_0^∞ t^ν df(t)

    Raises:
        NonConvergenceError: どちらかの積分が収束しない場合
    """
    if nu_exp == 0:
        raise ValueError("ν ≠ 0 である必要があります")
    if profile.is_zero():
        return IBPSides(nu_exp=nu_exp, lhs=0.0, rhs=0.0)
    lhs = integrate_profile(
        profile, lambda t: np.power(t, nu_exp - 1.0) * profile(t), 0.0, math.inf, nu_exp - 1.0, origin_shift=0.0
    ).value
    stieltjes_value = stieltjes(profile, lambda t: np.power(t, nu_exp), nu_exp, 0.0, math.inf)
    return IBPSides(nu_exp=nu_exp, lhs=lhs, rhs=-stieltjes_value / nu_exp)


def ibp_identity_check(profile: RadialProfile, nu_exp: float, tol: float) -> float:
    """部分積分恒等式 ∫ t^{ν-1} f = -(1/ν) ∫ t^ν df の残差"""
    sides = ibp_sides(profile, nu_exp)
    residual = sides.residual
    level = logging.INFO if residual < tol else logging.WARNING
    logger.log(
        level,
        f"[gm] 部分積分恒等式: profile={profile.name}, ν={nu_exp:g}, lhs={sides.lhs:.15g}, "
        f"rhs={sides.rhs:.15g}, residual={residual:.3e}, tol={tol:.1e}",
    )
    return residual
