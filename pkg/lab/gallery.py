"""プロファイル・数列のカタログ

GM / GMS の判定、閉じた形の変換、判定の証拠点を持つ項目を名前で引けるようにします。
CLI の --function / --sequence はこの名前を使います。
"""
import logging
import math
import re
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.special import gamma

from core import settings
from core.errors import NotGMOnGridError, UnknownEntryError, WitnessNotFoundError
from lab.gm_analysis import (
    GMCertificate,
    JumpAtom,
    Piece,
    PowerHint,
    RadialProfile,
    default_x_grid,
    gm_verify,
    piecewise_profile,
)
from lab.series import SequenceProfile, gms_verify
from lab.transforms import hankel_limit

# ロギング設定
logger = logging.getLogger(__name__)

# 非負で減少する関数は C = 1/ln 2 で GM（余裕 0.01）
GM_CONSTANT = 1.0 / math.log(2.0) + 0.01
# 非 GM の証拠に使う定数
WITNESS_CONSTANT = 10.0


class GMKind(str, Enum):
    """GM / GMS の判定"""
    GM = "GM"
    NOT_GM = "not-GM"
    UNKNOWN = "unknown"


class GMStatus(BaseModel):
    """判定と、その根拠となる定数または証拠点"""
    model_config = ConfigDict(frozen=True)

    kind: GMKind
    C: Optional[float] = None
    nu: int = 1
    reason: Optional[str] = None
    witness: Optional[float] = None


class ClosedForm(BaseModel):
    """次数 alpha の変換の閉じた形と、その有効範囲"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    alpha: float
    formula: Callable[[float], float]
    domain: Callable[[float], bool]
    domain_text: str
    spot_points: Tuple[float, ...]
    tolerance: float


class GalleryEntry(BaseModel):
    """カタログの1項目"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str
    profile: Optional[RadialProfile] = None
    sequence: Optional[SequenceProfile] = None
    gm_status: GMStatus
    closed_form_transform: Optional[ClosedForm] = None
    notes: str = ""

    @property
    def is_sequence(self) -> bool:
        return self.sequence is not None

    @property
    def profile_or_sequence(self) -> "RadialProfile | SequenceProfile":
        return self.sequence if self.sequence is not None else self.profile


class SpotCheck(BaseModel):
    """閉じた形と数値積分の照合結果"""
    u: float
    closed_form: float
    numeric: float
    difference: float
    passed: bool


# ---------------------------------------------------------------------------
# プロファイル
# ---------------------------------------------------------------------------


def _constant(value: float) -> Callable[[np.ndarray], np.ndarray]:
    return lambda t: np.full_like(np.asarray(t, dtype=float), value)


def cos_over_sqrt() -> GalleryEntry:
    """f(t) = t^{-1/2} cos t（∫f は収束するが GM ではない）"""
    profile = RadialProfile(
        name="cos_over_sqrt",
        value=lambda t: np.cos(t) / np.sqrt(t),
        derivative=lambda t: -0.5 * np.cos(t) * t ** -1.5 - np.sin(t) / np.sqrt(t),
        decay_hint=PowerHint(exponent=0.5),
        origin_hint=PowerHint(exponent=0.5),
        oscillation_frequency=1.0,
    )
    scale = 0.5 * math.sqrt(math.pi / 2.0)
    return GalleryEntry(
        name="cos_over_sqrt",
        profile=profile,
        gm_status=GMStatus(
            kind=GMKind.NOT_GM,
            C=WITNESS_CONSTANT,
            reason="1周期ごとの変動の和が x^{1/2} で増え、右辺は x^{-1/2} で減る",
            witness=1e3,
        ),
        closed_form_transform=ClosedForm(
            alpha=-0.5,
            formula=lambda u: scale * (1.0 / math.sqrt(u + 1.0) + 1.0 / math.sqrt(abs(u - 1.0))),
            domain=lambda u: u > 0 and u != 1.0,
            domain_text="u > 0, u ≠ 1（u = 1 で発散）",
            spot_points=(1.5, 2.0, 5.0),
            tolerance=1e-4,
        ),
        notes="余弦変換は u → 1 で無限大に近づき、u = 1 では収束しない",
    )


def trunc_exp() -> GalleryEntry:
    """f = e^{-t}（(0, 1]）、0（それ以降）"""
    profile = piecewise_profile(
        "trunc_exp",
        [Piece(0.0, 1.0, lambda t: np.exp(-t), lambda t: -np.exp(-t))],
        origin_hint=PowerHint(exponent=0.0),
    )
    e_inv = math.exp(-1.0)
    return GalleryEntry(
        name="trunc_exp",
        profile=profile,
        gm_status=GMStatus(kind=GMKind.GM, C=GM_CONSTANT, reason="非負で減少（t = 1 で跳び -e^{-1}）"),
        closed_form_transform=ClosedForm(
            alpha=-0.5,
            formula=lambda u: (1.0 - e_inv * math.cos(u) + e_inv * u * math.sin(u)) / (1.0 + u * u),
            domain=lambda u: u >= 0,
            domain_text="u ≥ 0",
            spot_points=(0.0, 2.0, 7.0),
            tolerance=1e-10,
        ),
        notes="部分積分を2回行って得られる余弦変換",
    )


def power_tail(p: float) -> GalleryEntry:
    """f = 1（(0, 1]）、t^{-p}（それ以降）"""
    p = float(p)
    if p <= 0:
        raise ValueError(f"p > 0 である必要があります: {p}")
    name = f"power_tail({p:g})"
    profile = piecewise_profile(
        name,
        [
            Piece(0.0, 1.0, _constant(1.0), _constant(0.0)),
            Piece(1.0, math.inf, lambda t: t ** -p, lambda t: -p * t ** (-p - 1.0)),
        ],
        decay_hint=PowerHint(exponent=p),
        origin_hint=PowerHint(exponent=0.0),
    )
    return GalleryEntry(
        name=name,
        profile=profile,
        gm_status=GMStatus(kind=GMKind.GM, C=GM_CONSTANT, reason="非負で減少"),
        notes="p = 2 の二進ブロックはすべて good、p = 3 は n ≥ 2ν ですべて bad",
    )


def power_transform(alpha: float, p: float) -> Callable[[float], float]:
    """H_α(t^{-p})(u) = Γ(α+1) 2^{2α+1-p} u^{p-2α-2} Γ(α+1-p/2) / Γ(p/2)（α+1/2 < p < 2α+2）"""
    if not alpha + 0.5 < p < 2.0 * alpha + 2.0:
        raise ValueError(f"閉じた形は α+1/2 < p < 2α+2 でのみ有効です: α={alpha}, p={p}")
    factor = gamma(alpha + 1.0) * 2.0 ** (2.0 * alpha + 1.0 - p) * gamma(alpha + 1.0 - p / 2.0) / gamma(p / 2.0)
    return lambda u: factor * u ** (p - 2.0 * alpha - 2.0)


def pure_power(p: float) -> GalleryEntry:
    """f = t^{-p}（(0, ∞) 全体）

    閉じた形は α = max(-1/2, p-1) で記録します（α+1/2 < p < 2α+2 を満たす）。
    """
    p = float(p)
    if p <= 0:
        raise ValueError(f"p > 0 である必要があります: {p}")
    name = f"pure_power({p:g})"
    profile = RadialProfile(
        name=name,
        value=lambda t: np.power(t, -p),
        derivative=lambda t: -p * np.power(t, -p - 1.0),
        decay_hint=PowerHint(exponent=p),
        origin_hint=PowerHint(exponent=p),
    )
    alpha = max(-0.5, p - 1.0)
    return GalleryEntry(
        name=name,
        profile=profile,
        gm_status=GMStatus(kind=GMKind.GM, C=GM_CONSTANT, reason="非負で減少"),
        closed_form_transform=ClosedForm(
            alpha=alpha,
            formula=power_transform(alpha, p),
            domain=lambda u: u > 0,
            domain_text="u > 0",
            spot_points=(0.5, 1.0, 2.0),
            tolerance=1e-6,
        ),
        notes="1/t² の二進ブロックはすべて good、1/t³ はすべて bad",
    )


def fresnel_check() -> GalleryEntry:
    """∫_0^∞ t^{-1/2} cos(ut) dt = √(π/(2u))"""
    base = pure_power(0.5)
    return GalleryEntry(
        name="fresnel_check",
        profile=base.profile.model_copy(update={"name": "fresnel_check"}),
        gm_status=base.gm_status,
        closed_form_transform=ClosedForm(
            alpha=-0.5,
            formula=lambda u: math.sqrt(math.pi / (2.0 * u)),
            domain=lambda u: u > 0,
            domain_text="u > 0",
            spot_points=(0.5, 1.0, 2.0),
            tolerance=1e-6,
        ),
        notes="u = 1 でフレネル積分 √(π/2)",
    )


def zero_profile() -> GalleryEntry:
    profile = RadialProfile(
        name="zero",
        value=_constant(0.0),
        derivative=_constant(0.0),
        decay_hint=PowerHint(exponent=1.0, constant=0.0),
        origin_hint=PowerHint(exponent=0.0, constant=0.0),
        identically_zero=True,
    )
    return GalleryEntry(
        name="zero",
        profile=profile,
        gm_status=GMStatus(kind=GMKind.GM, C=0.0, reason="両辺 0"),
        closed_form_transform=ClosedForm(
            alpha=-0.5,
            formula=lambda u: 0.0,
            domain=lambda u: u >= 0,
            domain_text="u ≥ 0",
            spot_points=(0.0, 1.0, 2.0),
            tolerance=1e-15,
        ),
    )


def negative_power_tail() -> GalleryEntry:
    """-power_tail(2)"""
    profile = piecewise_profile(
        "negative_power_tail",
        [
            Piece(0.0, 1.0, _constant(-1.0), _constant(0.0)),
            Piece(1.0, math.inf, lambda t: -(t ** -2.0), lambda t: 2.0 * t ** -3.0),
        ],
        decay_hint=PowerHint(exponent=2.0),
        origin_hint=PowerHint(exponent=0.0),
    )
    return GalleryEntry(
        name="negative_power_tail",
        profile=profile,
        gm_status=GMStatus(kind=GMKind.GM, C=GM_CONSTANT, reason="-f が非負で減少"),
        notes="符号区間の証拠は sign = -1",
    )


def monotone_exp() -> GalleryEntry:
    """f = e^{-t}（(0, ∞) 全体）"""
    profile = RadialProfile(
        name="monotone_exp",
        value=lambda t: np.exp(-t),
        derivative=lambda t: -np.exp(-t),
        # t^10 e^{-t} ≤ (10/e)^10
        decay_hint=PowerHint(exponent=10.0, constant=(10.0 / math.e) ** 10),
        origin_hint=PowerHint(exponent=0.0),
    )
    return GalleryEntry(
        name="monotone_exp",
        profile=profile,
        gm_status=GMStatus(kind=GMKind.GM, C=GM_CONSTANT, reason="非負で減少"),
        # H_α(e^{-t})(u) = Γ(2α+2) / (1+u²)^{α+3/2}（ここでは α = 0）
        closed_form_transform=ClosedForm(
            alpha=0.0,
            formula=lambda u: (1.0 + u * u) ** -1.5,
            domain=lambda u: u >= 0,
            domain_text="u ≥ 0",
            spot_points=(0.0, 1.0, 3.0),
            tolerance=1e-8,
        ),
    )


def alternating_dyadic(r: float = 2.0) -> GalleryEntry:
    """f = 1（(0, 1)）、(-1)^k 2^{-rk}（[2^k, 2^{k+1})）"""
    r = float(r)
    if r <= 0:
        raise ValueError(f"r > 0 である必要があります: {r}")
    name = "alternating_dyadic" if r == 2.0 else f"alternating_dyadic({r:g})"

    def value(t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        _, exponent = np.frexp(t)
        k = np.maximum(exponent - 1, 0)
        out = np.where(k % 2 == 0, 1.0, -1.0) * np.exp2(-r * k)
        return np.where(t < 1.0, 1.0, out)

    def powers_in(a: float, b: float, closed_right: bool) -> List[int]:
        lo = max(1, math.floor(math.log2(a)) if a > 0 else 1)
        hi = math.ceil(math.log2(b)) if math.isfinite(b) else 1000
        return [k for k in range(lo, min(hi, 1000) + 1) if a < 2.0 ** k < b or (closed_right and 2.0 ** k == b)]

    def breakpoint_rule(a: float, b: float) -> List[float]:
        return [2.0 ** k for k in powers_in(a, b, closed_right=False)]

    def atom_rule(a: float, b: float) -> List[JumpAtom]:
        return [
            JumpAtom(location=2.0 ** k, jump=(-1.0) ** k * 2.0 ** (-r * k) * (1.0 + 2.0 ** r))
            for k in powers_in(a, b, closed_right=True)
        ]

    profile = RadialProfile(
        name=name,
        value=value,
        derivative=_constant(0.0),
        breakpoint_rule=breakpoint_rule,
        atom_rule=atom_rule,
        decay_hint=PowerHint(exponent=r, constant=2.0 ** r),
        origin_hint=PowerHint(exponent=0.0),
    )
    return GalleryEntry(
        name=name,
        profile=profile,
        gm_status=GMStatus(
            kind=GMKind.GM,
            C=GM_CONSTANT,
            reason="(x, 2x] の跳びは1つで、大きさは隣接2ブロックの ∫|f|/t の 1/ln 2 倍以下",
        ),
        notes="符号が変わる GM 関数。符号区間の証拠は1つの二進ブロックに収まる",
    )


# ---------------------------------------------------------------------------
# 数列
# ---------------------------------------------------------------------------


def _from_one(fn: Callable[[np.ndarray], np.ndarray]) -> Callable[[np.ndarray], np.ndarray]:
    # a_0 = 0、n ≥ 1 は fn(n)
    def term(n: np.ndarray) -> np.ndarray:
        n = np.asarray(n, dtype=np.int64)
        safe = np.maximum(n, 1).astype(float)
        return np.where(n >= 1, fn(safe), 0.0)
    return term


def cosn_over_n() -> GalleryEntry:
    sequence = SequenceProfile(
        name="cosn_over_n",
        term=_from_one(lambda n: np.cos(n) / n),
        decay_hint=PowerHint(exponent=1.0),
    )
    return GalleryEntry(
        name="cosn_over_n",
        sequence=sequence,
        gm_status=GMStatus(
            kind=GMKind.NOT_GM, C=WITNESS_CONSTANT, reason="ブロックの変動が定数程度、右辺は 1/n", witness=1024
        ),
        notes="Σa_n は収束するが x = 1 で級数は (1/2) ln N のように発散する",
    )


def square_wave() -> GalleryEntry:
    """[π/2, 3π/2] の指示関数の余弦係数

    a_0 = 1/2、a_{2k-1} = (2/π)(-1)^k/(2k-1)、偶数番目（n ≥ 2）は 0。
    """
    def term(n: np.ndarray) -> np.ndarray:
        n = np.asarray(n, dtype=np.int64)
        k = (n + 1) // 2
        odd = (n % 2 == 1)
        values = np.where(odd, (2.0 / math.pi) * np.where(k % 2 == 0, 1.0, -1.0) / np.maximum(n, 1), 0.0)
        return np.where(n == 0, 0.5, values)

    sequence = SequenceProfile(
        name="square_wave",
        term=term,
        decay_hint=PowerHint(exponent=1.0, constant=2.0 / math.pi),
        closed_form_tag="square_wave",
    )
    return GalleryEntry(
        name="square_wave",
        sequence=sequence,
        gm_status=GMStatus(
            kind=GMKind.NOT_GM, C=WITNESS_CONSTANT, reason="0 を挟む項の差が |a_n| の2倍になる", witness=1024
        ),
        notes="級数は有界だが x = π/2 の跳びの近くで一様収束しない（和は指示関数、G = (π/2)(g - 1/2)）",
    )


def square_wave_sum(x: float) -> float:
    """square_wave の級数の和（[π/2, 3π/2] を法 2π で見た指示関数、跳びでは 1/2）"""
    y = math.fmod(abs(x), 2.0 * math.pi)
    if math.isclose(y, math.pi / 2) or math.isclose(y, 3 * math.pi / 2):
        return 0.5
    return 1.0 if math.pi / 2 < y < 3 * math.pi / 2 else 0.0


def inverse_square() -> GalleryEntry:
    sequence = SequenceProfile(
        name="inverse_square",
        term=_from_one(lambda n: 1.0 / (n * n)),
        decay_hint=PowerHint(exponent=2.0),
    )
    return GalleryEntry(
        name="inverse_square",
        sequence=sequence,
        gm_status=GMStatus(kind=GMKind.GM, C=GM_CONSTANT, reason="非負で減少"),
    )


def alternating_harmonic() -> GalleryEntry:
    sequence = SequenceProfile(
        name="alternating_harmonic",
        term=_from_one(lambda n: np.where(n % 2 == 0, 1.0, -1.0) / n),
        decay_hint=PowerHint(exponent=1.0),
    )
    return GalleryEntry(
        name="alternating_harmonic",
        sequence=sequence,
        gm_status=GMStatus(
            kind=GMKind.NOT_GM, C=WITNESS_CONSTANT, reason="ブロックの変動は 2 ln 2、右辺は 1/n", witness=1024
        ),
        notes="n|a_n| = 1 で減衰しない",
    )


def zero_sequence() -> GalleryEntry:
    sequence = SequenceProfile(name="zero_sequence", term=lambda n: np.zeros(np.shape(n)), support_end=0)
    return GalleryEntry(
        name="zero_sequence",
        sequence=sequence,
        gm_status=GMStatus(kind=GMKind.GM, C=0.0, reason="両辺 0"),
    )


# ---------------------------------------------------------------------------
# カタログ
# ---------------------------------------------------------------------------

# パラメータつきの族（名前(引数) で引く）
FAMILIES: Dict[str, Callable[[float], GalleryEntry]] = {
    "power_tail": power_tail,
    "pure_power": pure_power,
    "alternating_dyadic": alternating_dyadic,
}

_FAMILY_PATTERN = re.compile(r"^(?P<family>[a-z_]+)\((?P<arg>[^()]+)\)$")


def _builders() -> List[Callable[[], GalleryEntry]]:
    return [
        cos_over_sqrt,
        trunc_exp,
        lambda: power_tail(1.5),
        lambda: power_tail(2.0),
        lambda: power_tail(3.0),
        lambda: pure_power(2.0),
        lambda: pure_power(3.0),
        lambda: alternating_dyadic(2.0),
        fresnel_check,
        zero_profile,
        negative_power_tail,
        monotone_exp,
        cosn_over_n,
        square_wave,
        inverse_square,
        alternating_harmonic,
        zero_sequence,
    ]


def default_n_grid(hi: int = 10_000) -> List[int]:
    """GMS 検査の既定グリッド（1 から hi までの等比、整数に丸めて重複なし）"""
    return sorted({int(round(n)) for n in np.geomspace(1, hi, 41)})


def verify_entry(entry: GalleryEntry, grid: Optional[List[float]] = None) -> None:
    """記録された判定を gm_analysis / series で確認する

    Raises:
        NotGMOnGridError: GM の項目が記録された定数で通らない場合
        WitnessNotFoundError: 非 GM の項目が証拠点で失敗しない場合
    """
    status = entry.gm_status
    if status.kind == GMKind.UNKNOWN:
        return
    if status.kind == GMKind.GM:
        if entry.is_sequence:
            report = gms_verify(entry.sequence, status.C, status.nu, grid or default_n_grid())
            failing = [p.n for p in report.failing_points()]
        else:
            cert = gm_verify(entry.profile, GMCertificate(C=status.C, nu=status.nu), grid or default_x_grid(entry.profile))
            failing = [p.x for p in cert.failing_points()]
        if failing:
            raise NotGMOnGridError(
                f"{entry.name} が記録された定数 C={status.C} で GM 条件を満たしません",
                {"entry": entry.name, "first_failure": failing[0]},
            )
        return
    witness = [int(status.witness)] if entry.is_sequence else [status.witness]
    if entry.is_sequence:
        passed = gms_verify(entry.sequence, status.C, status.nu, witness).passed
    else:
        passed = gm_verify(entry.profile, GMCertificate(C=status.C, nu=status.nu), witness).passed
    if passed:
        raise WitnessNotFoundError(
            f"{entry.name} が証拠点 {status.witness} で GM 条件を満たしてしまいます",
            {"entry": entry.name, "witness": status.witness},
        )


@lru_cache(maxsize=1)
def _catalog() -> Dict[str, GalleryEntry]:
    """カタログを一度だけ構築し、設定が有効なら各項目の判定を既定グリッドで確認する

    Raises:
        NotGMOnGridError: GM の項目が記録された定数で通らない場合
        WitnessNotFoundError: 非 GM の項目が証拠点で失敗しない場合
    """
    entries = [build() for build in _builders()]
    if settings.VERIFY_GALLERY:
        for entry in entries:
            verify_entry(entry)
        logger.info(f"[gallery] すべての判定を確認しました（{len(entries)}件）")
    logger.info(f"[gallery] カタログを構築しました（{len(entries)}件）")
    return {entry.name: entry for entry in entries}


def load_catalog() -> Dict[str, GalleryEntry]:
    """カタログ全体（判定は構築時に確認済み）"""
    return dict(_catalog())


def names() -> List[str]:
    """カタログの名前（ソート済み）"""
    return sorted(_catalog())


def get(name: str) -> GalleryEntry:
    """名前で項目を引く（power_tail(3/2) のような族の呼び出しも可）

    Raises:
        UnknownEntryError: カタログにない名前
    """
    catalog = _catalog()
    if name in catalog:
        return catalog[name]
    match = _FAMILY_PATTERN.match(name.strip())
    if match and match.group("family") in FAMILIES:
        try:
            argument = float(Fraction(match.group("arg").strip()))
        except (ValueError, ZeroDivisionError) as e:
            raise UnknownEntryError(f"引数を解釈できません: {name}", {"name": name}) from e
        try:
            return FAMILIES[match.group("family")](argument)
        except ValueError as e:
            raise UnknownEntryError(str(e), {"name": name}) from e
    logger.warning(f"[gallery] 不明な名前: {name}")
    raise UnknownEntryError(f"カタログに存在しない名前です: {name}", {"name": name, "known": names()})


def spot_check(entry: GalleryEntry, tol: float = 1e-11) -> List[SpotCheck]:
    """閉じた形を transforms.hankel_limit と3点で照合する"""
    closed = entry.closed_form_transform
    if closed is None or entry.profile is None:
        return []
    checks: List[SpotCheck] = []
    for u in closed.spot_points:
        expected = closed.formula(u)
        numeric = hankel_limit(entry.profile, closed.alpha, u, tol=tol)
        difference = abs(numeric - expected)
        checks.append(
            SpotCheck(u=u, closed_form=expected, numeric=numeric, difference=difference, passed=difference <= closed.tolerance)
        )
    logger.info(
        f"[gallery] 閉じた形の照合: entry={entry.name}, max_diff={max(c.difference for c in checks):.3e}, "
        f"passed={all(c.passed for c in checks)}"
    )
    return checks
