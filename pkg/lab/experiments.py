"""名前つき実験

`gm-lab experiment <name>` から呼ばれる実験をまとめたモジュールです。
各実験は ReportEnvelope を返し、主張した不等式がすべて成り立てば passed = True です。
"""
import logging
import math
from typing import TYPE_CHECKING, Any, Callable, Dict, List

import numpy as np

from core.errors import DivergenceError, LabError, NonConvergenceError, UnknownEntryError
from core.report import ReportEnvelope, build_envelope
from lab import gallery
from lab.gm_analysis import (
    DecayStatus,
    abel_olivier_profile,
    dyadic_stats,
    en_measure,
    ibp_identity_check,
    sign_interval_search,
)
from lab.series import (
    cos_square_sum_identity,
    divergence_slope,
    dyadic_ladder,
    gms_abel_olivier,
    max_abs_partial,
    uniform_tail_series,
)
from lab.transforms import hankel_limit

if TYPE_CHECKING:
    from lab.cli import ExperimentConfig

# ロギング設定
logger = logging.getLogger(__name__)

# 減衰プロファイルの T 格子
ABEL_OLIVIER_T = [1.0, 10.0, 100.0, 1e3, 1e4]
ABEL_OLIVIER_LONG_T = ABEL_OLIVIER_T + [1e5, 1e6]
# T = 1e4 での上限、T = 1e6 での上限（power_tail(3/2)）
ABEL_OLIVIER_LEVELS = (1e-2, 1e-3)
# 鋭さの実験で使う u（1 に右から近づく）
SHARPNESS_U = [2.0, 1.5, 1.2, 1.1, 1.05]
SHARPNESS_FLAGS = [0.5, 1.0]
# cos n/n の x = 1 での傾き
DIVERGENCE_SLOPE = (0.5, 0.05)
DIVERGENCE_LADDER = (1_000, 1_000_000)
# 方形波の M と一様収束しない大きさの下限
SQUARE_WAVE_M = [10, 100, 1_000, 10_000]
SQUARE_WAVE_GAP = 0.05
SQUARE_WAVE_BOUND = 2.0
# 部分積分恒等式の許容差と ν（α = -1/2, 0, 1 の 2α+2 を含む）
IBP_TOLERANCE = 1e-8
IBP_NU = [1.0, 2.0, 4.0]
IBP_ENTRIES = ["trunc_exp", "power_tail(1.5)", "power_tail(2)", "power_tail(3)"]
# 良いブロック・悪いブロックの実験
DICHOTOMY_ENTRIES = ["power_tail(2)", "power_tail(3)", "pure_power(2)", "pure_power(3)"]
DICHOTOMY_NU = [1, 2]
# 補題の実験で調べるブロックの上限
LEMMA_N_MAX = 15


def _integrable_at_infinity(entry: gallery.GalleryEntry) -> bool:
    # ∫f（Σa_n）が収束する GM 項目
    target = entry.profile_or_sequence
    if target.support_end is not None:
        return True
    if entry.profile is not None and entry.profile.origin_exponent() >= 1.0:
        return False
    return target.decay_hint.exponent > 1.0


def abel_olivier(config: "ExperimentConfig") -> ReportEnvelope:
    """GM 項目で t f(t) → 0、対照（cos_over_sqrt, (-1)^n/n）では減衰しないことを確かめる"""
    rows: List[Dict[str, Any]] = []
    failures: List[Dict[str, Any]] = []
    controls = {"cos_over_sqrt", "alternating_harmonic"}
    level_short, level_long = ABEL_OLIVIER_LEVELS

    for name in gallery.names():
        entry = gallery.get(name)
        is_gm = entry.gm_status.kind == gallery.GMKind.GM
        if name not in controls and not (is_gm and _integrable_at_infinity(entry)):
            continue
        long_run = name == "power_tail(1.5)"
        Ts = ABEL_OLIVIER_LONG_T if long_run else ABEL_OLIVIER_T
        if entry.is_sequence:
            result = gms_abel_olivier(entry.sequence, [int(T) for T in Ts])
        else:
            result = abel_olivier_profile(entry.profile, Ts)
        for point in result.points:
            rows.append({"entry": name, "T": point.T, "sup": point.sup, "status": result.status.value})

        by_T = {point.T: point.sup for point in result.points}
        if name in controls:
            if result.status == DecayStatus.DECAYING:
                failures.append({"entry": name, "reason": "対照が減衰と判定されました"})
            continue
        if by_T[1e4] >= level_short:
            failures.append({"entry": name, "T": 1e4, "sup": by_T[1e4], "level": level_short})
        # power_tail(3/2) は T^{-1/2} ちょうどなので等号を許す
        if long_run and by_T[1e6] > level_long * (1.0 + 1e-6):
            failures.append({"entry": name, "T": 1e6, "sup": by_T[1e6], "level": level_long})

    logger.info(f"[cli] abel-olivier: rows={len(rows)}, failures={len(failures)}")
    return build_envelope(
        "experiment abel-olivier", config.fingerprint(), ["entry", "T", "sup", "status"], rows, ["entry", "T"], failures
    )


def sharpness_cosine(config: "ExperimentConfig") -> ReportEnvelope:
    """t^{-1/2} cos t の余弦変換が u ↓ 1 で増大し、u = 1 で発散することを確かめる"""
    entry = gallery.get("cos_over_sqrt")
    closed = entry.closed_form_transform
    rows: List[Dict[str, Any]] = []
    failures: List[Dict[str, Any]] = []

    values: List[float] = []
    for u in SHARPNESS_U:
        value = hankel_limit(entry.profile, closed.alpha, u, tol=config.limit_tol)
        expected = closed.formula(u)
        values.append(value)
        rows.append({"u": u, "value": value, "closed_form": expected, "status": "converged"})
        if abs(value - expected) > closed.tolerance:
            failures.append({"u": u, "value": value, "closed_form": expected})
    if any(later <= earlier for earlier, later in zip(values, values[1:])):
        failures.append({"reason": "u ↓ 1 で値が増大していません", "values": values})

    for u in SHARPNESS_FLAGS:
        try:
            value = hankel_limit(entry.profile, closed.alpha, u, tol=config.limit_tol)
        except DivergenceError as e:
            rows.append({"u": u, "value": None, "closed_form": None, "status": "diverged"})
            if closed.domain(u):
                failures.append({"u": u, "reason": e.message})
            continue
        rows.append({"u": u, "value": value, "closed_form": closed.formula(u) if closed.domain(u) else None,
                     "status": "converged"})
        if not closed.domain(u):
            failures.append({"u": u, "reason": "発散が検出されませんでした", "value": value})

    logger.info(f"[cli] sharpness-cosine: rows={len(rows)}, failures={len(failures)}")
    return build_envelope(
        "experiment sharpness-cosine", config.fingerprint(), ["u", "value", "closed_form", "status"], rows, ["u"], failures
    )


def series_divergence(config: "ExperimentConfig") -> ReportEnvelope:
    """Σcos n/n は x = 1 で (1/2) ln N のように発散し、Σcos²n の恒等式が成り立つ"""
    rows: List[Dict[str, Any]] = []
    failures: List[Dict[str, Any]] = []
    ladder = dyadic_ladder(*DIVERGENCE_LADDER)

    fit = divergence_slope(gallery.get("cosn_over_n").sequence, 1.0, ladder)
    for N, value in zip(fit.ladder, fit.partial_sums):
        rows.append({"N": N, "x": 1.0, "partial_sum": value})
    expected, width = DIVERGENCE_SLOPE
    if abs(fit.slope - expected) > width:
        failures.append({"slope": fit.slope, "expected": expected, "width": width})

    identity = [{"N": N, "residual": cos_square_sum_identity(N)} for N in (10, 1_000, 100_000, 1_000_000)]
    failures.extend({"identity_N": r["N"], "residual": r["residual"]} for r in identity if r["residual"] > 1e-9)

    records = [{"fit": fit.model_dump(), "cos_square_identity": identity}]
    logger.info(f"[cli] series-divergence: slope={fit.slope:.6g}, failures={len(failures)}")
    return build_envelope(
        "experiment series-divergence", config.fingerprint(), ["N", "x", "partial_sum"], rows, ["N"], failures, records
    )


def square_wave_grid(M: int, points: int = 61) -> List[float]:
    """x = π/2 を挟む幅 6π/M の格子"""
    return (math.pi / 2.0 + np.linspace(-3.0 * math.pi / M, 3.0 * math.pi / M, points)).tolist()


def square_wave(config: "ExperimentConfig") -> ReportEnvelope:
    """方形波の級数は有界だが x = π/2 の近くで一様収束しない"""
    sequence = gallery.get("square_wave").sequence
    rows: List[Dict[str, Any]] = []
    failures: List[Dict[str, Any]] = []
    for M in SQUARE_WAVE_M:
        N = 4 * M
        grid = square_wave_grid(M)
        tail = uniform_tail_series(sequence, grid, M, N)
        bound = max_abs_partial(sequence, N, grid)
        rows.append({"M": M, "N": N, "uniform_tail": tail, "max_abs_partial": bound})
        if tail < SQUARE_WAVE_GAP:
            failures.append({"M": M, "uniform_tail": tail, "level": SQUARE_WAVE_GAP})
        if bound > SQUARE_WAVE_BOUND:
            failures.append({"M": M, "max_abs_partial": bound, "level": SQUARE_WAVE_BOUND})
    logger.info(f"[cli] square-wave: rows={len(rows)}, failures={len(failures)}")
    return build_envelope(
        "experiment square-wave", config.fingerprint(), ["M", "N", "uniform_tail", "max_abs_partial"], rows, ["M"], failures
    )


def good_bad_dichotomy(config: "ExperimentConfig") -> ReportEnvelope:
    """1/t² 型はすべて good（B_n = 2^{4ν} A_n）、1/t³ 型はすべて bad"""
    rows: List[Dict[str, Any]] = []
    failures: List[Dict[str, Any]] = []
    records: List[Dict[str, Any]] = []
    for name in DICHOTOMY_ENTRIES:
        profile = gallery.get(name).profile
        expect_good = profile.decay_hint.exponent == 2.0
        capped = name.startswith("power_tail")
        for nu in DICHOTOMY_NU:
            stats = dyadic_stats(profile, nu, (1, config.n_max))
            for s in stats:
                rows.append({"entry": name, "nu": nu, "n": s.n, "A_n": s.A_n, "B_n": s.B_n, "good": s.good})
                # power_tail は (0, 1] で 1 に切られているので n < 2ν は判定しない
                if capped and not expect_good and s.n < 2 * nu:
                    continue
                if s.good != expect_good:
                    failures.append({"entry": name, "nu": nu, "n": s.n, "good": s.good})
                if expect_good and s.n >= 2 * nu and not math.isclose(s.B_n, 2.0 ** (4 * nu) * s.A_n, rel_tol=1e-9):
                    failures.append({"entry": name, "nu": nu, "n": s.n, "ratio": s.B_n / s.A_n})
            records.append({"entry": name, "nu": nu, "all_good": all(s.good for s in stats),
                            "all_bad_from_2nu": all(not s.good for s in stats if s.n >= 2 * nu)})
    logger.info(f"[cli] good-bad-dichotomy: rows={len(rows)}, failures={len(failures)}")
    return build_envelope(
        "experiment good-bad-dichotomy", config.fingerprint(), ["entry", "nu", "n", "A_n", "B_n", "good"], rows,
        ["entry", "nu", "n"], failures, records,
    )


def lemma_witness(config: "ExperimentConfig") -> ReportEnvelope:
    """GM 項目の good ブロックで E_n の測度の下界と符号区間の証拠を確かめる"""
    rows: List[Dict[str, Any]] = []
    failures: List[Dict[str, Any]] = []
    nu = config.nu
    for name in gallery.names():
        entry = gallery.get(name)
        status = entry.gm_status
        if entry.is_sequence or status.kind != gallery.GMKind.GM or not status.C:
            continue
        for s in dyadic_stats(entry.profile, nu, (1, min(config.n_max, LEMMA_N_MAX))):
            if not s.good or s.A_n == 0.0:
                continue
            measured = en_measure(entry.profile, s.n, status.C, nu)
            row = {"entry": name, "n": s.n, "A_n": s.A_n, "E_measure": measured.E_measure,
                   "E_bound": measured.E_bound, "captured": None, "witness_bound": None, "sign": None}
            if not measured.bound_holds:
                failures.append({"entry": name, "n": s.n, "E_measure": measured.E_measure, "E_bound": measured.E_bound})
            try:
                witness = sign_interval_search(entry.profile, s.n, status.C, nu)
                row.update(captured=witness.captured_measure, witness_bound=witness.bound, sign=witness.sign)
            except LabError as e:
                failures.append({"entry": name, "n": s.n, **e.to_dict()})
            rows.append(row)
    logger.info(f"[cli] lemma-witness: rows={len(rows)}, failures={len(failures)}")
    return build_envelope(
        "experiment lemma-witness", config.fingerprint(),
        ["entry", "n", "A_n", "E_measure", "E_bound", "captured", "witness_bound", "sign"],
        rows, ["entry", "n"], failures,
    )


def ibp_identity(config: "ExperimentConfig") -> ReportEnvelope:
    """∫ t^{ν-1} f = -(1/ν) ∫ t^ν df を収束する組で確かめる"""
    rows: List[Dict[str, Any]] = []
    failures: List[Dict[str, Any]] = []
    for name in IBP_ENTRIES:
        profile = gallery.get(name).profile
        for nu_exp in IBP_NU:
            converges = profile.support_end is not None or profile.decay_hint.exponent > nu_exp
            try:
                residual = ibp_identity_check(profile, nu_exp, IBP_TOLERANCE)
            except NonConvergenceError as e:
                rows.append({"entry": name, "nu_exp": nu_exp, "residual": None, "status": "non-convergent"})
                if converges:
                    failures.append({"entry": name, "nu_exp": nu_exp, **e.to_dict()})
                continue
            rows.append({"entry": name, "nu_exp": nu_exp, "residual": residual, "status": "checked"})
            if residual >= IBP_TOLERANCE:
                failures.append({"entry": name, "nu_exp": nu_exp, "residual": residual})
    logger.info(f"[cli] ibp-identity: rows={len(rows)}, failures={len(failures)}")
    return build_envelope(
        "experiment ibp-identity", config.fingerprint(), ["entry", "nu_exp", "residual", "status"], rows, ["entry", "nu_exp"], failures
    )


EXPERIMENTS: Dict[str, Callable[["ExperimentConfig"], ReportEnvelope]] = {
    "abel-olivier": abel_olivier,
    "sharpness-cosine": sharpness_cosine,
    "series-divergence": series_divergence,
    "square-wave": square_wave,
    "good-bad-dichotomy": good_bad_dichotomy,
    "lemma-witness": lemma_witness,
    "ibp-identity": ibp_identity,
}


def run_experiment(name: str, config: "ExperimentConfig") -> ReportEnvelope:
    """名前で実験を実行する

    Raises:
        UnknownEntryError: 未知の実験名
    """
    if name not in EXPERIMENTS:
        raise UnknownEntryError(f"未知の実験名です: {name}", {"experiment": name, "known": sorted(EXPERIMENTS)})
    logger.info(f"[cli] 実験を開始: {name}")
    return EXPERIMENTS[name](config)
