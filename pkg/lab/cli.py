"""コマンドラインドライバ

`gm-lab <subcommand>` で各検証を実行し、CSV / JSON のレポートを書き出します。
終了コードは 0（すべての検査が成立）、1（検査の失敗）、2（設定の誤り）です。
"""
import argparse
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from core.errors import ConfigError, LabError, UnknownEntryError
from core.report import ReportEnvelope, build_envelope, write_report
from core.settings import LOG_LEVEL, OUTPUT_DIR, load_config
from core.template_loader import render_summary
from lab import gallery
from lab.bessel import as_order, asymptotic_amplitude, compute_S, envelope_bounds, eval_j
from lab.experiments import EXPERIMENTS, run_experiment
from lab.gm_analysis import GMCertificate, default_x_grid, dyadic_stats, gm_fit_certificate, gm_verify
from lab.series import (
    cosine_partial_sum,
    divergence_slope,
    dyadic_ladder,
    gms_abel_olivier,
    gms_fit_constant,
    gms_verify,
)
from lab.transforms import CellRow, cossup_bounds, default_u_grid, hypotheses_hold, partial_hankel

# ロギング設定
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2

# bessel サブコマンドの既定の x 格子
BESSEL_X_GRID = np.linspace(0.0, 40.0, 81).tolist()
# |j_α| ≤ 1 の許容差
BESSEL_BOUND_SLACK = 1e-13


class ExperimentConfig(BaseModel):
    """1回の実行の設定（既定値 < 設定ファイル < CLI フラグ）"""
    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    alpha: float = Field(default=-0.5, ge=-0.5)
    function: Optional[str] = None
    sequence: Optional[str] = None
    lambda_: Optional[int] = Field(default=None, alias="lambda")
    c: Optional[float] = Field(default=None, ge=0.0)
    nu: int = Field(default=1, ge=1)
    u_min: float = Field(default=1e-3, gt=0.0)
    u_max: float = Field(default=1e3, gt=0.0)
    u_per_decade: int = Field(default=25, ge=1)
    n_max: int = Field(default=20, ge=1)
    n_values: List[float] = Field(default_factory=lambda: [10.0, 100.0, 1000.0])
    x: Optional[float] = Field(default=None, ge=0.0)
    m: int = Field(default=2, ge=0)
    tol: float = Field(default=1e-10, gt=0.0)
    limit_tol: float = Field(default=1e-8, gt=0.0)
    format: Literal["csv", "json"] = "csv"
    out: Optional[Path] = None
    workers: int = Field(default=1, ge=1)

    @field_validator("n_values", mode="before")
    @classmethod
    def _split_values(cls, value: Any) -> Any:
        if isinstance(value, str):
            return [item.strip() for item in value.split(",") if item.strip()]
        return value

    @model_validator(mode="after")
    def _check_grids(self) -> "ExperimentConfig":
        if self.u_min >= self.u_max:
            raise ValueError(f"u_min < u_max である必要があります: {self.u_min}, {self.u_max}")
        if not self.n_values or any(N <= 0 for N in self.n_values):
            raise ValueError("n_values は正の値の空でない列である必要があります")
        if self.lambda_ is not None:
            nu = round(math.log2(self.lambda_)) if self.lambda_ > 1 else 0
            if nu < 1 or 2 ** nu != self.lambda_:
                raise ValueError(f"λ は 2 以上の 2 のべきである必要があります: {self.lambda_}")
            if "nu" in self.model_fields_set and self.nu != nu:
                raise ValueError(f"λ={self.lambda_} と ν={self.nu} が矛盾しています")
            self.nu = nu
        return self

    @property
    def u_grid(self) -> List[float]:
        return default_u_grid(self.u_min, self.u_max, self.u_per_decade)

    def fingerprint(self) -> Dict[str, Any]:
        """レポートIDに使う設定（出力先と並列数は含めない）"""
        return self.model_dump(mode="json", exclude={"out", "workers"}, by_alias=True)


# ---------------------------------------------------------------------------
# サブコマンド
# ---------------------------------------------------------------------------


def _require(value: Optional[str], flag: str) -> str:
    if value is None:
        raise ConfigError(f"{flag} を指定してください")
    return value


def _profile_entry(config: ExperimentConfig) -> gallery.GalleryEntry:
    entry = gallery.get(_require(config.function, "--function"))
    if entry.profile is None:
        raise ConfigError(f"{entry.name} は数列です（--sequence を使ってください）")
    return entry


def _sequence_entry(config: ExperimentConfig) -> gallery.GalleryEntry:
    entry = gallery.get(_require(config.sequence, "--sequence"))
    if entry.sequence is None:
        raise ConfigError(f"{entry.name} は関数です（--function を使ってください）")
    return entry


def _map_ordered(fn, items: Sequence[Any], workers: int) -> List[Any]:
    # 完了順にかかわらず items の順序で返す
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def run_bessel(config: ExperimentConfig) -> ReportEnvelope:
    """j_α の値・原点付近の包絡・S_α の表"""
    order = as_order(config.alpha)
    xs = [config.x] if config.x is not None else BESSEL_X_GRID
    rows: List[Dict[str, Any]] = []
    failures: List[Dict[str, Any]] = []
    for x in xs:
        value = eval_j(order, x)
        envelope = envelope_bounds(order, x, config.m)
        rows.append({
            "alpha": order.alpha, "x": x, "value": value, "m": config.m,
            "lower": envelope.lower, "upper": envelope.upper, "envelope_valid": envelope.valid,
        })
        if abs(value) > 1.0 + BESSEL_BOUND_SLACK:
            failures.append({"x": x, "value": value, "reason": "|j_α| > 1"})
        if envelope.valid and not envelope.lower <= value <= envelope.upper:
            failures.append({"x": x, "value": value, "lower": envelope.lower, "upper": envelope.upper})
    records = [{"alpha": order.alpha, "S": compute_S(order), "asymptotic_amplitude": asymptotic_amplitude(order)}]
    return build_envelope(
        "bessel", config.fingerprint(), ["alpha", "x", "value", "m", "lower", "upper", "envelope_valid"],
        rows, ["x"], failures, records,
    )


def run_gm_check(config: ExperimentConfig) -> ReportEnvelope:
    """GM（関数）または GMS（数列）条件の検査。--c がなければ定数を当てはめる"""
    if config.sequence is not None:
        entry = _sequence_entry(config)
        grid = gallery.default_n_grid()
        C = config.c if config.c is not None else gms_fit_constant(entry.sequence, config.nu, grid) + 1e-12
        report = gms_verify(entry.sequence, C, config.nu, grid)
        rows = [{"x": float(p.n), "lhs": p.lhs, "rhs": p.rhs, "passed": p.passed} for p in report.points]
        failures = [{"n": p.n, "lhs": p.lhs, "rhs": p.rhs} for p in report.failing_points()]
        name, lam = entry.name, report.lam
    else:
        entry = _profile_entry(config)
        grid = default_x_grid(entry.profile, lam=2.0 ** config.nu)
        if config.c is None:
            cert = gm_fit_certificate(entry.profile, config.nu, grid)
        else:
            cert = gm_verify(entry.profile, GMCertificate(C=config.c, nu=config.nu), grid)
        rows = [{"x": p.x, "lhs": p.lhs, "rhs": p.rhs, "passed": p.passed} for p in cert.checked_points]
        failures = [{"x": p.x, "lhs": p.lhs, "rhs": p.rhs} for p in cert.failing_points()]
        C, name, lam = cert.C, entry.name, cert.lam
    records = [{"entry": name, "C": C, "nu": config.nu, "lambda": lam, "recorded_status": entry.gm_status.model_dump()}]
    return build_envelope("gm-check", config.fingerprint(), ["x", "lhs", "rhs", "passed"], rows, ["x"], failures, records)


def run_dyadic_stats(config: ExperimentConfig) -> ReportEnvelope:
    """二進ブロックの A_n, B_n と good / bad"""
    entry = _profile_entry(config)
    stats = dyadic_stats(entry.profile, config.nu, (0, config.n_max))
    rows = [{"n": s.n, "A_n": s.A_n, "B_n": s.B_n, "good": s.good} for s in stats]
    records = [{"entry": entry.name, "nu": config.nu, "good": sum(s.good for s in stats), "blocks": len(stats)}]
    return build_envelope("dyadic-stats", config.fingerprint(), ["n", "A_n", "B_n", "good"], rows, ["n"], [], records)


def run_transform(config: ExperimentConfig) -> ReportEnvelope:
    """u × N の格子で部分積分 ∫_0^N t^{2α+1} f(t) j_α(ut) dt を計算する"""
    entry = _profile_entry(config)
    cells = [(u, N) for u in config.u_grid for N in config.n_values]
    results = _map_ordered(
        lambda cell: partial_hankel(entry.profile, config.alpha, cell[0], cell[1], config.tol), cells, config.workers
    )
    rows = [CellRow.from_result(result).model_dump() for result in results]
    for row in rows:
        logger.debug(f"[cli] セル: u={row['u']:g}, N={row['N']:g}, value={row['value']:.15g}")
    return build_envelope("transform", config.fingerprint(), list(CellRow.model_fields), rows, ["u", "N"], [])


def run_bound_report(config: ExperimentConfig) -> ReportEnvelope:
    """評価式の4項と左辺を両方の S で比べる"""
    entry = _profile_entry(config)
    if not hypotheses_hold(entry.profile, config.alpha):
        raise ConfigError(
            f"{entry.name} は α={config.alpha} で評価式の仮定を満たしません",
            {"entry": entry.name, "alpha": config.alpha},
        )
    grid = default_x_grid(entry.profile, lam=2.0 ** config.nu)
    if config.c is None:
        cert = gm_fit_certificate(entry.profile, config.nu, grid)
    else:
        cert = gm_verify(entry.profile, GMCertificate(C=config.c, nu=config.nu), grid)

    rows: List[Dict[str, Any]] = []
    failures: List[Dict[str, Any]] = []
    records: List[Dict[str, Any]] = []
    for N in config.n_values:
        reports = cossup_bounds(entry.profile, config.alpha, N, cert, config.u_grid, config.tol, config.workers)
        for variant, report in reports.items():
            dumped = report.model_dump(mode="json")
            rows.append(dumped)
            records.append({"entry": entry.name, "C": cert.C, "lambda": cert.lam, **dumped})
            if not report.passed:
                failures.append({"N": N, "variant": variant.value, "lhs": report.lhs, "rhs": report.rhs})
    if not cert.passed:
        failures.append({"reason": "GM 証明書が格子上で成立しません", "first": cert.failing_points()[0].x})
    columns = [
        "alpha", "N", "variant", "lhs", "lhs_u", "term_partial", "term_boundary", "term_constant",
        "term_sup_ibp", "rhs", "S_used", "passed",
    ]
    return build_envelope("bound-report", config.fingerprint(), columns, rows, ["N", "variant"], failures, records)


def run_series(config: ExperimentConfig) -> ReportEnvelope:
    """二進的な N の列で S_N(x) を計算し、ln N に対する傾きと n|a_n| の減衰を記録する"""
    entry = _sequence_entry(config)
    x = 1.0 if config.x is None else config.x
    ladder = dyadic_ladder(1, 2 ** config.n_max)
    rows = [{"N": N, "x": x, "partial_sum": cosine_partial_sum(entry.sequence, N, x)} for N in ladder]
    fit = divergence_slope(entry.sequence, x, ladder)
    decay = gms_abel_olivier(entry.sequence, ladder)
    records = [
        {"entry": entry.name, "fit": fit.model_dump()},
        {"entry": entry.name, "decay": [{"n": int(p.T), "abs_n_a_n": p.sup} for p in decay.points],
         "status": decay.status.value},
    ]
    return build_envelope("series", config.fingerprint(), ["N", "x", "partial_sum"], rows, ["N"], [], records)


SUBCOMMANDS = {
    "bessel": run_bessel,
    "gm-check": run_gm_check,
    "dyadic-stats": run_dyadic_stats,
    "transform": run_transform,
    "bound-report": run_bound_report,
    "series": run_series,
}


# ---------------------------------------------------------------------------
# 引数と実行
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gm-lab", description="GM 関数のハンケル変換・余弦級数の検証ラボ")
    parser.add_argument("subcommand", choices=sorted([*SUBCOMMANDS, "experiment"]))
    parser.add_argument("name", nargs="?", help=f"experiment の名前（{', '.join(sorted(EXPERIMENTS))}）")
    parser.add_argument("--config", help="key = value 形式の設定ファイル（名前またはパス）")
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--function")
    parser.add_argument("--sequence")
    parser.add_argument("--lambda", dest="lambda_", type=int)
    parser.add_argument("--c", type=float)
    parser.add_argument("--nu", type=int)
    parser.add_argument("--u-min", type=float)
    parser.add_argument("--u-max", type=float)
    parser.add_argument("--u-per-decade", type=int)
    parser.add_argument("--n-max", type=int)
    parser.add_argument("--n-values", help="N の値（カンマ区切り）")
    parser.add_argument("--x", type=float)
    parser.add_argument("--m", type=int)
    parser.add_argument("--tol", type=float)
    parser.add_argument("--format", choices=["csv", "json"])
    parser.add_argument("--out", help="出力ファイル（- で標準出力）")
    parser.add_argument("--workers", type=int)
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """既定値・設定ファイル・フラグを合成する

    Raises:
        ConfigError: 設定ファイルの誤り・値の検証エラー
    """
    values: Dict[str, Any] = dict(load_config(args.config))
    flags = {
        "alpha": args.alpha, "function": args.function, "sequence": args.sequence, "lambda": args.lambda_,
        "c": args.c, "nu": args.nu, "u_min": args.u_min, "u_max": args.u_max, "u_per_decade": args.u_per_decade,
        "n_max": args.n_max, "n_values": args.n_values, "x": args.x, "m": args.m, "tol": args.tol,
        "format": args.format, "out": args.out, "workers": args.workers,
    }
    values.update({key: value for key, value in flags.items() if value is not None})
    try:
        return ExperimentConfig.model_validate(values)
    except ValidationError as e:
        raise ConfigError(f"設定値が不正です: {e.errors(include_url=False)}") from e


def _output_path(command: str, config: ExperimentConfig) -> Optional[Path]:
    if config.out is None:
        return OUTPUT_DIR / f"{command.replace(' ', '-')}.{config.format}"
    if str(config.out) == "-":
        return None
    return config.out


def write_summary(envelope: ReportEnvelope, out: Path, generated_at: str) -> Path:
    """レポートの隣に summary.md を書き出す"""
    template = "bound_report" if envelope.command == "bound-report" else "run_summary"
    text = render_summary(template, {"envelope": envelope, "generated_at": generated_at})
    path = out.parent / "summary.md"
    path.write_text(text, encoding="utf-8")
    return path


def run(subcommand: str, config: ExperimentConfig, name: Optional[str] = None) -> ReportEnvelope:
    """サブコマンドを実行してレポートを返す"""
    if subcommand == "experiment":
        return run_experiment(_require(name, "experiment の名前"), config)
    return SUBCOMMANDS[subcommand](config)


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=LOG_LEVEL, format="%(asctime)s %(levelname)s %(name)s %(message)s")
    args = build_parser().parse_args(argv)
    command = args.subcommand if args.subcommand != "experiment" else f"experiment {args.name}"

    try:
        config = resolve_config(args)
    except ConfigError as e:
        logger.error(f"[cli] 引数エラー: {e.message}")
        print(f"error: {e.message}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        envelope = run(args.subcommand, config, args.name)
    except (ConfigError, UnknownEntryError) as e:
        logger.error(f"[cli] 設定エラー: {e.message}")
        print(f"error: {e.message}", file=sys.stderr)
        return EXIT_CONFIG
    except LabError as e:
        logger.error(f"[cli] 検証エラー: command={command}, {e.to_dict()}")
        print(f"error: {e.message}", file=sys.stderr)
        return EXIT_FAILED
    except Exception as e:
        logger.error(f"[cli] 予期しないエラー: command={command}, error={str(e)}", exc_info=True)
        return EXIT_FAILED

    generated_at = datetime.now(timezone.utc).isoformat(timespec="seconds")
    out = _output_path(command, config)
    written = write_report(envelope, config.format, out, generated_at)
    if written is not None and (args.subcommand in ("bound-report", "experiment")):
        write_summary(envelope, written, generated_at)

    for failure in envelope.failures:
        logger.warning(f"[cli] 失敗: {failure}")
    logger.info(f"[cli] 完了: command={command}, passed={envelope.passed}, rows={len(envelope.rows)}")
    return EXIT_OK if envelope.passed else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
