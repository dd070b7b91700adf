"""レポート出力

すべての実験結果を統一形式（ReportEnvelope）で管理し、CSV / JSON に書き出します。
先頭の1行（生成時刻）以外は同じ設定で再実行するとバイト単位で一致します。
"""
import csv
import hashlib
import io
import json
import logging
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pydantic import BaseModel, Field

from core.errors import ConfigError

# ロギング設定
logger = logging.getLogger(__name__)

# 64bit浮動小数点を損失なく往復させる有効桁数
SIGNIFICANT_DIGITS = 17


class ReportEnvelope(BaseModel):
    """レポートの外枠

    すべてのサブコマンドの出力はこの形式を使用します。
    """
    run_id: str = Field(..., description="設定から決まる決定的なID")
    command: str = Field(..., description="サブコマンド名（例: experiment good-bad-dichotomy）")
    passed: bool = Field(..., description="実行中のすべての不等式検査が成立したか")
    columns: List[str] = Field(default_factory=list, description="CSV列（固定順）")
    rows: List[Dict[str, Any]] = Field(default_factory=list, description="表形式の結果")
    records: List[Dict[str, Any]] = Field(default_factory=list, description="JSON専用の構造化レコード")
    failures: List[Dict[str, Any]] = Field(default_factory=list, description="失敗したグリッド点")


def make_run_id(command: str, config: Dict[str, Any]) -> str:
    """設定の内容からレポートIDを作成する

    Args:
        command: サブコマンド名
        config: 正規化済み設定（JSON化可能）

    Returns:
        16桁の16進ID
    """
    payload = json.dumps({"command": command, "config": config}, sort_keys=True, default=str)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def format_value(value: Any) -> str:
    """CSVセルの文字列表現（浮動小数点は17桁）"""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            return repr(value)
        return format(value, f".{SIGNIFICANT_DIGITS}g")
    if value is None:
        return ""
    return str(value)


def render_csv(envelope: ReportEnvelope, generated_at: str) -> str:
    """CSVテキストを作成する（先頭はタイムスタンプのコメント行）"""
    buffer = io.StringIO()
    buffer.write(f"# generated_at={generated_at} run_id={envelope.run_id} command={envelope.command}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(envelope.columns)
    for row in envelope.rows:
        writer.writerow([format_value(row.get(column)) for column in envelope.columns])
    return buffer.getvalue()


def _json_safe(value: Any) -> Any:
    if isinstance(value, float) and (math.isnan(value) or math.isinf(value)):
        return repr(value)
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def render_json(envelope: ReportEnvelope, generated_at: str) -> str:
    """JSONテキストを作成する（generated_at は2行目の1行だけに現れる）"""
    body = {"generated_at": generated_at, **envelope.model_dump()}
    return json.dumps(_json_safe(body), indent=2, sort_keys=False, ensure_ascii=False) + "\n"


def write_report(
    envelope: ReportEnvelope,
    fmt: str,
    out: Optional[Path],
    generated_at: Optional[str] = None,
) -> Optional[Path]:
    """レポートを書き出す

    Args:
        envelope: レポート
        fmt: "csv" または "json"
        out: 出力先ファイル。Noneなら標準出力
        generated_at: 生成時刻（テスト用に固定可能）

    Returns:
        書き出したパス（標準出力の場合はNone）

    Raises:
        ConfigError: 未知のフォーマットが指定された場合
    """
    stamp = generated_at or datetime.now(timezone.utc).isoformat(timespec="seconds")
    if fmt == "csv":
        text = render_csv(envelope, stamp)
    elif fmt == "json":
        text = render_json(envelope, stamp)
    else:
        raise ConfigError(f"未知の出力フォーマットです: {fmt}")

    logger.info(
        f"[report] レポート出力: run_id={envelope.run_id}, command={envelope.command}, "
        f"format={fmt}, rows={len(envelope.rows)}, passed={envelope.passed}"
    )

    if out is None:
        print(text, end="")
        return None

    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    logger.debug(f"[report] 書き出し完了: {out}")
    return out


def sorted_rows(rows: Sequence[Dict[str, Any]], keys: Sequence[str]) -> List[Dict[str, Any]]:
    """完了順に依存しない固定順に並べ替える"""
    return sorted(rows, key=lambda row: tuple(row.get(k) for k in keys))


def build_envelope(
    command: str,
    fingerprint: Dict[str, Any],
    columns: List[str],
    rows: List[Dict[str, Any]],
    keys: Sequence[str],
    failures: List[Dict[str, Any]],
    records: Optional[List[Dict[str, Any]]] = None,
) -> ReportEnvelope:
    """行を固定順に並べてレポートを組み立てる（失敗がなければ passed）"""
    return ReportEnvelope(
        run_id=make_run_id(command, fingerprint),
        command=command,
        passed=not failures,
        columns=columns,
        rows=sorted_rows(rows, keys),
        records=records or [],
        failures=failures,
    )
