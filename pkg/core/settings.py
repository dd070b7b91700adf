"""設定ローダー

環境変数と平坦な key = value 形式の設定ファイルを読み込む共通モジュール
"""
import logging
import os
from pathlib import Path
from typing import Dict, Optional

from core.errors import ConfigError

# ロギング設定
logger = logging.getLogger(__name__)

# レポートの出力先（環境変数で設定可能、デフォルトはカレントの reports/）
OUTPUT_DIR = Path(os.getenv("GMLAB_OUTPUT_DIR", "reports"))

# 設定ファイルのベースディレクトリ
CONFIG_DIR = Path(os.getenv("GMLAB_CONFIG_DIR", str(Path(__file__).parent.parent / "configs")))

# CLIのログレベル
LOG_LEVEL = os.getenv("GMLAB_LOG_LEVEL", "INFO")

# カタログ構築時に各項目の GM 判定を確認するか（"0" で無効）
VERIFY_GALLERY = os.getenv("GMLAB_VERIFY_GALLERY", "1") != "0"


def parse_flat_config(text: str) -> Dict[str, str]:
    """key = value 形式のテキストを辞書に変換する

    Args:
        text: 設定ファイルの内容（# 以降はコメント）

    Returns:
        キー（ハイフンはアンダースコアに正規化）と文字列値の辞書

    Raises:
        ConfigError: "=" を含まない行がある場合
    """
    values: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"設定行の形式が不正です: {lineno}行目", {"line": raw})
        key, value = line.split("=", 1)
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def resolve_config_path(name_or_path: str) -> Path:
    """設定名またはパスから設定ファイルのパスを決める"""
    path = Path(name_or_path)
    if path.suffix or path.is_absolute() or path.exists():
        return path
    return CONFIG_DIR / f"{name_or_path}.conf"


def load_config(name_or_path: Optional[str]) -> Dict[str, str]:
    """設定ファイルを読み込む

    Args:
        name_or_path: 設定名（configs/<name>.conf）またはファイルパス。Noneなら空

    Returns:
        設定値の辞書

    Raises:
        ConfigError: ファイルが存在しない・読めない場合
    """
    if name_or_path is None:
        return {}

    config_file = resolve_config_path(name_or_path)
    if not config_file.exists():
        logger.error(f"[settings] 設定ファイルが見つかりません: {config_file}")
        raise ConfigError(f"設定ファイルが見つかりません: {config_file}")

    try:
        text = config_file.read_text(encoding="utf-8")
    except OSError as e:
        logger.error(f"[settings] 設定ファイル読み込みエラー: {config_file}, error={str(e)}", exc_info=True)
        raise ConfigError(f"設定ファイルを読み込めません: {config_file}") from e

    values = parse_flat_config(text)
    logger.info(f"[settings] 設定を読み込みました: {config_file} ({len(values)}項目)")
    return values
