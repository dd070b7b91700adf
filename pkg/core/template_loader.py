"""テンプレートローダー

人が読むためのMarkdown要約をjinja2テンプレートから作成する共通モジュール
"""
import logging
from pathlib import Path
from typing import Any, Dict

from jinja2 import Environment, FileSystemLoader, StrictUndefined, TemplateNotFound

from core.errors import ConfigError

# ロギング設定
logger = logging.getLogger(__name__)

# テンプレートファイルのベースディレクトリ
TEMPLATES_DIR = Path(__file__).parent.parent / "templates"

_environment = Environment(
    loader=FileSystemLoader(str(TEMPLATES_DIR)),
    undefined=StrictUndefined,
    keep_trailing_newline=True,
    trim_blocks=True,
    lstrip_blocks=True,
)
_environment.filters["sci"] = lambda value: format(float(value), ".6e")


def render_summary(template_name: str, context: Dict[str, Any]) -> str:
    """テンプレートを描画する

    Args:
        template_name: テンプレート名（例: "bound_report"）
        context: テンプレート変数

    Returns:
        描画済みMarkdown

    Raises:
        ConfigError: テンプレートが見つからない場合
    """
    file_name = f"{template_name}.md.j2"
    try:
        template = _environment.get_template(file_name)
    except TemplateNotFound as e:
        logger.error(f"[report] テンプレートが見つかりません: {TEMPLATES_DIR / file_name}")
        raise ConfigError(f"テンプレートが見つかりません: {file_name}") from e

    text = template.render(**context)
    logger.info(f"[report] 要約を描画しました: {template_name} ({len(text)}文字)")
    return text
