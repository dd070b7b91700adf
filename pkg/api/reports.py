"""レポートルーター - 出力ディレクトリのレポートを一覧・取得する"""
import logging
from pathlib import Path
from typing import List

import aiofiles
from fastapi import APIRouter, HTTPException
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel

from core import settings

# ロギング設定
logger = logging.getLogger(__name__)

router = APIRouter(prefix="/reports", tags=["reports"])

REPORT_SUFFIXES = {".csv", ".json", ".md"}


class ReportFile(BaseModel):
    name: str
    size: int


def _report_dir() -> Path:
    return settings.OUTPUT_DIR


@router.get("", response_model=List[ReportFile])
async def list_reports() -> List[ReportFile]:
    """出力ディレクトリのレポート一覧（名前順）"""
    directory = _report_dir()
    if not directory.exists():
        logger.info(f"[report] 出力ディレクトリがありません: {directory}")
        return []
    files = sorted(p for p in directory.iterdir() if p.is_file() and p.suffix in REPORT_SUFFIXES)
    return [ReportFile(name=p.name, size=p.stat().st_size) for p in files]


@router.get("/{name}", response_class=PlainTextResponse)
async def read_report(name: str) -> str:
    """レポートの内容を返す"""
    directory = _report_dir().resolve()
    path = (directory / name).resolve()
    if path.parent != directory or path.suffix not in REPORT_SUFFIXES:
        raise HTTPException(status_code=404, detail=f"レポートが見つかりません: {name}")
    if not path.exists():
        raise HTTPException(status_code=404, detail=f"レポートが見つかりません: {name}")
    try:
        async with aiofiles.open(path, "r", encoding="utf-8") as f:
            content = await f.read()
    except OSError as e:
        logger.error(f"[report] レポート読み込みエラー: {path}, error={str(e)}", exc_info=True)
        raise HTTPException(status_code=500, detail=f"レポートを読み込めません: {name}")
    logger.info(f"[report] レポートを返しました: {name} ({len(content)}文字)")
    return content
