"""ドメイン例外から HTTPException への変換"""
import logging

from fastapi import HTTPException

from core.errors import LabError, UnknownEntryError

# ロギング設定
logger = logging.getLogger(__name__)


def to_http_exception(e: Exception, tag: str) -> HTTPException:
    """例外を HTTPException に変換する

    Args:
        e: 発生した例外
        tag: ログの接頭辞（例: "transforms"）

    Returns:
        404（未知の名前）、422（ドメインエラー・不正な値）、500（予期しないエラー）
    """
    if isinstance(e, UnknownEntryError):
        logger.warning(f"[{tag}] 未知の名前: {e.message}")
        return HTTPException(status_code=404, detail=e.to_dict())
    if isinstance(e, LabError):
        logger.warning(f"[{tag}] ドメインエラー: {e.to_dict()}")
        return HTTPException(status_code=422, detail=e.to_dict())
    if isinstance(e, ValueError):
        logger.warning(f"[{tag}] 不正な値: {str(e)}")
        return HTTPException(status_code=422, detail={"error": "ValueError", "message": str(e)})
    logger.error(f"[{tag}] 予期しないエラー: {str(e)}", exc_info=True)
    return HTTPException(status_code=500, detail=f"内部エラー: {str(e)}")
