"""ギャラリールーター - カタログの一覧と項目の詳細"""
import logging
from typing import List, Optional

from fastapi import APIRouter
from pydantic import BaseModel

from api.errors import to_http_exception
from lab import gallery

# ロギング設定
logger = logging.getLogger(__name__)

router = APIRouter(prefix="/gallery", tags=["gallery"])


class EntrySummary(BaseModel):
    """カタログ項目の要約"""
    name: str
    kind: str
    gm_status: gallery.GMStatus
    closed_form_alpha: Optional[float] = None
    closed_form_domain: Optional[str] = None
    notes: str = ""


def _summarize(entry: gallery.GalleryEntry) -> EntrySummary:
    closed = entry.closed_form_transform
    return EntrySummary(
        name=entry.name,
        kind="sequence" if entry.is_sequence else "function",
        gm_status=entry.gm_status,
        closed_form_alpha=closed.alpha if closed else None,
        closed_form_domain=closed.domain_text if closed else None,
        notes=entry.notes,
    )


@router.get("/", response_model=List[EntrySummary])
def list_entries() -> List[EntrySummary]:
    """カタログの全項目"""
    return [_summarize(gallery.get(name)) for name in gallery.names()]


@router.get("/{name}", response_model=EntrySummary)
def get_entry(name: str) -> EntrySummary:
    """名前で項目を引く（power_tail(3/2) のような族の呼び出しも可）"""
    try:
        return _summarize(gallery.get(name))
    except Exception as e:
        raise to_http_exception(e, "gallery")
