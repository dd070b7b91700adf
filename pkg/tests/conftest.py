"""テスト共通のフィクスチャ"""
import os
from pathlib import Path

# カタログ構築時の判定確認は test_gallery の専用テストで有効にする
os.environ.setdefault("GMLAB_VERIFY_GALLERY", "0")

import pytest  # noqa: E402

from lab import gallery  # noqa: E402


@pytest.fixture
def trunc_exp():
    return gallery.get("trunc_exp").profile


@pytest.fixture
def tail_three_halves():
    return gallery.get("power_tail(3/2)").profile


@pytest.fixture
def report_dir(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Path:
    """レポートの出力先を一時ディレクトリに向ける"""
    from core import settings
    from lab import cli

    monkeypatch.setattr(settings, "OUTPUT_DIR", tmp_path)
    monkeypatch.setattr(cli, "OUTPUT_DIR", tmp_path)
    return tmp_path
