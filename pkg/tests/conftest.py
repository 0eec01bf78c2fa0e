"""
pytest設定とフィクスチャ

テスト用のドキュメント、視線軌跡、API クライアント、外部比較器スタブのコマンドなどを提供
"""

import sys
from pathlib import Path
from typing import List, Optional

import pytest
from fastapi.testclient import TestClient

from dependencies import get_comparator_model
from main import app
from schemas import BoundingBox, Document, GazePoint, GazeTrajectory, SubsetTag, SynthSpec
from synth import synth

ROOT = Path(__file__).resolve().parent.parent
STUB_COMPARATOR = ROOT / "scripts" / "stub_comparator.py"


def make_box(box_id: str, x_up: float, y_up: float, x_down: float, y_down: float, text: str = "") -> BoundingBox:
    """テスト用ボックス"""
    return BoundingBox(box_id=box_id, x_up=x_up, y_up=y_up, x_down=x_down, y_down=y_down, text=text)


def make_doc(boxes: List[BoundingBox], doc_id: str = "doc", width: float = 100, height: float = 100,
             subset: SubsetTag = SubsetTag.OTHER, split: Optional[str] = None) -> Document:
    """テスト用ドキュメント"""
    return Document(doc_id=doc_id, page_width=width, page_height=height, boxes=tuple(boxes),
                    subset_tag=subset, split=split)


def make_trajectory(points, doc_id: str = "doc") -> GazeTrajectory:
    """(x, y) の列から 100ms 間隔の視線軌跡を作る"""
    return GazeTrajectory(
        doc_id=doc_id,
        points=tuple(GazePoint(timestamp=100.0 * i, x=x, y=y) for i, (x, y) in enumerate(points)),
    )


@pytest.fixture
def three_box_doc():
    """
    3 ボックスのドキュメント

    a: 左上, b: 右上, c: 左下（OCR 出力順は a, b, c）
    """
    return make_doc([
        make_box("a", 0, 0, 10, 10, "alpha"),
        make_box("b", 20, 0, 30, 10, "beta"),
        make_box("c", 0, 20, 10, 30, "gamma"),
    ])


@pytest.fixture
def separated_rows_doc():
    """
    行が明確に分かれた 2 行 3 列のドキュメント（OCR 出力順は列優先）

    行優先の読み順は r0c0, r0c1, r0c2, r1c0, r1c1, r1c2
    """
    boxes = []
    for c in range(3):
        for r in range(2):
            boxes.append(make_box(f"r{r}c{c}", 10 + 30 * c, 10 + 40 * r, 30 + 30 * c, 20 + 40 * r))
    return make_doc(boxes)


@pytest.fixture
def z_grid():
    """雑音なしの 3×4 Z パターン合成ドキュメント"""
    return synth(SynthSpec(rows=3, cols=4, seed=1))


@pytest.fixture
def stub_command():
    """外部比較器スタブの起動コマンド（モード引数を付けて使う）"""
    def command(*args: str) -> List[str]:
        return [sys.executable, str(STUB_COMPARATOR), *args]
    return command


@pytest.fixture(scope="function")
def client():
    """
    テスト用FastAPIクライアントを提供

    比較モデルは未設定として扱う
    """
    app.dependency_overrides[get_comparator_model] = lambda: None
    with TestClient(app) as test_client:
        yield test_client
    app.dependency_overrides.clear()
