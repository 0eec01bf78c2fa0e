"""
ファイル入出力のテスト

テスト対象:
- 正準形式の読み書き（write_document / load_document / ingest）
- DocTrack アダプタ
- 視線ファイル・順序ファイル
"""

import json

import pytest

from errors import DocumentValidationError, SchemaError
from schemas import MISSING, QAPair, ReadingSequence, SubsetTag
from storage import (
    gaze_path_for,
    ingest,
    load_document,
    load_order,
    load_trajectory,
    write_document,
    write_order,
    write_trajectory,
)
from tests.conftest import make_box, make_doc, make_trajectory


def canonical_payload(**overrides):
    payload = {
        "doc_id": "d1",
        "page_width": 100,
        "page_height": 100,
        "subset_tag": "structured",
        "boxes": [
            {"id": "b1", "text": "名前", "bbox": [0, 0, 10, 10]},
            {"id": "b2", "text": "", "bbox": [20, 0, 30, 10]},
            {"id": "b3", "text": "total", "bbox": [0, 20, 10, 30]},
        ],
    }
    payload.update(overrides)
    return payload


def write_json(path, payload):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")
    return path


class TestCanonical:
    """正準形式のテストクラス"""

    def test_write_then_load(self, tmp_path):
        """書き出したドキュメントと gold が読み戻せること"""
        doc = make_doc(
            [make_box("a", 0, 0, 10, 10, "日本語"), make_box("b", 20, 0, 30, 10)],
            subset=SubsetTag.WEAK, split="train",
        ).model_copy(update={"qa_pairs": (QAPair(question="q?", answers=("a1", "a2")),)})
        gold = ReadingSequence(order={"a": 1, "b": 0})
        path = tmp_path / "doc.json"
        write_document(path, doc, gold)

        loaded = load_document(path)
        assert loaded.document == doc
        assert loaded.gold == gold
        assert "日本語" in path.read_text(encoding="utf-8")

    def test_gold_with_missing(self, tmp_path):
        """gold_order に載っていないボックスは欠損として読まれること"""
        path = write_json(tmp_path / "d1.json", canonical_payload(gold_order=[
            {"id": "b1", "ordinal": 0}, {"id": "b3", "ordinal": 1},
        ]))
        assert load_document(path).gold.order == {"b1": 0, "b2": MISSING, "b3": 1}

    def test_short_bbox_names_the_box(self, tmp_path):
        """bbox の要素数が 3 なら該当ボックスを示す SchemaError"""
        payload = canonical_payload()
        payload["boxes"][2]["bbox"] = [0, 20, 10]
        path = write_json(tmp_path / "d1.json", payload)
        with pytest.raises(SchemaError) as excinfo:
            load_document(path)
        assert excinfo.value.field == "boxes[2](id=b3).bbox"
        assert "d1.json" in str(excinfo.value)

    def test_inverted_box(self, tmp_path):
        """座標の不変条件違反は DocumentValidationError"""
        payload = canonical_payload()
        payload["boxes"][0]["bbox"] = [10, 0, 0, 10]
        with pytest.raises(DocumentValidationError) as excinfo:
            load_document(write_json(tmp_path / "d1.json", payload))
        assert [v.box_id for v in excinfo.value.violations] == ["b1"]

    @pytest.mark.parametrize("gold_order, field", [
        ([{"id": "zz", "ordinal": 0}], "gold_order[0](id=zz)"),
        ([{"id": "b1", "ordinal": 0}, {"id": "b2", "ordinal": 0}], "gold_order"),
    ])
    def test_invalid_gold(self, tmp_path, gold_order, field):
        """未知の box_id や序数の重複は SchemaError"""
        path = write_json(tmp_path / "d1.json", canonical_payload(gold_order=gold_order))
        with pytest.raises(SchemaError) as excinfo:
            load_document(path)
        assert excinfo.value.field == field

    def test_invalid_json(self, tmp_path):
        """JSON として読めないファイルは SchemaError"""
        path = tmp_path / "broken.json"
        path.write_text("{", encoding="utf-8")
        with pytest.raises(SchemaError):
            load_document(path)


class TestIngest:
    """ingest のテストクラス"""

    def test_directory_skips_gaze_and_order_files(self, tmp_path):
        """ディレクトリ読み込みでは視線ファイルと順序ファイルを除外すること"""
        write_json(tmp_path / "a.json", canonical_payload(doc_id="a"))
        write_json(tmp_path / "sub" / "b.json", canonical_payload(doc_id="b"))
        write_json(tmp_path / "a.gaze.json", {"doc_id": "a", "points": []})
        write_json(tmp_path / "a.order.json", {"doc_id": "a", "order": []})
        assert [d.document.doc_id for d in ingest(tmp_path)] == ["a", "b"]

    def test_duplicate_doc_id(self, tmp_path):
        """同じ doc_id のドキュメントが 2 件あれば SchemaError"""
        write_json(tmp_path / "train" / "a.json", canonical_payload(doc_id="same"))
        write_json(tmp_path / "test" / "a.json", canonical_payload(doc_id="same"))
        with pytest.raises(SchemaError) as excinfo:
            ingest(tmp_path)
        assert excinfo.value.field == "doc_id"

    def test_unknown_format(self, tmp_path):
        """未知の形式は ValueError"""
        with pytest.raises(ValueError):
            ingest(tmp_path, format="xml")

    def test_missing_path(self, tmp_path):
        """存在しないパスは FileNotFoundError"""
        with pytest.raises(FileNotFoundError):
            ingest(tmp_path / "nowhere")


class TestDocTrack:
    """DocTrack アダプタのテストクラス"""

    def test_subset_and_split_from_path(self, tmp_path):
        """サブセットと分割がディレクトリ名から決まり、order が gold になること"""
        path = write_json(tmp_path / "Infographics" / "test" / "0001.json", {
            "img": {"width": 200, "height": 100, "fname": "0001.png"},
            "form": [
                {"id": 0, "text": "Title", "box": [0, 0, 100, 20], "order": 1},
                {"id": 1, "text": "Body", "box": [0, 30, 100, 50], "order": 0},
                {"id": 2, "text": "logo", "box": [150, 0, 190, 20], "order": -1},
            ],
            "qa": [{"question": "title?", "answers": ["Title"]}],
        })
        [item] = ingest(path, format="doctrack")
        assert item.document.doc_id == "0001"
        assert item.document.subset_tag == SubsetTag.INFOGRAPH
        assert item.document.split == "test"
        assert item.document.page_width == 200
        assert item.document.image.endswith("0001.png")
        assert item.gold.order == {"0": 1, "1": 0, "2": MISSING}
        assert item.document.qa_pairs[0].answers == ("Title",)

    def test_same_file_name_in_different_directories(self, tmp_path):
        """サブセット・分割が異なる同名ファイルは別々の doc_id になること"""
        payload = {
            "img": {"width": 100, "height": 100},
            "form": [{"id": 0, "text": "a", "box": [0, 0, 10, 10], "order": 0}],
        }
        for sub in ("weak/train", "structured/train", "weak/test"):
            write_json(tmp_path / sub / "0001.json", payload)
        items = ingest(tmp_path, format="doctrack")
        assert [item.document.doc_id for item in items] == [
            "structured/train/0001", "weak/test/0001", "weak/train/0001",
        ]
        assert [(item.document.subset_tag, item.document.split) for item in items] == [
            (SubsetTag.STRUCTURED, "train"), (SubsetTag.WEAK, "test"), (SubsetTag.WEAK, "train"),
        ]

    def test_missing_page_size_uses_extent(self, tmp_path):
        """ページサイズがなければボックスの最大座標を使うこと"""
        path = write_json(tmp_path / "weak" / "x.json", {
            "form": [{"id": "a", "box": [0, 0, 40, 30]}, {"id": "b", "box": [10, 50, 60, 70]}],
        })
        [item] = ingest(path, format="doctrack")
        assert (item.document.page_width, item.document.page_height) == (60, 70)
        assert item.document.subset_tag == SubsetTag.WEAK
        assert item.document.split is None
        assert item.gold is None


class TestGazeAndOrderFiles:
    """視線ファイル・順序ファイルのテストクラス"""

    def test_trajectory_file(self, tmp_path):
        """視線ファイルの書き出しと読み込み"""
        traj = make_trajectory([(1, 2), (3.5, 4)], doc_id="d1")
        path = gaze_path_for(tmp_path / "d1.json")
        assert path.name == "d1.gaze.json"
        write_trajectory(path, traj)
        assert load_trajectory(path) == traj

    def test_order_file(self, tmp_path, three_box_doc):
        """順序ファイルの書き出しと、ドキュメントに対する検査付きの読み込み"""
        seq = ReadingSequence(order={"a": 1, "b": MISSING, "c": 0})
        path = tmp_path / "doc.order.json"
        write_order(path, three_box_doc, "z-order", seq)
        loaded = load_order(path, three_box_doc)
        assert loaded.strategy == "z-order"
        assert loaded.sequence == seq

    def test_order_file_with_foreign_box(self, tmp_path, three_box_doc):
        """ドキュメントにない box_id を含む順序ファイルは SchemaError"""
        path = write_json(tmp_path / "doc.order.json", {"doc_id": "doc", "order": [{"id": "zz", "ordinal": 0}]})
        with pytest.raises(SchemaError):
            load_order(path, three_box_doc)
