"""
ドメイン型と幾何のユニットテスト

テスト対象:
- centroid / validate_document
- as_permutation / sequence_from_permutation / validate_sequence
"""

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from core import (
    as_permutation,
    box_gap,
    centroid,
    count_missing,
    point_box_distance,
    sequence_from_permutation,
    validate_document,
    validate_sequence,
)
from errors import InvalidSequenceError
from schemas import MISSING, ReadingSequence
from tests.conftest import make_box, make_doc


class TestCentroid:
    """centroid のテストクラス"""

    @pytest.mark.parametrize("coords, expected", [
        ((0, 0, 10, 4), (5, 2)),
        ((3, 3, 3, 3), (3, 3)),
        ((2, 8, 6, 10), (4, 9)),
    ])
    def test_midpoint(self, coords, expected):
        """2 つの角の中点になること"""
        c = centroid(make_box("a", *coords))
        assert (c.x, c.y) == expected

    @given(
        st.floats(0, 500), st.floats(0, 500), st.floats(0, 100), st.floats(0, 100),
        st.floats(0, 300), st.floats(0, 300),
    )
    def test_translation_equivariant(self, x, y, w, h, dx, dy):
        """平行移動したボックスの重心は重心を平行移動したものになること"""
        base = centroid(make_box("a", x, y, x + w, y + h))
        moved = centroid(make_box("a", x + dx, y + dy, x + w + dx, y + h + dy))
        assert moved.x == pytest.approx(base.x + dx, abs=1e-9)
        assert moved.y == pytest.approx(base.y + dy, abs=1e-9)


class TestGeometry:
    """点・矩形間距離のテストクラス"""

    def test_point_inside_box_has_zero_distance(self):
        """境界を含む内部の点は距離 0"""
        box = make_box("a", 0, 0, 10, 10)
        assert point_box_distance(5, 5, box) == 0
        assert point_box_distance(10, 10, box) == 0

    def test_point_outside_box(self):
        """外部の点は最も近い境界までのユークリッド距離"""
        box = make_box("a", 0, 0, 10, 10)
        assert point_box_distance(13, 14, box) == pytest.approx(5.0)

    def test_box_gap(self):
        """重なる矩形は 0、離れた矩形は最短距離"""
        a = make_box("a", 0, 0, 10, 10)
        assert box_gap(a, make_box("b", 5, 5, 20, 20)) == 0
        assert box_gap(a, make_box("c", 20, 0, 30, 10)) == pytest.approx(10.0)


class TestValidateDocument:
    """validate_document のテストクラス"""

    def test_well_formed_document(self, three_box_doc):
        """妥当な 3 ボックスのドキュメントは違反なし"""
        assert validate_document(three_box_doc) == []

    def test_inverted_corners(self):
        """x_down < x_up のボックスは 1 件の違反になること"""
        doc = make_doc([make_box("ok", 0, 0, 10, 10), make_box("bad", 20, 0, 10, 10)])
        violations = validate_document(doc)
        assert len(violations) == 1
        assert violations[0].box_id == "bad"
        assert violations[0].rule == "corner_order"

    def test_duplicate_box_id(self):
        """重複した box_id は一意性違反 1 件になること"""
        doc = make_doc([make_box("a", 0, 0, 10, 10), make_box("a", 20, 0, 30, 10)])
        violations = validate_document(doc)
        assert [v.rule for v in violations] == ["unique_box_id"]

    def test_out_of_page_and_non_finite(self):
        """ページ外と非有限の座標を検出すること"""
        doc = make_doc([make_box("far", 90, 90, 120, 95), make_box("nan", 0, 0, math.nan, 5)])
        rules = {(v.box_id, v.rule) for v in validate_document(doc)}
        assert rules == {("far", "within_page"), ("nan", "finite_non_negative")}

    def test_empty_text_is_legal(self):
        """テキストが空のボックスも妥当"""
        assert validate_document(make_doc([make_box("g", 0, 0, 50, 50, "")])) == []


class TestPermutation:
    """as_permutation / sequence_from_permutation のテストクラス"""

    def test_full_permutation(self):
        """{a:0,b:1,c:2} → [a,b,c]"""
        assert as_permutation(ReadingSequence(order={"a": 0, "b": 1, "c": 2})) == ["a", "b", "c"]

    def test_missing_is_excluded(self):
        """{a:1,b:-1,c:0} → [c,a]"""
        assert as_permutation(ReadingSequence(order={"a": 1, "b": MISSING, "c": 0})) == ["c", "a"]

    @pytest.mark.parametrize("order", [
        {"a": 0, "b": 0},
        {"a": 0, "b": 2},
        {"a": -2},
    ])
    def test_rejects_invalid_ordinals(self, order):
        """重複・飛び番・-1 以外の負値は InvalidSequenceError"""
        with pytest.raises(InvalidSequenceError):
            as_permutation(ReadingSequence(order=order))

    @given(st.permutations(["a", "b", "c", "d", "e", "f"]), st.sets(st.sampled_from("abcdef")))
    def test_round_trip(self, permutation, dropped):
        """as_permutation と再番号付けで欠損以外の部分が復元されること"""
        kept = [box_id for box_id in permutation if box_id not in dropped]
        seq = sequence_from_permutation(kept, permutation)
        assert as_permutation(seq) == kept
        restored = sequence_from_permutation(as_permutation(seq))
        assert restored.order == {k: v for k, v in seq.order.items() if v != MISSING}

    def test_validate_sequence_unknown_box(self, three_box_doc):
        """ドキュメントにない box_id を検出すること"""
        seq = ReadingSequence(order={"a": 0, "zzz": 1})
        assert [v.rule for v in validate_sequence(seq, three_box_doc)] == ["unknown_box_id"]

    def test_count_missing(self, three_box_doc):
        """マッピングにないボックスも欠損として数えること"""
        assert count_missing(ReadingSequence(order={"a": 0, "b": MISSING}), three_box_doc) == 2
