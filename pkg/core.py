"""
コアモデル操作

重心・距離計算、ドキュメントの妥当性検査、ReadingSequence と順列の相互変換
"""

import math
from statistics import median
from typing import Dict, Iterable, List, Optional, Sequence

from errors import InvalidSequenceError
from schemas import MISSING, BoundingBox, Centroid, Document, ReadingSequence, Violation


def centroid(box: BoundingBox) -> Centroid:
    """
    ボックスの重心を計算

    Args:
        box: 対象ボックス

    Returns:
        Centroid: 2 頂点の中点
    """
    return Centroid(x=(box.x_up + box.x_down) / 2, y=(box.y_up + box.y_down) / 2)


def point_box_distance(x: float, y: float, box: BoundingBox) -> float:
    """点から矩形までのユークリッド距離（内部なら 0）"""
    dx = max(box.x_up - x, 0.0, x - box.x_down)
    dy = max(box.y_up - y, 0.0, y - box.y_down)
    return math.hypot(dx, dy)


def box_gap(a: BoundingBox, b: BoundingBox) -> float:
    """2 矩形間の最短距離（重なっていれば 0）"""
    dx = max(b.x_up - a.x_down, 0.0, a.x_up - b.x_down)
    dy = max(b.y_up - a.y_down, 0.0, a.y_up - b.y_down)
    return math.hypot(dx, dy)


def centroid_distance(a: BoundingBox, b: BoundingBox) -> float:
    ca, cb = centroid(a), centroid(b)
    return math.hypot(ca.x - cb.x, ca.y - cb.y)


def median_box_height(doc: Document) -> float:
    """ボックス高さの中央値（ボックスがない場合は 0）"""
    if not doc.boxes:
        return 0.0
    return float(median(box.height for box in doc.boxes))


def validate_document(doc: Document) -> List[Violation]:
    """
    ドキュメントの不変条件を検査

    違反はデータとして返し、例外は送出しない。

    Args:
        doc: 検査対象

    Returns:
        List[Violation]: 違反一覧（空なら妥当）
    """
    violations: List[Violation] = []

    if not (math.isfinite(doc.page_width) and doc.page_width > 0):
        violations.append(Violation(rule="page_size", detail=f"page_width={doc.page_width}"))
    if not (math.isfinite(doc.page_height) and doc.page_height > 0):
        violations.append(Violation(rule="page_size", detail=f"page_height={doc.page_height}"))

    seen = set()
    for box in doc.boxes:
        if box.box_id in seen:
            violations.append(Violation(box_id=box.box_id, rule="unique_box_id", detail="duplicate box_id"))
        seen.add(box.box_id)

        coords = (box.x_up, box.y_up, box.x_down, box.y_down)
        if not all(math.isfinite(c) and c >= 0 for c in coords):
            violations.append(Violation(box_id=box.box_id, rule="finite_non_negative", detail=str(coords)))
            continue

        if box.x_up > box.x_down or box.y_up > box.y_down:
            violations.append(Violation(box_id=box.box_id, rule="corner_order", detail=str(coords)))

        if max(box.x_up, box.x_down) > doc.page_width or max(box.y_up, box.y_down) > doc.page_height:
            violations.append(Violation(box_id=box.box_id, rule="within_page", detail=str(coords)))

    return violations


def _check_ordinals(order: Dict[str, int]) -> None:
    ordinals = [v for v in order.values() if v != MISSING]
    if any(v < 0 for v in ordinals):
        raise InvalidSequenceError(f"negative ordinal other than {MISSING}")
    if len(set(ordinals)) != len(ordinals):
        raise InvalidSequenceError("duplicate ordinal")
    if ordinals and max(ordinals) != len(ordinals) - 1:
        raise InvalidSequenceError("ordinals are not contiguous from 0")


def validate_sequence(seq: ReadingSequence, doc: Document) -> List[Violation]:
    """ReadingSequence の不変条件をドキュメントに対して検査"""
    violations: List[Violation] = []
    known = set(doc.box_ids)
    for box_id in seq.order:
        if box_id not in known:
            violations.append(Violation(box_id=box_id, rule="unknown_box_id"))
    try:
        _check_ordinals(seq.order)
    except InvalidSequenceError as e:
        violations.append(Violation(rule="permutation", detail=str(e)))
    return violations


def as_permutation(seq: ReadingSequence) -> List[str]:
    """
    ReadingSequence を序数順の box_id リストに変換（欠損は除外）

    Raises:
        InvalidSequenceError: 序数が 0..k-1 の順列になっていない場合
    """
    _check_ordinals(seq.order)
    ordered = [(ordinal, box_id) for box_id, ordinal in seq.order.items() if ordinal != MISSING]
    ordered.sort()
    return [box_id for _, box_id in ordered]


def sequence_from_permutation(
    permutation: Sequence[str],
    all_box_ids: Optional[Iterable[str]] = None,
) -> ReadingSequence:
    """
    序数順の box_id リストから ReadingSequence を作成

    Args:
        permutation: 読み順に並んだ box_id
        all_box_ids: 指定した場合、permutation に含まれない box_id は MISSING になる
    """
    if len(set(permutation)) != len(permutation):
        raise InvalidSequenceError("duplicate box_id in permutation")
    order: Dict[str, int] = {}
    if all_box_ids is not None:
        order = {box_id: MISSING for box_id in all_box_ids}
    for ordinal, box_id in enumerate(permutation):
        order[box_id] = ordinal
    return ReadingSequence(order=order)


def ordinal_of(seq: ReadingSequence, box_id: str) -> int:
    """序数を取得（マッピングにない場合は MISSING）"""
    return seq.order.get(box_id, MISSING)


def count_missing(seq: ReadingSequence, doc: Document) -> int:
    """ドキュメント中で序数を持たないボックス数"""
    return sum(1 for box_id in doc.box_ids if ordinal_of(seq, box_id) == MISSING)
