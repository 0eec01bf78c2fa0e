"""
ルールベースの読み順生成

OCR 出力順そのまま、閾値つき Z-order、XY 右下探索の 3 方式
"""

from typing import List

from core import centroid, median_box_height, sequence_from_permutation
from schemas import BoundingBox, Document, ReadingSequence, ZOrderConfig


def default_order(doc: Document) -> ReadingSequence:
    """OCR 出力順をそのまま読み順とする"""
    return sequence_from_permutation(doc.box_ids)


def resolve_y_threshold(doc: Document, cfg: ZOrderConfig) -> float:
    """行とみなす y 距離の閾値（未指定ならボックス高さ中央値の半分）"""
    if cfg.y_threshold is not None:
        return cfg.y_threshold
    return median_box_height(doc) / 2


def group_lines(doc: Document, y_threshold: float) -> List[List[BoundingBox]]:
    """
    ボックスを視覚的な行にまとめる

    重心の y 差が閾値未満のボックスを推移的に同じ行とする。
    行は平均 y の昇順、行内は x_up → y_up → box_id の昇順。
    """
    boxes = sorted(doc.boxes, key=lambda b: (centroid(b).y, b.box_id))
    lines: List[List[BoundingBox]] = []
    last_y = None
    for box in boxes:
        y = centroid(box).y
        if lines and y - last_y < y_threshold:
            lines[-1].append(box)
        else:
            lines.append([box])
        last_y = y

    for line in lines:
        line.sort(key=lambda b: (b.x_up, b.y_up, b.box_id))

    def line_key(line: List[BoundingBox]):
        mean_y = sum(centroid(b).y for b in line) / len(line)
        first = line[0]
        return mean_y, first.x_up, first.y_up, first.box_id

    lines.sort(key=line_key)
    return lines


def z_order(doc: Document, cfg: ZOrderConfig = ZOrderConfig()) -> ReadingSequence:
    """
    閾値つき Z-order

    上から下へ並べ、y 方向の距離が閾値より小さいボックス同士は x 方向の順とする。
    """
    lines = group_lines(doc, resolve_y_threshold(doc, cfg))
    return sequence_from_permutation([box.box_id for line in lines for box in line])


def _y_overlap(a: BoundingBox, b: BoundingBox) -> bool:
    return a.y_up <= b.y_down and b.y_up <= a.y_down


def xy_order(doc: Document) -> ReadingSequence:
    """
    XY 右下探索

    (y_up, y_down) でソートした後、現在のボックスと y 区間が重なる未訪問ボックスのうち
    右側で最も近いものへ進む。右側に候補がなければ、残りの最上部ボックスと
    y 区間が重なる行の中で最も左のボックスから再開する。
    """
    remaining = sorted(doc.boxes, key=lambda b: (b.y_up, b.y_down, b.x_up, b.box_id))
    permutation: List[str] = []
    current = None

    while remaining:
        candidates = []
        if current is not None:
            cx = centroid(current).x
            candidates = [b for b in remaining if _y_overlap(current, b) and centroid(b).x > cx]
        if candidates:
            current = min(candidates, key=lambda b: (b.x_up, b.y_up, b.box_id))
        else:
            top = remaining[0]
            row = [b for b in remaining if _y_overlap(top, b)]
            current = min(row, key=lambda b: (b.x_up, b.y_up, b.box_id))
        remaining.remove(current)
        permutation.append(current.box_id)

    return sequence_from_permutation(permutation)
