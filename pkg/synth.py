"""
合成コーパス生成

4 種類の読みパターン（Z 字、表のセル優先、グラフとラベルの往復、フローチャート）ごとに
レイアウト・gold 順序・視線軌跡を生成する。同じ SynthSpec からは常に同じ結果になる。
"""

import logging
import math
from typing import List, Tuple

import numpy as np

from core import centroid, sequence_from_permutation
from errors import EmptyInputError
from schemas import (
    BoundingBox,
    Document,
    GazePoint,
    GazeTrajectory,
    ReadingPattern,
    SubsetTag,
    SynthResult,
    SynthSpec,
)

logger = logging.getLogger(__name__)

PATTERN_SUBSETS = {
    ReadingPattern.NORMAL_Z: SubsetTag.WEAK,
    ReadingPattern.LOCAL_PRIORITY: SubsetTag.STRUCTURED,
    ReadingPattern.CROSS_MODAL: SubsetTag.INFOGRAPH,
    ReadingPattern.VISUAL_INSTRUCTION: SubsetTag.INFOGRAPH,
}

_WORDS = (
    "total", "date", "name", "amount", "item", "price", "note", "page",
    "figure", "share", "step", "result", "region", "value", "table", "label",
)

# (x_up, y_up, x_down, y_down)
Rect = Tuple[float, float, float, float]


# ===== レイアウト =====

def _grid_layout(spec: SynthSpec) -> Tuple[List[Rect], List[int]]:
    """rows × cols の格子（gold は行優先）"""
    cell_w, cell_h = spec.page_width / spec.cols, spec.page_height / spec.rows
    rects = []
    for r in range(spec.rows):
        for c in range(spec.cols):
            rects.append((
                c * cell_w + 0.1 * cell_w,
                r * cell_h + 0.3 * cell_h,
                (c + 1) * cell_w - 0.1 * cell_w,
                (r + 1) * cell_h - 0.3 * cell_h,
            ))
    return rects, list(range(len(rects)))


def _table_layout(spec: SynthSpec) -> Tuple[List[Rect], List[int]]:
    """セルごとに複数行のテキストを持つ表（gold はセル順、セル内は上から下）"""
    cell_w, cell_h = spec.page_width / spec.cols, spec.page_height / spec.rows
    pitch = min(40.0, (cell_h - 20.0) / spec.lines_per_cell)
    line_h = 0.75 * pitch
    rects = []
    for r in range(spec.rows):
        for c in range(spec.cols):
            for k in range(spec.lines_per_cell):
                top = r * cell_h + 10.0 + k * pitch
                rects.append((c * cell_w + 0.1 * cell_w, top, (c + 1) * cell_w - 0.1 * cell_w, top + line_h))
    return rects, list(range(len(rects)))


def _radial_layout(spec: SynthSpec) -> Tuple[List[Rect], List[int]]:
    """中央のグラフと周囲のラベル（gold はグラフ → 上から時計回りのラベル）"""
    cx, cy = spec.page_width / 2, spec.page_height / 2
    side = 0.3 * min(spec.page_width, spec.page_height)
    radius = 0.4 * min(spec.page_width, spec.page_height)
    rects = [(cx - side / 2, cy - side / 2, cx + side / 2, cy + side / 2)]
    for k in range(spec.cols):
        angle = math.radians(90 - k * 360 / spec.cols)
        lx, ly = cx + radius * math.cos(angle), cy - radius * math.sin(angle)
        rects.append((lx - 60, ly - 20, lx + 60, ly + 20))
    return rects, list(range(len(rects)))


def _staircase_layout(spec: SynthSpec) -> Tuple[List[Rect], List[int]]:
    """右下へ進む階段状のノード列（gold は先頭から順）"""
    margin, box_w, box_h = 40.0, 120.0, 60.0
    n = spec.rows
    step_x = (spec.page_width - 2 * margin - box_w) / max(n - 1, 1)
    step_y = (spec.page_height - 2 * margin - box_h) / max(n - 1, 1)
    rects = []
    for k in range(n):
        x, y = margin + k * step_x, margin + k * step_y
        rects.append((x, y, x + box_w, y + box_h))
    return rects, list(range(n))


_LAYOUTS = {
    ReadingPattern.NORMAL_Z: _grid_layout,
    ReadingPattern.LOCAL_PRIORITY: _table_layout,
    ReadingPattern.CROSS_MODAL: _radial_layout,
    ReadingPattern.VISUAL_INSTRUCTION: _staircase_layout,
}


# ===== 走査経路 =====

def _visit_path(pattern: ReadingPattern, gold: List[int]) -> List[int]:
    """gold 順にボックスを訪問する経路（パターン固有の往復を含む）"""
    if pattern == ReadingPattern.CROSS_MODAL:
        hub, labels = gold[0], gold[1:]
        path = [hub]
        for k, label in enumerate(labels):
            if k:
                path.append(hub)
            path.append(label)
        return path
    if pattern == ReadingPattern.VISUAL_INSTRUCTION:
        path = [gold[0]]
        for k in range(1, len(gold)):
            path.extend([gold[k], gold[k - 1]])
        return path
    return list(gold)


def _inject_returns(path: List[int], count: int, rng: np.random.Generator) -> List[int]:
    """既に訪問したボックスへの戻りを、そのボックスより後ろの位置に count 回挿入"""
    path = list(path)
    seen, candidates = set(), []
    for box in path[:-1]:
        if box not in seen:
            candidates.append(box)
        seen.add(box)
    count = min(count, len(candidates))
    if not count:
        return path
    for box in rng.choice(candidates, size=count, replace=False):
        first = path.index(int(box))
        position = int(rng.integers(first + 2, len(path) + 1))
        path.insert(position, int(box))
    return path


def _clip(value: float, upper: float) -> float:
    return float(min(max(value, 0.0), upper))


# ===== 生成 =====

def synth(spec: SynthSpec) -> SynthResult:
    """
    合成ドキュメントを 1 件生成

    - ボックスの OCR 出力順は乱数で並べ替える（box_id は出力順に b000, b001, ...）
    - dropout_rate × ボックス数（四捨五入）のボックスは一度も注視されない
    - return_rate × ボックス数（四捨五入）回の戻り注視を、初回注視より後ろに挿入する
    - 注視点はボックス重心に標準偏差 jitter_px のガウス雑音を加えたもの

    Raises:
        EmptyInputError: rows または cols が 0 の場合
    """
    if spec.rows < 1 or spec.cols < 1:
        raise EmptyInputError(f"degenerate grid {spec.rows}x{spec.cols}")

    rng = np.random.default_rng(spec.seed)
    rects, gold_slots = _LAYOUTS[spec.pattern](spec)
    n = len(rects)

    # OCR 出力順: slot → emission index
    emission = rng.permutation(n)
    width = max(3, len(str(n - 1)))
    shifts = rng.uniform(-spec.layout_jitter_px, spec.layout_jitter_px, size=n) if spec.layout_jitter_px else np.zeros(n)
    texts = [" ".join(rng.choice(_WORDS, size=int(rng.integers(1, 4)))) for _ in range(n)]

    boxes_by_slot: List[BoundingBox] = []
    for slot, (x_up, y_up, x_down, y_down) in enumerate(rects):
        shift = float(shifts[slot])
        shift = max(-y_up, min(shift, spec.page_height - y_down))
        boxes_by_slot.append(BoundingBox(
            box_id=f"b{int(emission[slot]):0{width}d}",
            x_up=round(_clip(x_up, spec.page_width), 1),
            y_up=round(_clip(y_up + shift, spec.page_height), 1),
            x_down=round(_clip(x_down, spec.page_width), 1),
            y_down=round(_clip(y_down + shift, spec.page_height), 1),
            text=texts[slot],
        ))
    boxes = tuple(sorted(boxes_by_slot, key=lambda b: b.box_id))

    doc = Document(
        doc_id=spec.doc_id or f"{spec.pattern.value}-{spec.seed:05d}",
        page_width=spec.page_width,
        page_height=spec.page_height,
        boxes=boxes,
        subset_tag=PATTERN_SUBSETS[spec.pattern],
        split=spec.split,
    )
    gold = sequence_from_permutation([boxes_by_slot[slot].box_id for slot in gold_slots], doc.box_ids)

    dropped = set(rng.choice(n, size=round(spec.dropout_rate * n), replace=False).tolist())
    path = [slot for slot in _visit_path(spec.pattern, gold_slots) if slot not in dropped]
    path = _inject_returns(path, round(spec.return_rate * (n - len(dropped))), rng)

    points = []
    timestamp = 0.0
    for slot in path:
        c = centroid(boxes_by_slot[slot])
        x, y = c.x, c.y
        if spec.jitter_px:
            x += float(rng.normal(0.0, spec.jitter_px))
            y += float(rng.normal(0.0, spec.jitter_px))
        points.append(GazePoint(
            timestamp=round(timestamp, 1),
            x=round(_clip(x, spec.page_width), 1),
            y=round(_clip(y, spec.page_height), 1),
            duration=round(float(rng.uniform(150.0, 300.0)), 1),
        ))
        timestamp += 200.0 + float(rng.uniform(0.0, 100.0))

    logger.debug("synthesized %s: %d boxes, %d dropped, %d fixations", doc.doc_id, n, len(dropped), len(points))
    return SynthResult(document=doc, gold=gold, trajectory=GazeTrajectory(doc_id=doc.doc_id, points=tuple(points)))


def synth_corpus(spec: SynthSpec, docs: int) -> List[SynthResult]:
    """seed, seed+1, ... で docs 件を生成"""
    return [synth(spec.model_copy(update={"seed": spec.seed + i, "doc_id": None})) for i in range(docs)]
