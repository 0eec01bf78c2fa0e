"""
視線処理

視線軌跡から gold 読み順を作る:
当たり判定（周辺補正つき）、初回注視による並べ替え、欠損補完、
複数アノテーションの統合、走査統計とパターン分類
"""

import logging
import math
from collections import Counter
from itertools import pairwise
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from core import (
    as_permutation,
    box_gap,
    centroid_distance,
    median_box_height,
    ordinal_of,
    sequence_from_permutation,
)
from errors import EmptyInputError, InvalidSequenceError, TrajectoryError
from metrics import kendall_tau, missing_rate
from schemas import (
    MISSING,
    AlignmentConfig,
    Document,
    GazeTrajectory,
    GoldResult,
    PatternThresholds,
    RawAssignment,
    ReadingPattern,
    ReadingSequence,
    ScanpathStats,
)

logger = logging.getLogger(__name__)

# 方位ビン（0° = 東、反時計回り、画面上方向が北）
DIRECTIONS = ("E", "NE", "N", "NW", "W", "SW", "S", "SE")


def resolve_radius(doc: Document, cfg: AlignmentConfig) -> float:
    """周辺判定の半径（未指定ならボックス高さ中央値の半分）"""
    if cfg.periphery_radius is not None:
        return cfg.periphery_radius
    return median_box_height(doc) / 2


def resolve_reach(doc: Document, cfg: AlignmentConfig) -> float:
    """欠損補完の到達距離（未指定なら周辺半径の 3 倍）"""
    if cfg.repair_reach is not None:
        return cfg.repair_reach
    return 3 * resolve_radius(doc, cfg)


def _check_timestamps(traj: GazeTrajectory) -> None:
    for i, (a, b) in enumerate(pairwise(traj.points)):
        if b.timestamp < a.timestamp:
            raise TrajectoryError(f"timestamp decreases at point {i + 1}: {a.timestamp} -> {b.timestamp}")


# ===== 当たり判定 =====

def assign_gaze(
    doc: Document,
    traj: GazeTrajectory,
    cfg: AlignmentConfig = AlignmentConfig(),
) -> RawAssignment:
    """
    視線サンプルをボックスに割り当てる

    - ボックスの厳密な内部の点はそのボックスへ
    - 複数ボックスが重なる場合は面積最小のボックス（同点は box_id の辞書順）
    - どのボックスの内部にもない点（境界上の点を含む）は、境界までの距離が
      periphery_radius 以下なら最も近いボックス（同距離は box_id の辞書順）へ、
      それ以外は外れ（None）

    Raises:
        TrajectoryError: タイムスタンプが逆行している場合
    """
    _check_timestamps(traj)
    radius = resolve_radius(doc, cfg)
    box_ids = tuple(doc.box_ids)

    hits: List[Optional[str]] = []
    visits: Dict[str, List[int]] = {}

    if doc.boxes:
        coords = np.array([[b.x_up, b.y_up, b.x_down, b.y_down] for b in doc.boxes], dtype=float)
        areas = (coords[:, 2] - coords[:, 0]) * (coords[:, 3] - coords[:, 1])
        zeros = np.zeros(len(coords))

    for index, point in enumerate(traj.points):
        hit = None
        if doc.boxes:
            dx = np.maximum.reduce([coords[:, 0] - point.x, zeros, point.x - coords[:, 2]])
            dy = np.maximum.reduce([coords[:, 1] - point.y, zeros, point.y - coords[:, 3]])
            dist = np.hypot(dx, dy)
            inside = np.flatnonzero(
                (coords[:, 0] < point.x) & (point.x < coords[:, 2]) & (coords[:, 1] < point.y) & (point.y < coords[:, 3])
            )
            if len(inside):
                best = min(inside, key=lambda k: (areas[k], box_ids[k]))
                hit = box_ids[best]
            else:
                best = min(range(len(box_ids)), key=lambda k: (dist[k], box_ids[k]))
                if dist[best] <= radius:
                    hit = box_ids[best]
        if hit is None:
            logger.debug("gaze point %d (%.1f, %.1f) hits no box", index, point.x, point.y)
        else:
            visits.setdefault(hit, []).append(index)
        hits.append(hit)

    return RawAssignment(
        box_ids=box_ids,
        hits=tuple(hits),
        timestamps=tuple(p.timestamp for p in traj.points),
        visits={box_id: tuple(indices) for box_id, indices in visits.items()},
    )


def _order_by_visit(assign: RawAssignment, use_first: bool) -> ReadingSequence:
    def visit_key(box_id: str) -> Tuple[float, int]:
        indices = assign.visits[box_id]
        index = indices[0] if use_first else indices[-1]
        return assign.timestamps[index], index

    visited = sorted(assign.visits, key=visit_key)
    return sequence_from_permutation(visited, assign.box_ids)


def first_visit_order(assign: RawAssignment) -> ReadingSequence:
    """
    初回注視の時刻でボックスを並べる

    再訪問は無視し、一度も注視されなかったボックスは MISSING。
    序数は 0..k-1 に詰める。
    """
    return _order_by_visit(assign, use_first=True)


def last_visit_order(assign: RawAssignment) -> ReadingSequence:
    """最終注視の時刻で並べる（重複除去を行わない生の視線順）"""
    return _order_by_visit(assign, use_first=False)


# ===== 欠損補完 =====

def repair_missing(
    doc: Document,
    seq: ReadingSequence,
    reach: Optional[float] = None,
) -> ReadingSequence:
    """
    欠損ボックスを最も近い順序付きボックスの直後に挿入する

    到達距離 reach（矩形間距離）以内に順序付きボックスがない欠損ボックスは MISSING のまま。
    同じボックスの直後に複数挿入される場合は重心距離の近い順、同距離は OCR 出力順。
    既に順序付きのボックス同士の相対順は変えない。

    Args:
        doc: 対象ドキュメント
        seq: 補完前の順序
        reach: 到達距離（None の場合は既定の AlignmentConfig から算出）
    """
    missing_boxes = [box for box in doc.boxes if ordinal_of(seq, box.box_id) == MISSING]
    if not missing_boxes:
        return seq

    ordered = as_permutation(seq)
    if not ordered:
        return seq

    if reach is None:
        reach = resolve_reach(doc, AlignmentConfig())

    box_map = doc.box_map()
    rank = {box_id: i for i, box_id in enumerate(ordered)}
    attachments: Dict[str, List[Tuple[float, int, str]]] = {}

    for emission_index, box in enumerate(doc.boxes):
        if ordinal_of(seq, box.box_id) != MISSING:
            continue
        candidates = [oid for oid in ordered if box_gap(box, box_map[oid]) <= reach]
        if not candidates:
            logger.debug("box %s has no ordered neighbour within %.1f px", box.box_id, reach)
            continue
        anchor = min(candidates, key=lambda oid: (centroid_distance(box, box_map[oid]), rank[oid]))
        attachments.setdefault(anchor, []).append(
            (centroid_distance(box, box_map[anchor]), emission_index, box.box_id)
        )

    permutation: List[str] = []
    for box_id in ordered:
        permutation.append(box_id)
        permutation.extend(inserted for _, _, inserted in sorted(attachments.get(box_id, [])))
    return sequence_from_permutation(permutation, doc.box_ids)


def gold_pipeline(
    doc: Document,
    traj: GazeTrajectory,
    cfg: AlignmentConfig = AlignmentConfig(),
) -> GoldResult:
    """
    視線軌跡から gold 順序を作成

    assign_gaze → first_visit_order → repair_missing の順に適用する。
    dedupe を無効にすると最終注視順、repair を無効にすると欠損補完を省略する。
    """
    assignment = assign_gaze(doc, traj, cfg)
    seq = first_visit_order(assignment) if cfg.dedupe else last_visit_order(assignment)
    if cfg.repair:
        seq = repair_missing(doc, seq, reach=resolve_reach(doc, cfg))
    rate = missing_rate(seq, doc)
    return GoldResult(sequence=seq, missing_rate=rate if rate is not None else 0.0)


# ===== アノテーション統合 =====

def _sequence_missing_rate(seq: ReadingSequence) -> float:
    if not seq.order:
        return 0.0
    return sum(1 for v in seq.order.values() if v == MISSING) / len(seq.order)


def select_consolidated(annotations: Sequence[ReadingSequence]) -> int:
    """
    他のアノテーションとの平均 τ が最大のアノテーションの位置を返す

    同点は欠損率の低い方、さらに同点ならリストの先頭側。
    相関が未定義の組は τ = 0 として扱う。

    Raises:
        EmptyInputError: アノテーションが空の場合
        InvalidSequenceError: 対象ボックスの集合が一致しない場合
    """
    if not annotations:
        raise EmptyInputError("consolidate requires at least one annotation")
    keys = set(annotations[0].order)
    if any(set(a.order) != keys for a in annotations[1:]):
        raise InvalidSequenceError("annotations cover different box sets")
    if len(annotations) == 1:
        return 0

    def mean_tau(i: int) -> float:
        taus = []
        for j, other in enumerate(annotations):
            if i == j:
                continue
            tau = kendall_tau(annotations[i], other).tau
            taus.append(tau if tau is not None else 0.0)
        return sum(taus) / len(taus)

    scored = [
        (-round(mean_tau(i), 12), round(_sequence_missing_rate(a), 12), i)
        for i, a in enumerate(annotations)
    ]
    return min(scored)[2]


def consolidate(annotations: Sequence[ReadingSequence]) -> ReadingSequence:
    """文書単位の投票で最終アノテーションを 1 つ選ぶ"""
    return annotations[select_consolidated(annotations)]


# ===== 走査統計 =====

def _direction_bin(dx: float, dy: float) -> str:
    # y は下向きなので北を上にするため符号を反転
    angle = math.degrees(math.atan2(-dy, dx)) % 360
    return DIRECTIONS[int(((angle + 22.5) % 360) // 45)]


def scanpath_stats(traj: GazeTrajectory, doc: Document) -> ScanpathStats:
    """
    視線走査の記述統計

    サッカードは連続する 2 点間の移動（移動量 0 は除く）。
    後戻りは左かつ上への移動（読み方向の x, y とも負）。
    再訪問は直前とは別のボックスから既訪問ボックスへ戻った注視。

    Raises:
        TrajectoryError: 点が 2 未満、またはタイムスタンプが逆行している場合
    """
    if len(traj.points) < 2:
        raise TrajectoryError("scanpath statistics require at least 2 gaze points")
    _check_timestamps(traj)

    histogram = {name: 0 for name in DIRECTIONS}
    lengths: List[float] = []
    backtracks = 0
    for a, b in pairwise(traj.points):
        dx, dy = b.x - a.x, b.y - a.y
        if dx == 0 and dy == 0:
            continue
        histogram[_direction_bin(dx, dy)] += 1
        lengths.append(math.hypot(dx, dy))
        if dx < 0 and dy < 0:
            backtracks += 1

    n = len(lengths)
    assignment = assign_gaze(doc, traj, AlignmentConfig())
    revisits: Counter = Counter()
    visited = set()
    previous = None
    assigned = 0
    for hit in assignment.hits:
        if hit is None:
            continue
        assigned += 1
        if hit != previous and hit in visited:
            revisits[hit] += 1
        visited.add(hit)
        previous = hit

    total_revisits = sum(revisits.values())
    entropy = 0.0
    if n:
        probs = np.array([c / n for c in histogram.values() if c > 0])
        entropy = float(-np.sum(probs * np.log(probs)) / math.log(len(DIRECTIONS)))

    return ScanpathStats(
        direction_histogram=histogram,
        n_saccades=n,
        mean_saccade_length=sum(lengths) / n if n else 0.0,
        backtrack_rate=backtracks / n if n else 0.0,
        revisit_rate=total_revisits / assigned if assigned else 0.0,
        hub_share=max(revisits.values()) / total_revisits if total_revisits else 0.0,
        direction_entropy=min(max(entropy, 0.0), 1.0),
        east_share=histogram["E"] / n if n else 0.0,
    )


def classify_pattern(
    stats: ScanpathStats,
    thresholds: PatternThresholds = PatternThresholds(),
) -> ReadingPattern:
    """
    走査統計から読みパターンを判定

    1. 1 つのボックスへの往復が多く方位が分散 → cross_modal
    2. 後戻りが多い → visual_instruction
    3. 東向きサッカードが多い → normal_z
    4. それ以外 → local_priority
    """
    if (
        stats.hub_share >= thresholds.hub_share
        and stats.revisit_rate >= thresholds.revisit
        and stats.direction_entropy >= thresholds.entropy
    ):
        return ReadingPattern.CROSS_MODAL
    if stats.backtrack_rate >= thresholds.backtrack:
        return ReadingPattern.VISUAL_INSTRUCTION
    if stats.east_share >= thresholds.east_share:
        return ReadingPattern.NORMAL_Z
    return ReadingPattern.LOCAL_PRIORITY
