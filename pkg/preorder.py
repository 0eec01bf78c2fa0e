"""
モデルベースのプレオーダー

比較器の確率 p（左が先に読まれる確率）に従って隣接要素を入れ替えるバブルソート型の並べ替えと、
戦略名からの振り分け
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field

from comparator import NativeComparator, PairwiseComparator, load_model
from config import EngineConfig
from core import sequence_from_permutation
from errors import (
    ComparatorError,
    DocumentValidationError,
    MissingModelError,
    PreorderAbortedError,
    UnknownStrategyError,
)
from external import ExternalComparator
from orderers import default_order, xy_order, z_order
from schemas import ComparatorModel, Document, PreorderTrace, ReadingSequence, Violation, ZOrderConfig

logger = logging.getLogger(__name__)

STRATEGIES = ("default-ocr", "z-order", "xy-order", "model", "external-model")


class _ScoreCache:
    """(left_id, right_id) → p のキャッシュ付き呼び出し"""

    def __init__(self, doc: Document, comparator: PairwiseComparator, enabled: bool, trace: PreorderTrace):
        self.box_map = doc.box_map()
        self.page_dims = (doc.page_width, doc.page_height)
        self.comparator = comparator
        self.enabled = enabled
        self.trace = trace
        self.scores: Dict[Tuple[str, str], float] = {}

    def p(self, left_id: str, right_id: str) -> float:
        key = (left_id, right_id)
        if self.enabled and key in self.scores:
            return self.scores[key]

        self.trace.comparator_calls += 1
        try:
            p = self.comparator.score(self.box_map[left_id], self.box_map[right_id], self.page_dims).p
        except ComparatorError as e:
            raise PreorderAbortedError(f"comparator failed on ({left_id}, {right_id}): {e}", self.trace) from e

        if self.enabled:
            self.scores[key] = p
            if getattr(self.comparator, "antisymmetric", False):
                self.scores[(right_id, left_id)] = 1.0 - p
        return p


def _check_ids(ids: Sequence[str], doc: Document) -> None:
    known = set(doc.box_ids)
    seen = set()
    violations = []
    for box_id in ids:
        if box_id not in known:
            violations.append(Violation(box_id=box_id, rule="unknown_box_id"))
        elif box_id in seen:
            violations.append(Violation(box_id=box_id, rule="duplicate_box_id"))
        seen.add(box_id)
    if violations:
        raise DocumentValidationError(doc.doc_id, violations)


def _bubble(ids: List[str], scores: _ScoreCache, early_exit: bool, record_passes: bool) -> None:
    trace = scores.trace
    length = len(ids)
    for i in range(length - 1):
        swapped_at: List[int] = []
        for j in range(length - 1 - i):
            if scores.p(ids[j], ids[j + 1]) < 0.5:
                ids[j], ids[j + 1] = ids[j + 1], ids[j]
                trace.swaps += 1
                swapped_at.append(j)
        if record_passes:
            trace.passes.append(swapped_at)
        logger.debug("pass %d: %d swap(s)", i + 1, len(swapped_at))
        if early_exit and not swapped_at:
            break


def _merge_sort(ids: List[str], scores: _ScoreCache) -> List[str]:
    if len(ids) <= 1:
        return ids
    middle = len(ids) // 2
    left = _merge_sort(ids[:middle], scores)
    right = _merge_sort(ids[middle:], scores)

    merged: List[str] = []
    i = j = 0
    while i < len(left) and j < len(right):
        # 右側が先と判定された場合のみ右を取る（p = 0.5 は元の順を保つ）
        if scores.p(left[i], right[j]) < 0.5:
            merged.append(right[j])
            scores.trace.swaps += 1
            j += 1
        else:
            merged.append(left[i])
            i += 1
    merged.extend(left[i:])
    merged.extend(right[j:])
    return merged


def preorder(
    ids: Sequence[str],
    doc: Document,
    comparator: PairwiseComparator,
    cache: bool = False,
    early_exit: bool = False,
    record_passes: bool = False,
    merge: bool = False,
) -> Tuple[ReadingSequence, PreorderTrace]:
    """
    比較器によるプレオーダー

    外側 i = 0..l-2、内側 j = 0..l-2-i の二重ループで隣接ペア (r_j, r_{j+1}) を比較し、
    p < 0.5 のとき入れ替える。キャッシュと早期終了が無効なら比較器の呼び出しは
    ちょうど l(l-1)/2 回になる。

    Args:
        ids: 並べ替え対象の box_id 列（通常は OCR 出力順）
        doc: ボックスを解決するドキュメント
        comparator: ペアワイズ比較器
        cache: 同じ (left, right) の問い合わせを再利用する
        early_exit: スワップのないパスで打ち切る
        record_passes: パスごとのスワップ位置をトレースに記録する
        merge: バブルソートの代わりにマージソートを使う（大きなドキュメント向け、結果は
            非推移的な比較器では一致しない）

    Returns:
        Tuple[ReadingSequence, PreorderTrace]: 並べ替え結果と実行記録

    Raises:
        DocumentValidationError: ids にドキュメントにない box_id や重複がある場合
        PreorderAbortedError: 比較器が失敗した場合（途中までのトレースを保持）
    """
    _check_ids(ids, doc)
    trace = PreorderTrace()
    arrangement = list(ids)
    if not arrangement:
        return ReadingSequence(order={}), trace

    scores = _ScoreCache(doc, comparator, cache, trace)
    if merge:
        arrangement = _merge_sort(arrangement, scores)
    else:
        _bubble(arrangement, scores, early_exit, record_passes)

    logger.debug(
        "preorder %s: %d box(es), %d call(s), %d swap(s)",
        doc.doc_id, len(arrangement), trace.comparator_calls, trace.swaps,
    )
    return sequence_from_permutation(arrangement), trace


# ===== 戦略の振り分け =====

class StrategyConfig(BaseModel):
    """order_with_strategy の設定"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    y_threshold: Optional[float] = Field(None, ge=0)
    # model 戦略: comparator > model > model_path の順に使う
    comparator: Optional[Any] = None
    model: Optional[ComparatorModel] = None
    model_path: Optional[Path] = None
    external_command: Optional[str] = None
    external_timeout: float = EngineConfig.EXTERNAL_TIMEOUT
    external_regime: str = "text_box"
    cache: bool = False
    early_exit: bool = False
    merge: bool = False


def resolve_comparator(config: StrategyConfig) -> PairwiseComparator:
    """
    model 戦略の比較器を解決

    Raises:
        MissingModelError: 比較器・モデル・モデルパスのいずれも指定されていない場合
    """
    if config.comparator is not None:
        return config.comparator
    if config.model is not None:
        return NativeComparator(config.model)
    if config.model_path is not None:
        if not Path(config.model_path).is_file():
            raise MissingModelError(f"model file not found: {config.model_path}")
        return NativeComparator(load_model(config.model_path))
    raise MissingModelError("strategy 'model' requires a comparator model")


def order_with_strategy(
    doc: Document,
    strategy: str,
    config: StrategyConfig = StrategyConfig(),
) -> Tuple[ReadingSequence, Optional[PreorderTrace]]:
    """
    戦略名で読み順を生成

    model / external-model 戦略は OCR 出力順を初期列としてプレオーダーを適用する。

    Returns:
        Tuple[ReadingSequence, Optional[PreorderTrace]]: 読み順と（モデル戦略の場合）実行記録

    Raises:
        UnknownStrategyError: 未知の戦略名
        MissingModelError: モデル戦略に必要な比較器がない場合
    """
    if strategy == "default-ocr":
        return default_order(doc), None
    if strategy == "z-order":
        return z_order(doc, ZOrderConfig(y_threshold=config.y_threshold)), None
    if strategy == "xy-order":
        return xy_order(doc), None

    options = dict(cache=config.cache, early_exit=config.early_exit, merge=config.merge)
    if strategy == "model":
        return preorder(doc.box_ids, doc, resolve_comparator(config), **options)
    if strategy == "external-model":
        command = config.external_command or EngineConfig.EXTERNAL_COMPARATOR
        if not command:
            raise MissingModelError("strategy 'external-model' requires an external comparator command")
        with ExternalComparator(
            command,
            regime=config.external_regime,
            timeout=config.external_timeout,
            image=doc.image,
        ) as comparator:
            return preorder(doc.box_ids, doc, comparator, **options)

    raise UnknownStrategyError(f"unknown strategy '{strategy}' (choose from {', '.join(STRATEGIES)})")
