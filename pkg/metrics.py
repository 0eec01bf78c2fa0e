"""
評価指標

Kendall の τ、Spearman の ρ、欠損率、Levenshtein 距離、ANLS とコーパス集計
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, NamedTuple, Optional, Sequence, Tuple

import Levenshtein
import numpy as np

from core import count_missing
from errors import EmptyInputError
from schemas import (
    MISSING,
    AnlsScore,
    Document,
    DocumentEvaluation,
    OrderReport,
    RankCorrelation,
    ReadingSequence,
    SubsetSummary,
    SubsetTag,
)

logger = logging.getLogger(__name__)


class EvaluationItem(NamedTuple):
    """コーパス評価の入力 1 件"""
    document: Document
    gold: ReadingSequence
    pred: ReadingSequence


# ===== 順位相関 =====

def _common_ranks(pred: ReadingSequence, gold: ReadingSequence) -> Tuple[np.ndarray, np.ndarray]:
    """両方で序数を持つボックスに限定し、それぞれ 0..n-1 に振り直した順位を返す"""
    common = [
        box_id for box_id, ordinal in gold.order.items()
        if ordinal != MISSING and pred.order.get(box_id, MISSING) != MISSING
    ]
    by_pred = sorted(common, key=lambda box_id: pred.order[box_id])
    by_gold = sorted(common, key=lambda box_id: gold.order[box_id])
    pred_rank = {box_id: i for i, box_id in enumerate(by_pred)}
    gold_rank = {box_id: i for i, box_id in enumerate(by_gold)}
    p = np.array([pred_rank[box_id] for box_id in common], dtype=np.int64)
    g = np.array([gold_rank[box_id] for box_id in common], dtype=np.int64)
    return p, g


def _concordance(p: np.ndarray, g: np.ndarray) -> int:
    """C - D（一致ペア数 - 不一致ペア数）"""
    sp = np.sign(p[:, None] - p[None, :])
    sg = np.sign(g[:, None] - g[None, :])
    return int(np.triu(sp * sg, k=1).sum())


def kendall_tau(pred: ReadingSequence, gold: ReadingSequence) -> RankCorrelation:
    """
    Kendall の τ

    両方で序数を持つボックスに限定して τ = (C - D) / (n(n-1)/2) を計算する。
    n_common < 2 の場合 tau は None。
    """
    p, g = _common_ranks(pred, gold)
    n = len(p)
    if n < 2:
        return RankCorrelation(tau=None, n_common=n)
    return RankCorrelation(tau=_concordance(p, g) / (n * (n - 1) / 2), n_common=n)


def spearman_rho(pred: ReadingSequence, gold: ReadingSequence) -> RankCorrelation:
    """
    Spearman の ρ

    ρ = 1 - 6Σd² / (n(n²-1))、d は共通ボックスごとの順位差
    """
    p, g = _common_ranks(pred, gold)
    n = len(p)
    if n < 2:
        return RankCorrelation(rho=None, n_common=n)
    d = p - g
    return RankCorrelation(rho=1 - 6 * int(np.sum(d * d)) / (n * (n * n - 1)), n_common=n)


def rank_correlation(pred: ReadingSequence, gold: ReadingSequence) -> RankCorrelation:
    """τ と ρ をまとめて計算"""
    tau = kendall_tau(pred, gold)
    rho = spearman_rho(pred, gold)
    return RankCorrelation(tau=tau.tau, rho=rho.rho, n_common=tau.n_common)


def missing_rate(seq: ReadingSequence, doc: Document) -> Optional[float]:
    """
    欠損率 = 序数 -1 のボックス数 / ボックス数

    Returns:
        Optional[float]: 空ドキュメントの場合は None
    """
    if not doc.boxes:
        return None
    return count_missing(seq, doc) / len(doc.boxes)


# ===== 文字列類似度 =====

def levenshtein(a: str, b: str) -> int:
    """Unicode コードポイント単位の編集距離"""
    return Levenshtein.distance(a, b)


def _normalize_answer(text: str) -> str:
    return text.strip().lower()


def anls(pred: str, golds: Sequence[str], threshold: float = 0.5) -> AnlsScore:
    """
    Average Normalized Levenshtein Similarity（1 問分）

    Args:
        pred: 予測解答
        golds: 正解候補（1 つ以上）
        threshold: 正規化距離がこの値以上なら 0 点

    Raises:
        EmptyInputError: golds が空の場合
    """
    if not golds:
        raise EmptyInputError("anls requires at least one gold answer")

    y_pred = _normalize_answer(pred)
    best = 0.0
    for gold in golds:
        y_true = _normalize_answer(gold)
        length = max(len(y_pred), len(y_true))
        nl = 0.0 if length == 0 else levenshtein(y_pred, y_true) / length
        score = 1 - nl if nl < threshold else 0.0
        best = max(best, score)
    return AnlsScore(value=best, threshold=threshold)


def corpus_anls(
    preds: Sequence[str],
    golds: Sequence[Sequence[str]],
    threshold: float = 0.5,
) -> float:
    """質問単位の ANLS の平均"""
    if not preds:
        raise EmptyInputError("corpus_anls requires at least one question")
    if len(preds) != len(golds):
        raise ValueError("preds and golds must have the same length")
    return sum(anls(p, g, threshold).value for p, g in zip(preds, golds)) / len(preds)


# ===== コーパス集計 =====

def _evaluate_one(item: EvaluationItem, strategy: str) -> Tuple[DocumentEvaluation, int]:
    corr = rank_correlation(item.pred, item.gold)
    p, g = _common_ranks(item.pred, item.gold)
    concordance = _concordance(p, g) if len(p) >= 2 else 0
    row = DocumentEvaluation(
        doc_id=item.document.doc_id,
        subset=item.document.subset_tag.value,
        strategy=strategy,
        tau=corr.tau,
        rho=corr.rho,
        n_common=corr.n_common,
        missing_rate=missing_rate(item.gold, item.document),
        pred_missing_rate=missing_rate(item.pred, item.document),
    )
    return row, concordance


def _mean(values: List[float]) -> Optional[float]:
    return sum(values) / len(values) if values else None


def _summarize(
    subset: str,
    results: List[Tuple[DocumentEvaluation, int]],
    micro: bool,
) -> SubsetSummary:
    rows = [row for row, _ in results]
    defined = [row for row in rows if row.tau is not None]
    if micro:
        pairs = sum(row.n_common * (row.n_common - 1) // 2 for row in defined)
        weight = sum(row.n_common for row in defined)
        concordance = sum(c for row, c in results if row.tau is not None)
        tau = concordance / pairs if pairs else None
        rho = sum(row.rho * row.n_common for row in defined) / weight if weight else None
    else:
        tau = _mean([row.tau for row in defined])
        rho = _mean([row.rho for row in defined])
    return SubsetSummary(
        subset=subset,
        documents=len(rows),
        evaluated=len(defined),
        undefined=len(rows) - len(defined),
        tau=tau,
        rho=rho,
        missing_rate=_mean([row.missing_rate for row in rows if row.missing_rate is not None]),
    )


def evaluate_corpus(
    items: Sequence[EvaluationItem],
    strategy: str = "unknown",
    micro: bool = False,
    max_workers: int = 1,
) -> OrderReport:
    """
    コーパス全体の評価

    ドキュメントごとに τ, ρ, 欠損率を計算し、サブセット別と全体で平均する。
    相関が未定義のドキュメントは平均から除外し undefined として数える。

    Args:
        items: 評価対象
        strategy: レポートに記録する戦略名
        micro: True の場合ペアをプールした集計（τ は全ペア、ρ は n_common 重み付き）
        max_workers: ドキュメント単位の並列数

    Raises:
        EmptyInputError: 評価対象が空の場合
    """
    if not items:
        raise EmptyInputError("evaluation set is empty")

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(lambda item: _evaluate_one(item, strategy), items))
    else:
        results = [_evaluate_one(item, strategy) for item in items]

    rows = [row for row, _ in results]

    undefined = [row.doc_id for row in rows if row.tau is None]
    if undefined:
        logger.warning("%d document(s) with undefined correlation excluded from means", len(undefined))

    subsets = []
    for tag in SubsetTag:
        group = [result for result in results if result[0].subset == tag.value]
        if group:
            subsets.append(_summarize(tag.value, group, micro))

    return OrderReport(
        strategy=strategy,
        aggregation="micro" if micro else "macro",
        rows=rows,
        subsets=subsets,
        overall=_summarize("overall", list(results), micro),
    )
