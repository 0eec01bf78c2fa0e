"""
コーパス統計とレポートの表示

分割 × サブセットごとのドキュメント数・エンティティ数・トークン数の集計と、
評価レポート・統計の rich テーブル化
"""

from collections import defaultdict
from typing import Dict, List, Optional, Sequence, Tuple

from rich.table import Table

from schemas import CorpusStats, CorpusStatsRow, Document, OrderReport, SubsetTag

SPLIT_ORDER = ("train", "dev", "test")
TOTAL = "total"
ALL_SPLITS = "all"
UNSPLIT = "-"


def _split_key(split: str) -> Tuple[int, str]:
    return (SPLIT_ORDER.index(split), split) if split in SPLIT_ORDER else (len(SPLIT_ORDER), split)


def _count(documents: Sequence[Document]) -> Tuple[int, int, int]:
    entities = sum(len(doc.boxes) for doc in documents)
    tokens = sum(len(box.text.split()) for doc in documents for box in doc.boxes)
    return len(documents), entities, tokens


def corpus_stats(documents: Sequence[Document]) -> CorpusStats:
    """
    分割・サブセット別の統計

    エンティティはボックス数、トークンはボックステキストの空白区切り数で近似する。
    分割ごとに weak / structured / infograph（other は存在する場合のみ）と合計行を出し、
    最後に全体の合計行を出す（分割のないドキュメントは "-"）。空のコーパスは合計行のみ（すべて 0）。
    """
    by_split: Dict[str, List[Document]] = defaultdict(list)
    for doc in documents:
        by_split[doc.split or UNSPLIT].append(doc)

    rows: List[CorpusStatsRow] = []
    for split in sorted(by_split, key=_split_key):
        group = by_split[split]
        for tag in SubsetTag:
            subset_docs = [doc for doc in group if doc.subset_tag == tag]
            if tag == SubsetTag.OTHER and not subset_docs:
                continue
            docs, entities, tokens = _count(subset_docs)
            rows.append(CorpusStatsRow(split=split, subset=tag.value, docs=docs, entities=entities, tokens=tokens))
        docs, entities, tokens = _count(group)
        rows.append(CorpusStatsRow(split=split, subset=TOTAL, docs=docs, entities=entities, tokens=tokens))

    docs, entities, tokens = _count(documents)
    rows.append(CorpusStatsRow(split=ALL_SPLITS, subset=TOTAL, docs=docs, entities=entities, tokens=tokens))
    return CorpusStats(rows=rows)


def _fmt(value: Optional[float], digits: int = 4) -> str:
    return "-" if value is None else f"{value:.{digits}f}"


def _percent(value: Optional[float]) -> str:
    return "-" if value is None else f"{value * 100:.2f}%"


def stats_table(stats: CorpusStats) -> Table:
    """統計の rich テーブル"""
    table = Table(title="Corpus statistics", caption=stats.note)
    for column in ("split", "subset", "doc", "ent", "tok"):
        table.add_column(column, justify="right" if column in ("doc", "ent", "tok") else "left")
    for row in stats.rows:
        table.add_row(row.split, row.subset, f"{row.docs:,}", f"{row.entities:,}", f"{row.tokens:,}")
    return table


def report_table(report: OrderReport) -> Table:
    """評価レポートのサブセット別サマリーを rich テーブルに"""
    table = Table(title=f"{report.strategy} ({report.aggregation})")
    for column in ("subset", "docs", "evaluated", "undefined", "tau", "rho", "missing rate"):
        table.add_column(column, justify="left" if column == "subset" else "right")
    for summary in [*report.subsets, report.overall]:
        table.add_row(
            summary.subset,
            str(summary.documents),
            str(summary.evaluated),
            str(summary.undefined),
            _fmt(summary.tau),
            _fmt(summary.rho),
            _percent(summary.missing_rate),
        )
    return table
