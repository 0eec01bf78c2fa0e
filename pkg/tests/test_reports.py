"""
コーパス統計とレポート表示のテスト
"""

from rich.console import Console

from metrics import EvaluationItem, evaluate_corpus
from reports import corpus_stats, report_table, stats_table
from schemas import SubsetTag, SynthSpec
from synth import synth_corpus
from tests.conftest import make_box, make_doc


def rows_by_key(stats):
    return {(row.split, row.subset): row for row in stats.rows}


class TestCorpusStats:
    """corpus_stats のテストクラス"""

    def test_empty_corpus(self):
        """空のコーパスは全体の合計行のみ（すべて 0）"""
        stats = corpus_stats([])
        assert len(stats.rows) == 1
        total = stats.rows[0]
        assert (total.split, total.subset, total.docs, total.entities, total.tokens) == ("all", "total", 0, 0, 0)

    def test_two_synthetic_documents(self):
        """12 ボックスの合成ドキュメント 2 件で doc = 2, ent = 24"""
        docs = [data.document for data in synth_corpus(SynthSpec(rows=3, cols=4, split="train"), 2)]
        rows = rows_by_key(corpus_stats(docs))
        assert rows[("train", "weak")].docs == 2
        assert rows[("train", "weak")].entities == 24
        assert rows[("train", "structured")].docs == 0
        assert rows[("all", "total")].entities == 24
        assert ("train", "other") not in rows

    def test_tokens_and_split_order(self):
        """トークンは空白区切りで数え、分割は train, dev, test, その他の順"""
        docs = [
            make_doc([make_box("a", 0, 0, 1, 1, "two words")], doc_id="t", split="test", subset=SubsetTag.WEAK),
            make_doc([make_box("a", 0, 0, 1, 1, "one")], doc_id="r", split="train", subset=SubsetTag.OTHER),
            make_doc([make_box("a", 0, 0, 1, 1, "")], doc_id="u"),
        ]
        stats = corpus_stats(docs)
        splits = []
        for row in stats.rows:
            if row.split not in splits:
                splits.append(row.split)
        assert splits == ["train", "test", "-", "all"]
        rows = rows_by_key(stats)
        assert rows[("test", "weak")].tokens == 2
        assert rows[("train", "other")].docs == 1
        assert rows[("all", "total")].tokens == 3


def test_tables_render():
    """rich テーブルとして描画できること"""
    docs = synth_corpus(SynthSpec(rows=2, cols=2), 2)
    report = evaluate_corpus([EvaluationItem(d.document, d.gold, d.gold) for d in docs], strategy="oracle")
    console = Console(record=True, width=120)
    console.print(stats_table(corpus_stats([d.document for d in docs])))
    console.print(report_table(report))
    text = console.export_text()
    assert "Corpus statistics" in text
    assert "oracle (macro)" in text
    assert "1.0000" in text
