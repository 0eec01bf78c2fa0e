"""
プレオーダーと戦略振り分けのテスト

テスト対象:
- preorder（二重ループの隣接入れ替え、キャッシュ、早期終了、マージソート）
- order_with_strategy / resolve_comparator
"""

import itertools
import random
from typing import Dict, List, Tuple

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from comparator import ConstantComparator, OracleComparator
from core import as_permutation
from errors import (
    ComparatorError,
    DocumentValidationError,
    MissingModelError,
    PreorderAbortedError,
    UnknownStrategyError,
)
from preorder import STRATEGIES, StrategyConfig, order_with_strategy, preorder, resolve_comparator
from schemas import PairScore, ReadingSequence
from tests.conftest import make_box, make_doc


class TableComparator:
    """(left_id, right_id) → p の表で答える比較器（非推移的でもよい）"""

    antisymmetric = False

    def __init__(self, table: Dict[Tuple[str, str], float]):
        self.table = table
        self.calls = 0

    def score(self, left, right, page_dims):
        self.calls += 1
        return PairScore(p=self.table[(left.box_id, right.box_id)])


class FailingComparator:
    """指定回数目の呼び出しで失敗する比較器"""

    antisymmetric = False

    def __init__(self, fail_at: int):
        self.fail_at = fail_at
        self.calls = 0

    def score(self, left, right, page_dims):
        self.calls += 1
        if self.calls == self.fail_at:
            raise ComparatorError("boom")
        return PairScore(p=0.0)


def doc_of(n: int):
    return make_doc([make_box(f"b{i}", i, 0, i + 1, 1) for i in range(n)])


def random_table(ids: List[str], rng: random.Random) -> Dict[Tuple[str, str], float]:
    return {(a, b): rng.choice([0.0, 0.2, 0.5, 0.8, 1.0]) for a in ids for b in ids if a != b}


def reference_bubble(ids: List[str], table: Dict[Tuple[str, str], float]) -> List[str]:
    """素朴な二重ループによる参照実装"""
    r = list(ids)
    for i in range(len(r) - 1):
        for j in range(len(r) - 1 - i):
            if table[(r[j], r[j + 1])] < 0.5:
                r[j], r[j + 1] = r[j + 1], r[j]
    return r


class TestPreorder:
    """preorder のテストクラス"""

    def test_example_from_gold(self):
        """[a,b,c] と gold {c:0,a:1,b:2} から [c,a,b] になること"""
        doc = make_doc([make_box("a", 0, 0, 1, 1), make_box("b", 2, 0, 3, 1), make_box("c", 4, 0, 5, 1)])
        oracle = OracleComparator(ReadingSequence(order={"c": 0, "a": 1, "b": 2}))
        seq, trace = preorder(["a", "b", "c"], doc, oracle)
        assert as_permutation(seq) == ["c", "a", "b"]
        assert trace.comparator_calls == 3
        assert trace.swaps == 2

    @pytest.mark.parametrize("n", range(0, 7))
    def test_matches_reference_exhaustively(self, n):
        """n ≤ 6 のすべての初期順で参照実装と一致すること（非推移的な比較器を含む）"""
        rng = random.Random(n)
        doc = doc_of(n)
        ids = doc.box_ids
        for _ in range(3):
            table = random_table(ids, rng)
            for start in itertools.permutations(ids):
                seq, _ = preorder(list(start), doc, TableComparator(table))
                assert as_permutation(seq) == reference_bubble(list(start), table)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(7, 50), st.integers(0, 10_000))
    def test_matches_reference_on_random_inputs(self, n, seed):
        """大きめの入力でも参照実装と一致すること"""
        rng = random.Random(seed)
        doc = doc_of(n)
        ids = doc.box_ids
        rng.shuffle(ids)
        table = random_table(ids, rng)
        seq, _ = preorder(ids, doc, TableComparator(table))
        assert as_permutation(seq) == reference_bubble(ids, table)

    def test_oracle_order_on_random_permutations(self):
        """1,000 件のランダムな初期順で比較器の全順序がそのまま再現されること"""
        rng = random.Random(2024)
        for _ in range(1000):
            n = rng.randint(2, 50)
            doc = doc_of(n)
            target = list(doc.box_ids)
            rng.shuffle(target)
            start = list(doc.box_ids)
            rng.shuffle(start)
            oracle = OracleComparator(ReadingSequence(order={box_id: i for i, box_id in enumerate(target)}))
            seq, _ = preorder(start, doc, oracle)
            assert as_permutation(seq) == target

    @pytest.mark.parametrize("n", range(2, 31))
    def test_call_count(self, n):
        """キャッシュと早期終了なしでは比較器の呼び出しがちょうど l(l-1)/2 回"""
        comparator = ConstantComparator(0.3)
        _, trace = preorder(doc_of(n).box_ids, doc_of(n), comparator)
        assert trace.comparator_calls == n * (n - 1) // 2

    def test_constant_one_keeps_order(self):
        """常に p = 1 なら入れ替えは起きないこと"""
        doc = doc_of(8)
        start = list(reversed(doc.box_ids))
        seq, trace = preorder(start, doc, ConstantComparator(1.0))
        assert as_permutation(seq) == start
        assert trace.swaps == 0

    def test_half_does_not_swap(self):
        """p = 0.5 ちょうどでは入れ替えないこと"""
        doc = doc_of(4)
        seq, _ = preorder(doc.box_ids, doc, ConstantComparator(0.5))
        assert as_permutation(seq) == doc.box_ids

    def test_empty_and_single(self):
        """空と 1 件は比較なしでそのまま"""
        assert preorder([], doc_of(0), ConstantComparator(0.0))[0].order == {}
        seq, trace = preorder(["b0"], doc_of(1), ConstantComparator(0.0))
        assert seq.order == {"b0": 0}
        assert trace.comparator_calls == 0

    def test_early_exit(self):
        """既に並んでいれば 1 パスで打ち切ること"""
        doc = doc_of(10)
        oracle = OracleComparator(ReadingSequence(order={box_id: i for i, box_id in enumerate(doc.box_ids)}))
        seq, trace = preorder(doc.box_ids, doc, oracle, early_exit=True, record_passes=True)
        assert as_permutation(seq) == doc.box_ids
        assert trace.comparator_calls == 9
        assert trace.passes == [[]]

    def test_cache_reuses_scores(self):
        """キャッシュ有効時は同じペアへの問い合わせが 1 回にまとまること"""
        doc = doc_of(6)
        gold = ReadingSequence(order={box_id: i for i, box_id in enumerate(doc.box_ids)})
        plain, plain_trace = preorder(doc.box_ids, doc, OracleComparator(gold))
        cached, cached_trace = preorder(doc.box_ids, doc, OracleComparator(gold), cache=True)
        assert plain == cached
        assert cached_trace.comparator_calls < plain_trace.comparator_calls
        assert cached_trace.comparator_calls == 5

    def test_record_passes(self):
        """パスごとのスワップ位置が記録されること"""
        doc = make_doc([make_box("a", 0, 0, 1, 1), make_box("b", 2, 0, 3, 1), make_box("c", 4, 0, 5, 1)])
        oracle = OracleComparator(ReadingSequence(order={"c": 0, "a": 1, "b": 2}))
        _, trace = preorder(["a", "b", "c"], doc, oracle, record_passes=True)
        assert trace.passes == [[1], [0]]

    def test_merge_sort_agrees_with_bubble_on_total_order(self):
        """推移的な比較器ではマージソートもバブルソートと同じ結果"""
        doc = doc_of(20)
        ids = list(doc.box_ids)
        random.Random(4).shuffle(ids)
        gold = ReadingSequence(order={box_id: i for i, box_id in enumerate(doc.box_ids)})
        bubble, bubble_trace = preorder(ids, doc, OracleComparator(gold))
        merged, merge_trace = preorder(ids, doc, OracleComparator(gold), merge=True)
        assert bubble == merged
        assert merge_trace.comparator_calls < bubble_trace.comparator_calls

    def test_ids_outside_document(self):
        """ドキュメントにない box_id や重複は比較前に DocumentValidationError"""
        doc = doc_of(3)
        comparator = ConstantComparator(0.0)
        with pytest.raises(DocumentValidationError) as excinfo:
            preorder(["b0", "zz", "b1"], doc, comparator, cache=True)
        assert [(v.box_id, v.rule) for v in excinfo.value.violations] == [("zz", "unknown_box_id")]

        with pytest.raises(DocumentValidationError) as excinfo:
            preorder(["b0", "b1", "b0"], doc, comparator)
        assert [(v.box_id, v.rule) for v in excinfo.value.violations] == [("b0", "duplicate_box_id")]

    def test_comparator_failure_aborts_with_trace(self):
        """比較器が失敗すると PreorderAbortedError（途中までのトレース付き）"""
        doc = doc_of(5)
        with pytest.raises(PreorderAbortedError) as excinfo:
            preorder(doc.box_ids, doc, FailingComparator(fail_at=4))
        assert excinfo.value.trace.comparator_calls == 4


class TestStrategies:
    """order_with_strategy のテストクラス"""

    def test_rule_strategies(self, separated_rows_doc):
        """ルールベース戦略はトレースなしで順序を返すこと"""
        for strategy in ("default-ocr", "z-order", "xy-order"):
            seq, trace = order_with_strategy(separated_rows_doc, strategy)
            assert trace is None
            assert sorted(seq.order.values()) == list(range(6))
        seq, _ = order_with_strategy(separated_rows_doc, "z-order")
        assert as_permutation(seq)[:3] == ["r0c0", "r0c1", "r0c2"]

    def test_model_strategy_with_comparator(self, three_box_doc):
        """model 戦略は与えた比較器でプレオーダーすること"""
        oracle = OracleComparator(ReadingSequence(order={"c": 0, "b": 1, "a": 2}))
        seq, trace = order_with_strategy(three_box_doc, "model", StrategyConfig(comparator=oracle))
        assert as_permutation(seq) == ["c", "b", "a"]
        assert trace.comparator_calls == 3

    def test_model_strategy_without_model(self, three_box_doc):
        """比較モデルがなければ MissingModelError"""
        with pytest.raises(MissingModelError):
            order_with_strategy(three_box_doc, "model")
        with pytest.raises(MissingModelError):
            resolve_comparator(StrategyConfig(model_path="/nonexistent/model.json"))

    def test_unknown_strategy(self, three_box_doc):
        """未知の戦略名は UnknownStrategyError"""
        with pytest.raises(UnknownStrategyError):
            order_with_strategy(three_box_doc, "magic")
        assert "magic" not in STRATEGIES

    def test_external_model_strategy(self, separated_rows_doc, stub_command):
        """external-model 戦略でスタブ比較器（左にあるほど先）を使えること"""
        command = " ".join(stub_command("left-of"))
        seq, trace = order_with_strategy(
            separated_rows_doc, "external-model", StrategyConfig(external_command=command),
        )
        assert [box_id[-2:] for box_id in as_permutation(seq)] == ["c0", "c0", "c1", "c1", "c2", "c2"]
        assert trace.comparator_calls == 15
