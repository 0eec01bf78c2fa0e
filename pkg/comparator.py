"""
ペアワイズ比較器

f(b_i : b_j) → p（左ボックスが右ボックスより先に読まれる確率）の契約と、
特徴量ベースのロジスティック比較モデル、その学習手順
"""

import logging
import zlib
from pathlib import Path
from typing import List, Optional, Protocol, Sequence, Tuple

import numpy as np

from core import as_permutation, centroid
from errors import DimensionMismatchError, EmptyInputError
from schemas import (
    MISSING,
    BoundingBox,
    ComparatorModel,
    Document,
    PairScore,
    ReadingSequence,
    Regime,
    TrainingParams,
)

logger = logging.getLogger(__name__)

PageDims = Tuple[float, float]
LabeledPair = Tuple[BoundingBox, BoundingBox, int]

GEOMETRY_DIM = 10
NGRAM_SIZES = (1, 2, 3)
MAX_TOKENS = 50


class PairwiseComparator(Protocol):
    """
    比較器の共通インターフェース

    antisymmetric が True の比較器は score(A,B).p + score(B,A).p = 1 を保証する
    （プレオーダーのキャッシュで逆向きのペアを補完してよい）
    """
    antisymmetric: bool

    def score(self, left: BoundingBox, right: BoundingBox, page_dims: PageDims) -> PairScore:
        ...


# ===== 特徴量 =====

def geometry_features(left: BoundingBox, right: BoundingBox, page_dims: PageDims) -> np.ndarray:
    """正規化重心、その差分、正規化した幅と高さ（10 次元）"""
    width, height = page_dims
    cl, cr = centroid(left), centroid(right)
    xi, yi = cl.x / width, cl.y / height
    xj, yj = cr.x / width, cr.y / height
    return np.array([
        xi, yi, xj, yj,
        xj - xi, yj - yi,
        left.width / width, left.height / height,
        right.width / width, right.height / height,
    ], dtype=float)


def hashed_ngrams(text: str, width: int) -> np.ndarray:
    """
    文字 n-gram（n = 1..3）の出現数を固定幅にハッシュ（CRC32）して log1p を取る

    CRC32 は実行ごとに変わらないため、モデルを別プロセスに持ち出しても同じ特徴量になる。
    """
    counts = np.zeros(width, dtype=float)
    normalized = text.lower()
    for n in NGRAM_SIZES:
        for i in range(len(normalized) - n + 1):
            gram = normalized[i:i + n]
            counts[zlib.crc32(f"{n}:{gram}".encode("utf-8")) % width] += 1
    return np.log1p(counts)


def text_scalars(text: str) -> np.ndarray:
    """トークン数（上限で正規化）と数字の割合"""
    tokens = len(text.split())
    digits = sum(ch.isdigit() for ch in text)
    return np.array([
        min(tokens, MAX_TOKENS) / MAX_TOKENS,
        digits / len(text) if text else 0.0,
    ], dtype=float)


def text_features(left: BoundingBox, right: BoundingBox, width: int) -> np.ndarray:
    return np.concatenate([
        hashed_ngrams(left.text, width),
        hashed_ngrams(right.text, width),
        text_scalars(left.text),
        text_scalars(right.text),
    ])


def feature_dim(regime: Regime, hash_width: int) -> int:
    """レジームごとの特徴量次元"""
    text_dim = 2 * hash_width + 4
    if regime == Regime.BOX:
        return GEOMETRY_DIM
    if regime == Regime.TEXT:
        return text_dim
    return GEOMETRY_DIM + text_dim


def pair_features(
    left: BoundingBox,
    right: BoundingBox,
    page_dims: PageDims,
    regime: Regime,
    hash_width: int,
) -> np.ndarray:
    """レジームに応じた特徴量ベクトル"""
    if regime == Regime.BOX:
        return geometry_features(left, right, page_dims)
    if regime == Regime.TEXT:
        return text_features(left, right, hash_width)
    return np.concatenate([geometry_features(left, right, page_dims), text_features(left, right, hash_width)])


# ===== スコアリング =====

def _sigmoid(z):
    return np.exp(-np.logaddexp(0.0, -z))


def _canonical_key(box: BoundingBox):
    return box.box_id, box.x_up, box.y_up, box.x_down, box.y_down, box.text


def score(
    model: ComparatorModel,
    left: BoundingBox,
    right: BoundingBox,
    page_dims: PageDims,
) -> PairScore:
    """
    左ボックスが先に読まれる確率 p を計算

    正準な向き（box_id の小さい方が左）の確率だけを直接計算し、逆向きは 1 - p とする。
    直接計算する側を 0.5 以上に取ることで score(A,B).p + score(B,A).p = 1 が
    浮動小数点でも厳密に成り立つ。

    Raises:
        DimensionMismatchError: 重みの次元がレジームの特徴量次元と一致しない場合
    """
    expected = feature_dim(model.regime, model.hash_width)
    if len(model.weights) != expected:
        raise DimensionMismatchError(
            f"model has {len(model.weights)} weights, regime {model.regime.value} needs {expected}"
        )
    if left == right:
        return PairScore(p=0.5)

    swapped = _canonical_key(right) < _canonical_key(left)
    first, second = (right, left) if swapped else (left, right)
    features = pair_features(first, second, page_dims, model.regime, model.hash_width)
    z = float(np.dot(np.asarray(model.weights), features) + model.bias)

    q = float(_sigmoid(abs(z)))
    p_first = q if z >= 0 else 1.0 - q
    return PairScore(p=1.0 - p_first if swapped else p_first)


class NativeComparator:
    """ロジスティック比較モデルによる比較器"""

    antisymmetric = True

    def __init__(self, model: ComparatorModel):
        self.model = model

    def score(self, left: BoundingBox, right: BoundingBox, page_dims: PageDims) -> PairScore:
        return score(self.model, left, right, page_dims)


class OracleComparator:
    """既知の全順序から誘導される比較器（p は 0, 0.5, 1 のいずれか）"""

    antisymmetric = True

    def __init__(self, gold: ReadingSequence):
        self.gold = gold

    def score(self, left: BoundingBox, right: BoundingBox, page_dims: PageDims) -> PairScore:
        rl = self.gold.order.get(left.box_id, MISSING)
        rr = self.gold.order.get(right.box_id, MISSING)
        if rl == MISSING or rr == MISSING or rl == rr:
            return PairScore(p=0.5)
        return PairScore(p=1.0 if rl < rr else 0.0)


class ConstantComparator:
    """常に同じ確率を返す比較器"""

    antisymmetric = False

    def __init__(self, p: float):
        self.p = PairScore(p=p)

    def score(self, left: BoundingBox, right: BoundingBox, page_dims: PageDims) -> PairScore:
        return self.p


class ZOrderRuleComparator:
    """
    幾何ルールの比較器

    重心の y 差が閾値未満なら左にある方が先、それ以外は上にある方が先
    """

    antisymmetric = True

    def __init__(self, y_threshold: float = 0.0):
        self.y_threshold = y_threshold

    def score(self, left: BoundingBox, right: BoundingBox, page_dims: PageDims) -> PairScore:
        cl, cr = centroid(left), centroid(right)
        if abs(cl.y - cr.y) < self.y_threshold or cl.y == cr.y:
            if cl.x == cr.x:
                return PairScore(p=0.5)
            return PairScore(p=1.0 if cl.x < cr.x else 0.0)
        return PairScore(p=1.0 if cl.y < cr.y else 0.0)


# ===== 学習 =====

def make_pairs(
    doc: Document,
    gold: ReadingSequence,
    window: Optional[int] = None,
) -> List[LabeledPair]:
    """
    gold 順序からラベルつきペアを作成

    順序付きボックスの全ペアを両方向で出力し、左が先なら 1、後なら 0。
    window を指定すると序数の差が window 以下のペアに限定する。

    Raises:
        EmptyInputError: 順序付きボックスが 2 未満の場合
    """
    box_map = doc.box_map()
    ordered = [box_id for box_id in as_permutation(gold) if box_id in box_map]
    if len(ordered) < 2:
        raise EmptyInputError(f"{doc.doc_id}: gold has fewer than 2 ordered boxes")

    pairs: List[LabeledPair] = []
    for i in range(len(ordered)):
        for j in range(i + 1, len(ordered)):
            if window is not None and j - i > window:
                break
            a, b = box_map[ordered[i]], box_map[ordered[j]]
            pairs.append((a, b, 1))
            pairs.append((b, a, 0))
    return pairs


def logistic_loss(params: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float = 0.0) -> float:
    """平均ロジスティック損失（params の末尾がバイアス）"""
    w, b = params[:-1], params[-1]
    z = X @ w + b
    return float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * np.dot(w, w))


def logistic_gradient(params: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float = 0.0) -> np.ndarray:
    """logistic_loss の勾配"""
    w, b = params[:-1], params[-1]
    residual = _sigmoid(X @ w + b) - y
    grad_w = X.T @ residual / len(y) + l2 * w
    grad_b = np.mean(residual)
    return np.append(grad_w, grad_b)


def _design_matrix(
    corpus: Sequence[Tuple[Document, ReadingSequence]],
    regime: Regime,
    params: TrainingParams,
) -> Tuple[np.ndarray, np.ndarray]:
    rows, labels = [], []
    for doc, gold in corpus:
        page_dims = (doc.page_width, doc.page_height)
        for left, right, label in make_pairs(doc, gold, params.window):
            rows.append(pair_features(left, right, page_dims, regime, params.hash_width))
            labels.append(label)
    return np.array(rows, dtype=float), np.array(labels, dtype=float)


def pair_accuracy(
    model: ComparatorModel,
    corpus: Sequence[Tuple[Document, ReadingSequence]],
    window: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> Optional[float]:
    """
    ペア単位の正解率（p > 0.5 を「左が先」と予測）

    rng を渡すとラベルを並べ替えてから比較する（ラベル並べ替えの対照実験用）
    """
    predictions, labels = [], []
    for doc, gold in corpus:
        page_dims = (doc.page_width, doc.page_height)
        for left, right, label in make_pairs(doc, gold, window):
            predictions.append(1 if score(model, left, right, page_dims).p > 0.5 else 0)
            labels.append(label)
    if not labels:
        return None
    expected = np.array(labels)
    if rng is not None:
        expected = rng.permutation(expected)
    return float(np.mean(np.array(predictions) == expected))


def _ordered_count(gold: ReadingSequence) -> int:
    return sum(1 for v in gold.order.values() if v != MISSING)


def train(
    corpus: Sequence[Tuple[Document, ReadingSequence]],
    regime: Regime = Regime.BOX,
    params: TrainingParams = TrainingParams(),
) -> ComparatorModel:
    """
    ロジスティック比較モデルを SGD で学習

    ドキュメント単位でホールドアウトを分け、学習後の損失とホールドアウトのペア正解率を記録する。
    同じコーパス・シード・ハイパーパラメータからは同一の重みが得られる。

    Raises:
        EmptyInputError: コーパスが空、または全ドキュメントの順序付きボックスが 2 未満の場合
    """
    if not corpus:
        raise EmptyInputError("training corpus is empty")
    usable = [(doc, gold) for doc, gold in corpus if _ordered_count(gold) >= 2]
    if not usable:
        raise EmptyInputError("no document in the corpus has 2 or more ordered boxes")

    rng = np.random.default_rng(params.seed)
    permutation = rng.permutation(len(usable))
    n_holdout = min(int(len(usable) * params.holdout_fraction), len(usable) - 1)
    holdout = [usable[k] for k in permutation[:n_holdout]]
    training = [usable[k] for k in permutation[n_holdout:]]

    X, y = _design_matrix(training, regime, params)
    if params.shuffle_labels:
        y = rng.permutation(y)
    weights = np.zeros(X.shape[1] + 1)
    batch_size = params.batch_size if params.batch_size is not None else len(y)

    history: List[float] = []
    for epoch in range(params.epochs):
        if batch_size >= len(y):
            weights -= params.learning_rate * logistic_gradient(weights, X, y, params.l2)
        else:
            order = rng.permutation(len(y))
            for start in range(0, len(y), batch_size):
                batch = order[start:start + batch_size]
                weights -= params.learning_rate * logistic_gradient(weights, X[batch], y[batch], params.l2)
        history.append(logistic_loss(weights, X, y, params.l2))
        logger.debug("epoch %d loss %.6f", epoch + 1, history[-1])

    model = ComparatorModel(
        regime=regime,
        weights=weights[:-1].tolist(),
        bias=float(weights[-1]),
        hash_width=params.hash_width,
        epochs=params.epochs,
        learning_rate=params.learning_rate,
        seed=params.seed,
        final_loss=history[-1],
        loss_history=history,
    )
    heldout = None
    if holdout:
        heldout = pair_accuracy(model, holdout, params.window, rng if params.shuffle_labels else None)
    logger.info(
        "trained %s comparator on %d docs (%d pairs): loss %.4f, held-out accuracy %s",
        regime.value, len(training), len(y), history[-1],
        f"{heldout:.4f}" if heldout is not None else "n/a",
    )
    return model.model_copy(update={"heldout_accuracy": heldout})


def save_model(model: ComparatorModel, path: Path) -> None:
    """比較モデルを JSON で保存"""
    path.write_text(model.model_dump_json(indent=2), encoding="utf-8")


def load_model(path: Path) -> ComparatorModel:
    """比較モデルを JSON から読み込み"""
    return ComparatorModel.model_validate_json(Path(path).read_text(encoding="utf-8"))
