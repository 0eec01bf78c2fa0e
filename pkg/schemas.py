"""
データ契約定義 - Single Source of Truth

読み順エンジンのすべてのモジュール、CLI、HTTP API が共有する
データ構造を定義する唯一の信頼できる情報源です。

編集時のルール:
1. 座標系は左上原点・y 下向き（OCR エンジンと同じ）で統一する
2. 序数は内部では 0 始まり、欠損は MISSING (-1)
3. ドメイン型はすべて不変（frozen）にする
"""

from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from config import EngineConfig

# 視線が一度も当たらなかったボックスの序数
MISSING = -1


# ===== 列挙型 =====

class SubsetTag(str, Enum):
    """ドキュメントのサブセット区分"""
    WEAK = "weak"
    STRUCTURED = "structured"
    INFOGRAPH = "infograph"
    OTHER = "other"


class ReadingPattern(str, Enum):
    """
    視線走査パターン

    - NORMAL_Z: Z 字型の通常読み
    - LOCAL_PRIORITY: 表のセル内容を優先する読み
    - CROSS_MODAL: グラフとラベルを往復する放射状の読み
    - VISUAL_INSTRUCTION: フローチャートでの後戻りの多い読み
    """
    NORMAL_Z = "normal_z"
    LOCAL_PRIORITY = "local_priority"
    CROSS_MODAL = "cross_modal"
    VISUAL_INSTRUCTION = "visual_instruction"


class Regime(str, Enum):
    """比較モデルの特徴量レジーム"""
    BOX = "box"
    TEXT = "text"
    TEXT_BOX = "text_box"


# ===== コアモデル =====

class BoundingBox(BaseModel):
    """OCR が検出した矩形とそのテキスト（並べ替えの最小単位）"""
    model_config = ConfigDict(frozen=True)

    box_id: str
    x_up: float
    y_up: float
    x_down: float
    y_down: float
    text: str = ""

    @property
    def width(self) -> float:
        return self.x_down - self.x_up

    @property
    def height(self) -> float:
        return self.y_down - self.y_up

    @property
    def area(self) -> float:
        return self.width * self.height


class Centroid(BaseModel):
    """ボックスの重心"""
    model_config = ConfigDict(frozen=True)

    x: float
    y: float


class QAPair(BaseModel):
    """質問と正解候補"""
    model_config = ConfigDict(frozen=True)

    question: str
    answers: Tuple[str, ...]


class Document(BaseModel):
    """
    1 ページ分のドキュメント

    boxes の並びが OCR の出力順（index 0 が最初に出力されたボックス）
    """
    model_config = ConfigDict(frozen=True)

    doc_id: str
    page_width: float
    page_height: float
    boxes: Tuple[BoundingBox, ...] = ()
    subset_tag: SubsetTag = SubsetTag.OTHER
    qa_pairs: Tuple[QAPair, ...] = ()
    # ページ画像はパスのみ保持する
    image: Optional[str] = None
    split: Optional[str] = None

    @property
    def box_ids(self) -> List[str]:
        return [box.box_id for box in self.boxes]

    def box_map(self) -> Dict[str, BoundingBox]:
        """box_id からボックスへの辞書"""
        return {box.box_id: box for box in self.boxes}


class GazePoint(BaseModel):
    """視線計測の 1 サンプル"""
    model_config = ConfigDict(frozen=True)

    timestamp: float
    x: float
    y: float
    duration: Optional[float] = None
    pupil: Optional[float] = None


class GazeTrajectory(BaseModel):
    """時系列順の視線サンプル列"""
    model_config = ConfigDict(frozen=True)

    doc_id: str = ""
    points: Tuple[GazePoint, ...] = ()


class ReadingSequence(BaseModel):
    """
    box_id → 序数 の対応

    欠損は MISSING (-1)。欠損以外の序数は 0..k-1 の順列であること。
    不変条件の検査は core.as_permutation / core.validate_sequence で行う。
    """
    model_config = ConfigDict(frozen=True)

    order: Dict[str, int]


class Violation(BaseModel):
    """validate_document が返す違反 1 件"""
    model_config = ConfigDict(frozen=True)

    box_id: Optional[str] = None
    rule: str
    detail: str = ""


# ===== 視線処理 =====

class AlignmentConfig(BaseModel):
    """
    視線アラインメント設定

    periphery_radius / repair_reach が None の場合はドキュメントから既定値を算出する
    （ボックス高さ中央値の半分 / その 3 倍）
    """
    model_config = ConfigDict(frozen=True)

    periphery_radius: Optional[float] = Field(None, ge=0)
    dedupe: bool = True
    repair: bool = True
    repair_reach: Optional[float] = Field(None, ge=0)


class RawAssignment(BaseModel):
    """視線サンプルごとの当たり判定結果"""
    model_config = ConfigDict(frozen=True)

    box_ids: Tuple[str, ...]
    # サンプルごとの box_id（外れは None）
    hits: Tuple[Optional[str], ...]
    timestamps: Tuple[float, ...]
    # box_id → そのボックスに当たったサンプル index の列
    visits: Dict[str, Tuple[int, ...]]


class GoldResult(BaseModel):
    """gold_pipeline の出力"""
    model_config = ConfigDict(frozen=True)

    sequence: ReadingSequence
    missing_rate: float = Field(..., ge=0, le=1)


class ScanpathStats(BaseModel):
    """視線走査の記述統計"""
    model_config = ConfigDict(frozen=True)

    # 8 方位（E, NE, N, NW, W, SW, S, SE）のサッカード数
    direction_histogram: Dict[str, int]
    n_saccades: int
    mean_saccade_length: float
    backtrack_rate: float = Field(..., ge=0, le=1)
    revisit_rate: float = Field(..., ge=0, le=1)
    # 再訪問のうち最も多く再訪問されたボックスが占める割合
    hub_share: float = Field(..., ge=0, le=1)
    # 方位ヒストグラムの正規化エントロピー
    direction_entropy: float = Field(..., ge=0, le=1)
    east_share: float = Field(..., ge=0, le=1)


class PatternThresholds(BaseModel):
    """classify_pattern の判定閾値"""
    model_config = ConfigDict(frozen=True)

    backtrack: float = EngineConfig.PATTERN_BACKTRACK
    hub_share: float = EngineConfig.PATTERN_HUB_SHARE
    revisit: float = EngineConfig.PATTERN_REVISIT
    entropy: float = EngineConfig.PATTERN_ENTROPY
    east_share: float = EngineConfig.PATTERN_EAST_SHARE


# ===== ルールベース並べ替え =====

class ZOrderConfig(BaseModel):
    """Z-order 設定（None の場合はボックス高さ中央値の半分）"""
    model_config = ConfigDict(frozen=True)

    y_threshold: Optional[float] = Field(None, ge=0)


# ===== 比較器 =====

class PairScore(BaseModel):
    """左ボックスが右ボックスより先に読まれる確率"""
    model_config = ConfigDict(frozen=True)

    p: float = Field(..., ge=0, le=1)


class TrainingParams(BaseModel):
    """比較モデルの学習ハイパーパラメータ"""
    model_config = ConfigDict(frozen=True)

    epochs: int = Field(200, ge=1)
    learning_rate: float = Field(0.5, gt=0)
    # None の場合はフルバッチ
    batch_size: Optional[int] = Field(64, ge=1)
    l2: float = Field(0.0, ge=0)
    seed: int = 0
    window: Optional[int] = Field(None, ge=1)
    holdout_fraction: float = Field(0.2, ge=0, lt=1)
    hash_width: int = Field(EngineConfig.HASH_WIDTH, ge=1)
    # 学習ラベルを乱数で並べ替える対照実験用
    shuffle_labels: bool = False


class ComparatorModel(BaseModel):
    """ロジスティック比較モデル"""
    model_config = ConfigDict(frozen=True)

    regime: Regime
    weights: List[float]
    bias: float = 0.0
    hash_width: int = EngineConfig.HASH_WIDTH
    # 学習メタデータ
    epochs: int = 0
    learning_rate: float = 0.0
    seed: int = 0
    final_loss: Optional[float] = None
    heldout_accuracy: Optional[float] = None
    loss_history: List[float] = []


class PreorderTrace(BaseModel):
    """プレオーダーの実行記録"""
    comparator_calls: int = 0
    swaps: int = 0
    # パスごとのスワップ位置（record_passes 指定時のみ）
    passes: List[List[int]] = []


# ===== 評価 =====

class RankCorrelation(BaseModel):
    """順位相関（n_common < 2 の場合 tau / rho は None）"""
    model_config = ConfigDict(frozen=True)

    tau: Optional[float] = None
    rho: Optional[float] = None
    n_common: int = 0

    @property
    def defined(self) -> bool:
        return self.n_common >= 2


class AnlsScore(BaseModel):
    """ANLS スコア"""
    model_config = ConfigDict(frozen=True)

    value: float = Field(..., ge=0, le=1)
    threshold: float = 0.5


class DocumentEvaluation(BaseModel):
    """評価レポートの 1 行"""
    doc_id: str
    subset: str
    strategy: str
    tau: Optional[float] = None
    rho: Optional[float] = None
    n_common: int = 0
    # gold の欠損率
    missing_rate: Optional[float] = None
    pred_missing_rate: Optional[float] = None
    # 外部で算出した下流タスクの数値（任意）
    ser_precision: Optional[float] = None
    ser_recall: Optional[float] = None
    ser_f1: Optional[float] = None
    anls: Optional[float] = None


class SubsetSummary(BaseModel):
    """サブセット単位の集計"""
    subset: str
    documents: int = 0
    evaluated: int = 0
    undefined: int = 0
    tau: Optional[float] = None
    rho: Optional[float] = None
    missing_rate: Optional[float] = None


class OrderReport(BaseModel):
    """コーパス評価レポート"""
    strategy: str
    aggregation: str = "macro"
    rows: List[DocumentEvaluation] = []
    subsets: List[SubsetSummary] = []
    overall: SubsetSummary


# ===== コーパス =====

class SynthSpec(BaseModel):
    """合成ドキュメント生成の指定"""
    model_config = ConfigDict(frozen=True)

    pattern: ReadingPattern = ReadingPattern.NORMAL_Z
    rows: int = Field(3, ge=0)
    cols: int = Field(4, ge=0)
    lines_per_cell: int = Field(3, ge=1)
    jitter_px: float = Field(0.0, ge=0)
    # ボックス配置の y 方向の揺らぎ（一様分布の振れ幅）
    layout_jitter_px: float = Field(0.0, ge=0)
    dropout_rate: float = Field(0.0, ge=0, le=1)
    return_rate: float = Field(0.0, ge=0, le=1)
    seed: int = 0
    page_width: float = Field(1000.0, gt=0)
    page_height: float = Field(1000.0, gt=0)
    doc_id: Optional[str] = None
    split: Optional[str] = None


class SynthResult(BaseModel):
    """合成結果"""
    model_config = ConfigDict(frozen=True)

    document: Document
    gold: ReadingSequence
    trajectory: GazeTrajectory


class CorpusStatsRow(BaseModel):
    """分割・サブセット別の統計 1 行"""
    split: str
    subset: str
    docs: int = 0
    entities: int = 0
    tokens: int = 0


class CorpusStats(BaseModel):
    """コーパス統計"""
    rows: List[CorpusStatsRow] = []
    note: str = "entities = bounding boxes; tokens = whitespace-separated segments of box text"


class RenderStyle(BaseModel):
    """SVG 描画スタイル"""
    model_config = ConfigDict(frozen=True)

    box_color: str = "#1f77b4"
    missing_color: str = "#999999"
    label_color: str = "#d62728"
    arrow_color: str = "#2ca02c"
    font_size: float = Field(14.0, gt=0)
    stroke_width: float = Field(1.5, gt=0)
    show_arrows: bool = True
    show_text: bool = False


# ===== HTTP API =====

class OrderRequest(BaseModel):
    """並べ替えリクエスト"""
    document: Document
    strategy: str = "z-order"
    y_threshold: Optional[float] = Field(None, ge=0)
    cache: bool = False
    early_exit: bool = False
    merge: bool = False


class OrderResponse(BaseModel):
    """並べ替えレスポンス"""
    strategy: str
    sequence: ReadingSequence
    permutation: List[str]
    trace: Optional[PreorderTrace] = None


class GoldRequest(BaseModel):
    """視線から gold 順序を作るリクエスト"""
    document: Document
    trajectory: GazeTrajectory
    config: AlignmentConfig = AlignmentConfig()


class ConsolidateRequest(BaseModel):
    """複数アノテーションの統合リクエスト"""
    annotations: List[ReadingSequence] = Field(..., min_length=1)


class ConsolidateResponse(BaseModel):
    """統合結果"""
    index: int
    sequence: ReadingSequence


class ScanpathRequest(BaseModel):
    """走査統計リクエスト"""
    document: Document
    trajectory: GazeTrajectory


class ScanpathResponse(BaseModel):
    """走査統計とパターン分類"""
    stats: ScanpathStats
    pattern: ReadingPattern


class EvalOrderRequest(BaseModel):
    """順序評価リクエスト"""
    document: Document
    pred: ReadingSequence
    gold: ReadingSequence


class EvalOrderResponse(BaseModel):
    """順序評価レスポンス"""
    correlation: RankCorrelation
    pred_missing_rate: Optional[float] = None
    gold_missing_rate: Optional[float] = None


class AnlsRequest(BaseModel):
    """ANLS リクエスト"""
    pred: str
    golds: List[str] = Field(..., min_length=1)
    threshold: float = Field(0.5, gt=0, le=1)


class RenderRequest(BaseModel):
    """SVG 描画リクエスト"""
    document: Document
    sequence: ReadingSequence
    style: RenderStyle = RenderStyle()
