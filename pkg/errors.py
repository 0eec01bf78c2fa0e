"""
例外定義

読み順エンジン全体で共通して使用する例外クラス
"""

from typing import List, Optional


class ReadingOrderError(Exception):
    """読み順エンジンの基底例外"""


class InvalidSequenceError(ReadingOrderError):
    """ReadingSequence が連続した順列になっていない"""


class TrajectoryError(ReadingOrderError):
    """視線軌跡が不正（タイムスタンプの逆行、点数不足など）"""


class EmptyInputError(ReadingOrderError):
    """空の入力が許されない操作に空の入力が渡された"""


class DimensionMismatchError(ReadingOrderError):
    """比較モデルの重み次元と特徴量次元が一致しない"""


class SchemaError(ReadingOrderError):
    """入力ファイルのスキーマ違反"""

    def __init__(self, path: str, field: str, message: str):
        self.path = path
        self.field = field
        super().__init__(f"{path}: {field}: {message}")


class DocumentValidationError(ReadingOrderError):
    """ドキュメントの不変条件違反（validate_document の結果を保持）"""

    def __init__(self, path: str, violations: List["object"]):
        self.path = path
        self.violations = violations
        summary = "; ".join(f"{v.box_id}: {v.rule}" for v in violations[:5])
        super().__init__(f"{path}: {len(violations)} violation(s): {summary}")


class UnknownStrategyError(ReadingOrderError):
    """未知の並べ替え戦略名"""


class MissingModelError(ReadingOrderError):
    """モデル戦略に必要な比較モデルが指定されていない"""


class ComparatorError(ReadingOrderError):
    """比較器の呼び出し失敗"""


class ComparatorSpawnError(ComparatorError):
    """外部比較器プロセスの起動に失敗"""


class ProtocolViolationError(ComparatorError):
    """外部比較器がプロトコルに違反する応答を返した"""


class ComparatorTimeoutError(ComparatorError):
    """外部比較器の応答がタイムアウトした"""


class PreorderAbortedError(ReadingOrderError):
    """比較器の失敗によりプレオーダーが中断された（途中までのトレースを保持）"""

    def __init__(self, message: str, trace: Optional["object"] = None):
        self.trace = trace
        super().__init__(message)
