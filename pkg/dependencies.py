"""
依存関数

FastAPI の依存関数（Dependency Injection）と、ドメイン例外を HTTP 例外に変換するヘルパー
"""

import logging
from functools import lru_cache
from pathlib import Path
from typing import List, Optional

from fastapi import HTTPException, status

from comparator import load_model
from config import EngineConfig
from core import validate_document
from errors import (
    ComparatorError,
    MissingModelError,
    PreorderAbortedError,
    ReadingOrderError,
)
from schemas import ComparatorModel, Document, Violation

logger = logging.getLogger(__name__)


# カスタム例外クラス
class InvalidInputException(HTTPException):
    """入力がドメインの不変条件を満たさない場合の例外"""
    def __init__(self, detail: str):
        super().__init__(
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            detail=detail,
        )


class InvalidDocumentException(HTTPException):
    """validate_document の違反をそのまま返す例外"""
    def __init__(self, violations: List[Violation]):
        super().__init__(
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            detail=[violation.model_dump() for violation in violations],
        )


class ModelNotConfiguredException(HTTPException):
    """比較モデルが設定されていない場合の例外"""
    def __init__(self, detail: str = "Comparator model is not configured"):
        super().__init__(
            status_code=status.HTTP_503_SERVICE_UNAVAILABLE,
            detail=detail,
        )


class ComparatorFailureException(HTTPException):
    """外部比較器の失敗"""
    def __init__(self, detail: str):
        super().__init__(
            status_code=status.HTTP_502_BAD_GATEWAY,
            detail=detail,
        )


def to_http_exception(error: ReadingOrderError) -> HTTPException:
    """
    ドメイン例外を HTTP 例外に変換

    - MissingModelError → 503
    - 比較器の失敗（プレオーダー中断を含む） → 502
    - それ以外 → 422
    """
    if isinstance(error, MissingModelError):
        return ModelNotConfiguredException(str(error))
    if isinstance(error, (ComparatorError, PreorderAbortedError)):
        logger.warning("comparator failure: %s", error)
        return ComparatorFailureException(str(error))
    return InvalidInputException(str(error))


def require_valid_document(document: Document) -> Document:
    """
    ドキュメントの不変条件を検査

    Raises:
        InvalidDocumentException: 違反がある場合
    """
    violations = validate_document(document)
    if violations:
        raise InvalidDocumentException(violations)
    return document


@lru_cache(maxsize=1)
def _load_configured_model(path: str) -> ComparatorModel:
    logger.info("loading comparator model from %s", path)
    return load_model(Path(path))


def get_comparator_model() -> Optional[ComparatorModel]:
    """
    設定された比較モデルを取得

    Returns:
        Optional[ComparatorModel]: READING_ORDER_MODEL_PATH が未設定または存在しない場合は None
    """
    path = EngineConfig.MODEL_PATH
    if not path or not Path(path).is_file():
        return None
    return _load_configured_model(path)
