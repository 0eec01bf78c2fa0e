"""
視線処理ルーター

視線軌跡からの gold 順序作成、アノテーション統合、走査統計
"""

from fastapi import APIRouter

from dependencies import require_valid_document, to_http_exception
from errors import ReadingOrderError
from gaze import classify_pattern, gold_pipeline, scanpath_stats, select_consolidated
from schemas import (
    ConsolidateRequest,
    ConsolidateResponse,
    GoldRequest,
    GoldResult,
    ScanpathRequest,
    ScanpathResponse,
)

router = APIRouter(prefix="/gaze", tags=["視線"])


@router.post("/gold", response_model=GoldResult, summary="gold 順序作成")
def build_gold(request: GoldRequest):
    """
    視線軌跡から gold 読み順を作成

    config.dedupe / config.repair を無効にすると生の視線順になる
    """
    document = require_valid_document(request.document)
    try:
        return gold_pipeline(document, request.trajectory, request.config)
    except ReadingOrderError as e:
        raise to_http_exception(e) from e


@router.post("/consolidate", response_model=ConsolidateResponse, summary="アノテーション統合")
def consolidate_annotations(request: ConsolidateRequest):
    """他のアノテーションとの平均 τ が最大のアノテーションを選ぶ"""
    try:
        index = select_consolidated(request.annotations)
    except ReadingOrderError as e:
        raise to_http_exception(e) from e
    return ConsolidateResponse(index=index, sequence=request.annotations[index])


@router.post("/stats", response_model=ScanpathResponse, summary="走査統計")
def describe_scanpath(request: ScanpathRequest):
    """走査統計と読みパターンの判定"""
    document = require_valid_document(request.document)
    try:
        stats = scanpath_stats(request.trajectory, document)
    except ReadingOrderError as e:
        raise to_http_exception(e) from e
    return ScanpathResponse(stats=stats, pattern=classify_pattern(stats))
