"""
評価ルーター

順位相関と ANLS の API エンドポイント
"""

from fastapi import APIRouter

from core import validate_sequence
from dependencies import InvalidDocumentException, require_valid_document
from metrics import anls, missing_rate, rank_correlation
from schemas import AnlsRequest, AnlsScore, EvalOrderRequest, EvalOrderResponse

router = APIRouter(prefix="/eval", tags=["評価"])


@router.post("/order", response_model=EvalOrderResponse, summary="読み順評価")
def evaluate_order(request: EvalOrderRequest):
    """
    予測順序と gold 順序の Kendall τ / Spearman ρ と欠損率

    両方で序数を持つボックスが 2 未満の場合、τ と ρ は null
    """
    document = require_valid_document(request.document)
    for seq in (request.pred, request.gold):
        violations = validate_sequence(seq, document)
        if violations:
            raise InvalidDocumentException(violations)

    return EvalOrderResponse(
        correlation=rank_correlation(request.pred, request.gold),
        pred_missing_rate=missing_rate(request.pred, document),
        gold_missing_rate=missing_rate(request.gold, document),
    )


@router.post("/anls", response_model=AnlsScore, summary="ANLS 計算")
def evaluate_anls(request: AnlsRequest):
    """正解候補のうち最も近いものとの正規化 Levenshtein 類似度"""
    return anls(request.pred, request.golds, request.threshold)
