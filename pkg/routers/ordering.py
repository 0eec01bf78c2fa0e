"""
並べ替えルーター

ドキュメントの読み順を生成する API エンドポイント
"""

from typing import List, Optional

from fastapi import APIRouter, Depends

from core import as_permutation
from dependencies import get_comparator_model, require_valid_document, to_http_exception
from errors import ReadingOrderError
from preorder import STRATEGIES, StrategyConfig, order_with_strategy
from schemas import ComparatorModel, OrderRequest, OrderResponse

router = APIRouter(prefix="/order", tags=["並べ替え"])


@router.get("/strategies", response_model=List[str], summary="戦略一覧取得")
def list_strategies():
    """利用できる並べ替え戦略名の一覧"""
    return list(STRATEGIES)


@router.post("", response_model=OrderResponse, summary="読み順生成")
def order_document(
    request: OrderRequest,
    model: Optional[ComparatorModel] = Depends(get_comparator_model),
):
    """
    指定した戦略でドキュメントの読み順を生成

    - model 戦略は READING_ORDER_MODEL_PATH の比較モデルを使う（未設定なら 503）
    - external-model 戦略は READING_ORDER_EXTERNAL_COMPARATOR のコマンドを使う
    - モデル戦略の場合はプレオーダーの実行記録も返す
    """
    document = require_valid_document(request.document)
    config = StrategyConfig(
        y_threshold=request.y_threshold,
        model=model,
        cache=request.cache,
        early_exit=request.early_exit,
        merge=request.merge,
    )
    try:
        sequence, trace = order_with_strategy(document, request.strategy, config)
    except ReadingOrderError as e:
        raise to_http_exception(e) from e

    return OrderResponse(
        strategy=request.strategy,
        sequence=sequence,
        permutation=as_permutation(sequence),
        trace=trace,
    )
