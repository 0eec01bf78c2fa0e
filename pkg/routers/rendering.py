"""
描画ルーター
"""

from fastapi import APIRouter, Response

from dependencies import require_valid_document, to_http_exception
from errors import ReadingOrderError
from render import render_svg
from schemas import RenderRequest

router = APIRouter(prefix="/render", tags=["描画"])


@router.post("", response_class=Response, summary="読み順の SVG 描画")
def render_order(request: RenderRequest):
    """ボックス枠・序数ラベル・矢印を重ねた SVG を返す"""
    document = require_valid_document(request.document)
    try:
        svg = render_svg(document, request.sequence, request.style)
    except ReadingOrderError as e:
        raise to_http_exception(e) from e
    return Response(content=svg, media_type="image/svg+xml")
