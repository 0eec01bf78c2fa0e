"""
読み順の SVG 描画

ボックスの枠、1 始まりの序数ラベル、序数順に重心を結ぶ矢印を描く。
欠損ボックスは破線でラベルなし。
"""

from pathlib import Path

from jinja2 import Environment, FileSystemLoader

from core import as_permutation, centroid
from schemas import MISSING, Document, ReadingSequence, RenderStyle

TEMPLATE_DIR = Path(__file__).resolve().parent / "templates"
TEMPLATE_NAME = "reading_order.svg.j2"


def _num(value: float) -> str:
    return f"{value:.2f}".rstrip("0").rstrip(".")


_env = Environment(
    loader=FileSystemLoader(str(TEMPLATE_DIR)),
    autoescape=True,
    trim_blocks=True,
    lstrip_blocks=True,
    keep_trailing_newline=True,
)
_env.filters["num"] = _num


def render_svg(doc: Document, seq: ReadingSequence, style: RenderStyle = RenderStyle()) -> bytes:
    """
    ドキュメントと読み順を SVG 1.1 で描画

    Args:
        doc: 描画対象
        seq: 読み順（マッピングにないボックスは欠損として扱う）
        style: 色・フォントサイズなど

    Returns:
        bytes: UTF-8 の SVG
    """
    box_map = doc.box_map()
    permutation = [box_id for box_id in as_permutation(seq) if box_id in box_map]

    boxes = [
        {
            "box_id": box.box_id,
            "x": box.x_up,
            "y": box.y_up,
            "w": box.width,
            "h": box.height,
            "text": box.text,
            "missing": seq.order.get(box.box_id, MISSING) == MISSING,
        }
        for box in doc.boxes
    ]

    labels = []
    for rank, box_id in enumerate(permutation, start=1):
        box = box_map[box_id]
        labels.append({"x": box.x_up + 2, "y": box.y_up + style.font_size, "text": str(rank)})

    arrows = []
    for a, b in zip(permutation, permutation[1:]):
        ca, cb = centroid(box_map[a]), centroid(box_map[b])
        arrows.append({"x1": ca.x, "y1": ca.y, "x2": cb.x, "y2": cb.y})

    svg = _env.get_template(TEMPLATE_NAME).render(
        doc_id=doc.doc_id,
        width=doc.page_width,
        height=doc.page_height,
        style=style,
        boxes=boxes,
        labels=labels,
        arrows=arrows,
    )
    return svg.encode("utf-8")
