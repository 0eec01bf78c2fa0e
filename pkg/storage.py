"""
ファイル入出力

正準 JSON 形式（1 ファイル 1 ドキュメント）と DocTrack 形式アダプタの読み込み、
視線ファイル・順序ファイルの読み書き
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional, Sequence

from pydantic import BaseModel, Field, ValidationError

from core import as_permutation, validate_document, validate_sequence
from errors import DocumentValidationError, SchemaError
from schemas import (
    MISSING,
    BoundingBox,
    Document,
    GazePoint,
    GazeTrajectory,
    QAPair,
    ReadingSequence,
    SubsetTag,
)

logger = logging.getLogger(__name__)

FORMATS = ("canonical", "doctrack")
GAZE_SUFFIX = ".gaze.json"
ORDER_SUFFIX = ".order.json"


# ===== ファイルスキーマ =====

class BoxRecord(BaseModel):
    id: str
    text: str = ""
    bbox: List[float] = Field(..., min_length=4, max_length=4)


class OrdinalRecord(BaseModel):
    id: str
    ordinal: int = Field(..., ge=MISSING)


class QARecord(BaseModel):
    question: str
    answers: List[str]


class DocumentFile(BaseModel):
    """正準ドキュメントファイル"""
    doc_id: str
    page_width: float
    page_height: float
    subset_tag: SubsetTag = SubsetTag.OTHER
    split: Optional[str] = None
    image: Optional[str] = None
    boxes: List[BoxRecord] = []
    gold_order: Optional[List[OrdinalRecord]] = None
    qa: Optional[List[QARecord]] = None


class PointRecord(BaseModel):
    t: float
    x: float
    y: float
    dur: Optional[float] = None
    pupil: Optional[float] = None


class GazeFile(BaseModel):
    """視線ファイル"""
    doc_id: str = ""
    points: List[PointRecord] = []


class OrderFile(BaseModel):
    """順序ファイル"""
    doc_id: str
    strategy: str = "unknown"
    order: List[OrdinalRecord] = []


class DocTrackEntity(BaseModel):
    id: Any
    text: str = ""
    box: List[float] = Field(..., min_length=4, max_length=4)
    order: Optional[int] = Field(None, ge=MISSING)


class DocTrackImage(BaseModel):
    width: float
    height: float
    fname: Optional[str] = None


class DocTrackFile(BaseModel):
    """DocTrack 配布ファイル（FUNSD 系のエンティティ列）"""
    form: List[DocTrackEntity]
    img: Optional[DocTrackImage] = None
    qa: Optional[List[QARecord]] = None


class IngestedDocument(NamedTuple):
    """読み込んだドキュメントと（あれば）gold 順序"""
    document: Document
    gold: Optional[ReadingSequence]
    path: Path


# ===== 共通処理 =====

def _format_loc(loc: Sequence[Any], raw: Any) -> str:
    """pydantic のエラー位置を boxes[2](id=b3).bbox の形式に整形"""
    text = ""
    node = raw
    for key in loc:
        if isinstance(key, int):
            text += f"[{key}]"
            try:
                node = node[key]
                if isinstance(node, dict) and "id" in node:
                    text += f"(id={node['id']})"
            except (IndexError, KeyError, TypeError):
                node = None
        else:
            text += f".{key}" if text else str(key)
            node = node.get(key) if isinstance(node, dict) else None
    return text or "<root>"


def _read_json(path: Path) -> Any:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SchemaError(str(path), "<root>", f"invalid JSON: {e}") from e
    except UnicodeDecodeError as e:
        raise SchemaError(str(path), "<root>", f"not UTF-8: {e}") from e


def _parse(model, raw: Any, path: Path):
    try:
        return model.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        raise SchemaError(str(path), _format_loc(first["loc"], raw), first["msg"]) from e


def _write_json(path: Path, payload: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    logger.info("wrote %s", path)


def _ordinals_to_sequence(records: List[OrdinalRecord], doc: Document, path: Path, field: str) -> ReadingSequence:
    order = {box_id: MISSING for box_id in doc.box_ids}
    known = set(order)
    for i, record in enumerate(records):
        if record.id not in known:
            raise SchemaError(str(path), f"{field}[{i}](id={record.id})", "unknown box id")
        order[record.id] = record.ordinal
    seq = ReadingSequence(order=order)
    violations = validate_sequence(seq, doc)
    if violations:
        raise SchemaError(str(path), field, violations[0].detail or violations[0].rule)
    return seq


def _check_document(doc: Document, path: Path) -> Document:
    violations = validate_document(doc)
    if violations:
        raise DocumentValidationError(str(path), violations)
    return doc


def _sequence_to_records(seq: ReadingSequence, box_ids: Sequence[str]) -> List[dict]:
    """ボックスの出力順で {id, ordinal} のリストにする（マッピング外のボックスは -1）"""
    as_permutation(seq)
    return [{"id": box_id, "ordinal": seq.order.get(box_id, MISSING)} for box_id in box_ids]


# ===== 正準形式 =====

def parse_canonical(raw: Any, path: Path) -> IngestedDocument:
    """
    正準 JSON を Document に変換

    Raises:
        SchemaError: スキーマ違反（ファイル名とフィールドを含む）
        DocumentValidationError: 座標などの不変条件違反
    """
    record = _parse(DocumentFile, raw, path)
    doc = Document(
        doc_id=record.doc_id,
        page_width=record.page_width,
        page_height=record.page_height,
        boxes=tuple(
            BoundingBox(box_id=b.id, text=b.text, x_up=b.bbox[0], y_up=b.bbox[1], x_down=b.bbox[2], y_down=b.bbox[3])
            for b in record.boxes
        ),
        subset_tag=record.subset_tag,
        qa_pairs=tuple(QAPair(question=q.question, answers=tuple(q.answers)) for q in record.qa or []),
        image=record.image,
        split=record.split,
    )
    _check_document(doc, path)
    gold = None
    if record.gold_order is not None:
        gold = _ordinals_to_sequence(record.gold_order, doc, path, "gold_order")
    return IngestedDocument(document=doc, gold=gold, path=path)


def dump_document(doc: Document, gold: Optional[ReadingSequence] = None) -> dict:
    """Document を正準 JSON の辞書に変換"""
    payload: dict = {
        "doc_id": doc.doc_id,
        "page_width": doc.page_width,
        "page_height": doc.page_height,
        "subset_tag": doc.subset_tag.value,
    }
    if doc.split is not None:
        payload["split"] = doc.split
    if doc.image is not None:
        payload["image"] = doc.image
    payload["boxes"] = [
        {"id": b.box_id, "text": b.text, "bbox": [b.x_up, b.y_up, b.x_down, b.y_down]}
        for b in doc.boxes
    ]
    if gold is not None:
        payload["gold_order"] = _sequence_to_records(gold, doc.box_ids)
    if doc.qa_pairs:
        payload["qa"] = [{"question": q.question, "answers": list(q.answers)} for q in doc.qa_pairs]
    return payload


def write_document(path: Path, doc: Document, gold: Optional[ReadingSequence] = None) -> None:
    """正準 JSON で書き出し（UTF-8、BOM なし）"""
    _write_json(Path(path), dump_document(doc, gold))


# ===== DocTrack アダプタ =====

_SUBSET_ALIASES = {
    "weak": SubsetTag.WEAK,
    "structured": SubsetTag.STRUCTURED,
    "infograph": SubsetTag.INFOGRAPH,
    "infographic": SubsetTag.INFOGRAPH,
    "infographics": SubsetTag.INFOGRAPH,
}
_SPLIT_ALIASES = {"train": "train", "training": "train", "test": "test", "testing": "test", "dev": "dev", "val": "dev"}


def parse_doctrack(raw: Any, path: Path, root: Optional[Path] = None) -> IngestedDocument:
    """
    DocTrack 配布ファイルを Document に変換

    サブセットと分割はパスのディレクトリ名から決める（例: weak/train/0001.json）。
    doc_id は root からの相対パス（拡張子なし、例: weak/train/0001）。root がなければファイル名。
    img にページサイズがない場合はボックスの最大座標をページサイズとして警告する。
    エンティティの order（-1 は欠損）があれば gold 順序とする。
    """
    record = _parse(DocTrackFile, raw, path)
    parts = [part.lower() for part in path.parts[:-1]]
    subset = next((_SUBSET_ALIASES[p] for p in reversed(parts) if p in _SUBSET_ALIASES), SubsetTag.OTHER)
    split = next((_SPLIT_ALIASES[p] for p in reversed(parts) if p in _SPLIT_ALIASES), None)

    boxes = tuple(
        BoundingBox(box_id=str(e.id), text=e.text, x_up=e.box[0], y_up=e.box[1], x_down=e.box[2], y_down=e.box[3])
        for e in record.form
    )
    if record.img is not None:
        width, height = record.img.width, record.img.height
    else:
        width = max((b.x_down for b in boxes), default=1.0) or 1.0
        height = max((b.y_down for b in boxes), default=1.0) or 1.0
        logger.warning("%s: no page size, using box extent %.0fx%.0f", path, width, height)

    image = None
    if record.img is not None and record.img.fname:
        image = str(path.parent / record.img.fname)

    doc = Document(
        doc_id=path.relative_to(root).with_suffix("").as_posix() if root is not None else path.stem,
        page_width=width,
        page_height=height,
        boxes=boxes,
        subset_tag=subset,
        qa_pairs=tuple(QAPair(question=q.question, answers=tuple(q.answers)) for q in record.qa or []),
        image=image,
        split=split,
    )
    _check_document(doc, path)

    gold = None
    if any(e.order is not None for e in record.form):
        records = [
            OrdinalRecord(id=str(e.id), ordinal=e.order if e.order is not None else MISSING)
            for e in record.form
        ]
        gold = _ordinals_to_sequence(records, doc, path, "form.order")
    return IngestedDocument(document=doc, gold=gold, path=path)


# ===== 読み込み =====

def _document_files(path: Path) -> List[Path]:
    if path.is_file():
        return [path]
    return sorted(
        p for p in path.rglob("*.json")
        if not p.name.endswith(GAZE_SUFFIX) and not p.name.endswith(ORDER_SUFFIX)
    )


def ingest(path: Path, format: str = "canonical") -> List[IngestedDocument]:
    """
    ファイルまたはディレクトリからドキュメントを読み込み

    ディレクトリの場合は配下の *.json（視線ファイル・順序ファイルを除く）をパス順に読む。
    doc_id が重複するファイルがあれば SchemaError。

    Args:
        path: ファイルまたはディレクトリ
        format: canonical または doctrack

    Raises:
        ValueError: 未知の形式
        SchemaError / DocumentValidationError: ファイルの不備
    """
    if format not in FORMATS:
        raise ValueError(f"unknown format '{format}' (choose from {', '.join(FORMATS)})")
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"{path} does not exist")

    root = path if path.is_dir() else path.parent
    documents: List[IngestedDocument] = []
    seen: Dict[str, Path] = {}
    for file in _document_files(path):
        raw = _read_json(file)
        item = parse_canonical(raw, file) if format == "canonical" else parse_doctrack(raw, file, root)
        doc_id = item.document.doc_id
        if doc_id in seen:
            raise SchemaError(str(file), "doc_id", f"duplicate doc_id '{doc_id}' (also in {seen[doc_id]})")
        seen[doc_id] = file
        documents.append(item)
    logger.info("ingested %d document(s) from %s", len(documents), path)
    return documents


def load_document(path: Path) -> IngestedDocument:
    """正準ドキュメントファイルを 1 件読み込み"""
    path = Path(path)
    return parse_canonical(_read_json(path), path)


# ===== 視線ファイル =====

def load_trajectory(path: Path) -> GazeTrajectory:
    """視線ファイルを読み込み"""
    path = Path(path)
    record = _parse(GazeFile, _read_json(path), path)
    return GazeTrajectory(
        doc_id=record.doc_id,
        points=tuple(
            GazePoint(timestamp=p.t, x=p.x, y=p.y, duration=p.dur, pupil=p.pupil) for p in record.points
        ),
    )


def write_trajectory(path: Path, traj: GazeTrajectory) -> None:
    """視線ファイルを書き出し"""
    points = []
    for p in traj.points:
        point = {"t": p.timestamp, "x": p.x, "y": p.y}
        if p.duration is not None:
            point["dur"] = p.duration
        if p.pupil is not None:
            point["pupil"] = p.pupil
        points.append(point)
    _write_json(Path(path), {"doc_id": traj.doc_id, "points": points})


def gaze_path_for(doc_path: Path) -> Path:
    """ドキュメントファイルに対応する視線ファイルのパス"""
    return doc_path.with_name(doc_path.name[: -len(".json")] + GAZE_SUFFIX)


# ===== 順序ファイル =====

class LoadedOrder(NamedTuple):
    doc_id: str
    strategy: str
    sequence: ReadingSequence


def load_order(path: Path, doc: Optional[Document] = None) -> LoadedOrder:
    """
    順序ファイルを読み込み

    doc を指定した場合は box_id と序数の妥当性も検査し、ファイルにないボックスは欠損とする。
    """
    path = Path(path)
    record = _parse(OrderFile, _read_json(path), path)
    if doc is not None:
        seq = _ordinals_to_sequence(record.order, doc, path, "order")
    else:
        seq = ReadingSequence(order={r.id: r.ordinal for r in record.order})
    return LoadedOrder(doc_id=record.doc_id, strategy=record.strategy, sequence=seq)


def write_order(path: Path, doc: Document, strategy: str, seq: ReadingSequence) -> None:
    """順序ファイルを書き出し"""
    _write_json(
        Path(path),
        {"doc_id": doc.doc_id, "strategy": strategy, "order": _sequence_to_records(seq, doc.box_ids)},
    )
