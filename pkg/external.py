"""
外部比較器クライアント

子プロセスの標準入出力で 1 行 1 レコードの JSON をやり取りする比較器。
画像を使う比較モデル（Text+Box+Image）などはこの境界の外側で動かす。

プロトコル:
    handshake: → {"proto": 1, "regime": "<name>"}   ← {"ok": true}
    request:   → {"left": {...}, "right": {...}, "page": [w, h]}   ← {"p": <0..1>}
"""

import json
import logging
import queue
import shlex
import subprocess
import threading
from typing import Optional, Sequence, Tuple, Type, TypeVar, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from config import EngineConfig
from errors import ComparatorSpawnError, ComparatorTimeoutError, ProtocolViolationError
from schemas import BoundingBox, PairScore

logger = logging.getLogger(__name__)

PROTOCOL_VERSION = 1


# ===== 応答スキーマ =====

class HandshakeReply(BaseModel):
    """ハンドシェイク応答 {"ok": true}（拒否時は error を添えてよい）"""
    model_config = ConfigDict(extra="forbid", strict=True)

    ok: bool
    error: Optional[str] = None


class ScoreReply(BaseModel):
    """採点応答 {"p": 0..1}"""
    model_config = ConfigDict(extra="forbid", strict=True)

    p: float = Field(..., ge=0, le=1, allow_inf_nan=False)


ReplyT = TypeVar("ReplyT", bound=BaseModel)


def image_ref_for(image: Optional[str], box: BoundingBox) -> Optional[str]:
    """ページ画像パスとボックス座標から ROI 参照文字列を作る"""
    if not image:
        return None
    return f"{image}#{box.x_up:g},{box.y_up:g},{box.x_down:g},{box.y_down:g}"


def _box_record(box: BoundingBox, image_ref: Optional[str]) -> dict:
    record = {
        "id": box.box_id,
        "text": box.text,
        "bbox": [box.x_up, box.y_up, box.x_down, box.y_down],
    }
    if image_ref is not None:
        record["image_ref"] = image_ref
    return record


class ExternalComparator:
    """
    外部プロセスの比較器

    1 プロセスは同時に 1 リクエストしか処理しないため、呼び出しはロックで直列化する。
    タイムアウトや不正な応答はエラーとして送出し、スコアを捏造しない。
    """

    antisymmetric = False

    def __init__(
        self,
        command: Union[str, Sequence[str]],
        regime: str = "text_box",
        timeout: float = EngineConfig.EXTERNAL_TIMEOUT,
        image: Optional[str] = None,
    ):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        if not argv:
            raise ComparatorSpawnError("empty external comparator command")
        self.argv = argv
        self.regime = regime
        self.timeout = timeout
        self.image = image
        self._lock = threading.Lock()
        self._broken = False

        try:
            self.process = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as e:
            raise ComparatorSpawnError(f"failed to start {argv[0]}: {e}") from e

        self._lines: "queue.Queue[Optional[str]]" = queue.Queue()
        self._reader = threading.Thread(target=self._read_stdout, daemon=True)
        self._reader.start()

        try:
            self._handshake()
        except Exception:
            self.close()
            raise

    def _read_stdout(self) -> None:
        for line in self.process.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def _send(self, record: dict) -> None:
        try:
            self.process.stdin.write(json.dumps(record, ensure_ascii=False) + "\n")
            self.process.stdin.flush()
        except (BrokenPipeError, OSError) as e:
            self._broken = True
            raise ProtocolViolationError(f"external comparator closed its input: {e}") from e

    def _receive(self, model: Type[ReplyT]) -> ReplyT:
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            self._broken = True
            raise ComparatorTimeoutError(f"no reply within {self.timeout} s")
        if line is None:
            self._broken = True
            raise ProtocolViolationError("external comparator closed its output")
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as e:
            self._broken = True
            raise ProtocolViolationError(f"malformed reply: {line.strip()[:80]!r}") from e
        try:
            return model.model_validate(reply)
        except ValidationError as e:
            raise ProtocolViolationError(f"unexpected reply {line.strip()[:80]!r}: {e.errors()[0]['msg']}") from e

    def _handshake(self) -> None:
        self._send({"proto": PROTOCOL_VERSION, "regime": self.regime})
        reply = self._receive(HandshakeReply)
        if not reply.ok:
            raise ProtocolViolationError(f"handshake rejected: {reply.error or 'no reason given'}")
        logger.debug("external comparator %s ready (regime %s)", self.argv[0], self.regime)

    def score(
        self,
        left: BoundingBox,
        right: BoundingBox,
        page_dims: Tuple[float, float],
        image_refs: Optional[Tuple[Optional[str], Optional[str]]] = None,
    ) -> PairScore:
        """
        1 ペアを外部比較器に問い合わせる

        Raises:
            ProtocolViolationError: 応答が {"p": 0..1} 以外の形（余分なキーを含む）の場合
            ComparatorTimeoutError: timeout 秒以内に応答がない場合
        """
        if image_refs is None:
            image_refs = (image_ref_for(self.image, left), image_ref_for(self.image, right))
        request = {
            "left": _box_record(left, image_refs[0]),
            "right": _box_record(right, image_refs[1]),
            "page": [page_dims[0], page_dims[1]],
        }
        with self._lock:
            if self._broken:
                raise ProtocolViolationError("external comparator stream is out of sync")
            self._send(request)
            reply = self._receive(ScoreReply)
        return PairScore(p=reply.p)

    def close(self) -> None:
        """子プロセスを終了"""
        if self.process.poll() is None:
            try:
                self.process.stdin.close()
                self.process.wait(timeout=2)
            except (OSError, subprocess.TimeoutExpired):
                self.process.kill()
                self.process.wait()

    def __enter__(self) -> "ExternalComparator":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def external_score(
    comparator: ExternalComparator,
    left: BoundingBox,
    right: BoundingBox,
    page_dims: Tuple[float, float],
    image_refs: Optional[Tuple[Optional[str], Optional[str]]] = None,
) -> PairScore:
    """外部比較器で 1 ペアを採点"""
    return comparator.score(left, right, page_dims, image_refs)
