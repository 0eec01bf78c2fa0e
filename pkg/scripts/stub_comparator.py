"""
外部比較器のリファレンス実装（プロトコル確認用スタブ）

使用方法:
    python scripts/stub_comparator.py constant 0.7
    python scripts/stub_comparator.py left-of
    python scripts/stub_comparator.py out-of-range
    python scripts/stub_comparator.py extra-keys
    python scripts/stub_comparator.py garbage
    python scripts/stub_comparator.py reject
    python scripts/stub_comparator.py slow 5
    python scripts/stub_comparator.py image-ref
"""

import json
import sys
import time


def emit(obj):
    sys.stdout.write(json.dumps(obj) + "\n")
    sys.stdout.flush()


def centroid_x(box):
    x_up, _, x_down, _ = box["bbox"]
    return (x_up + x_down) / 2


def reply_for(mode, args, request):
    if mode == "constant":
        return {"p": float(args[0]) if args else 0.5}
    if mode == "left-of":
        lx, rx = centroid_x(request["left"]), centroid_x(request["right"])
        return {"p": 1.0 if lx < rx else 0.0 if lx > rx else 0.5}
    if mode == "out-of-range":
        return {"p": 1.3}
    if mode == "extra-keys":
        return {"p": 0.5, "confidence": 0.9}
    if mode == "image-ref":
        # 両方のボックスに ROI 参照が付いていれば 1
        has_refs = "image_ref" in request["left"] and "image_ref" in request["right"]
        return {"p": 1.0 if has_refs else 0.0}
    if mode == "slow":
        time.sleep(float(args[0]) if args else 5.0)
        return {"p": 0.5}
    raise ValueError(mode)


def main():
    mode = sys.argv[1] if len(sys.argv) > 1 else "constant"
    args = sys.argv[2:]

    handshake = sys.stdin.readline()
    if not handshake:
        return
    hello = json.loads(handshake)
    if mode == "reject" or hello.get("proto") != 1:
        emit({"ok": False, "error": "unsupported"})
        return
    emit({"ok": True})

    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        request = json.loads(line)
        if mode == "garbage":
            sys.stdout.write("not json\n")
            sys.stdout.flush()
            continue
        emit(reply_for(mode, args, request))


if __name__ == "__main__":
    main()
