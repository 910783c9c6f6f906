"""Deterministic text rendering shared by the CSV and JSON emitters."""

from __future__ import annotations

import json
import math


def format_float(x: float) -> str:
    """17-significant-digit rendering; round-trips float64 exactly."""
    return f"{float(x):.17g}"


def _json_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError("non-finite float in JSON output")
    s = format_float(x)
    if "." not in s and "e" not in s:
        s += ".0"
    return s


def dumps_canonical(obj, indent: int = 2) -> str:
    """JSON with sorted keys and fixed float rendering, for byte-stable reruns."""
    pieces: list[str] = []
    _write(obj, pieces, indent, 0)
    pieces.append("\n")
    return "".join(pieces)


def _write(obj, out: list[str], indent: int, level: int) -> None:
    pad = " " * (indent * (level + 1))
    closing = " " * (indent * level)
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(_json_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        keys = sorted(obj)
        for n, k in enumerate(keys):
            if not isinstance(k, str):
                raise TypeError("JSON object keys must be strings")
            out.append(pad + json.dumps(k) + ": ")
            _write(obj[k], out, indent, level + 1)
            out.append(",\n" if n < len(keys) - 1 else "\n")
        out.append(closing + "}")
    elif isinstance(obj, (list, tuple)):
        if not len(obj):
            out.append("[]")
            return
        out.append("[\n")
        for n, v in enumerate(obj):
            out.append(pad)
            _write(v, out, indent, level + 1)
            out.append(",\n" if n < len(obj) - 1 else "\n")
        out.append(closing + "]")
    else:
        raise TypeError(f"cannot render {type(obj).__name__} as JSON")
