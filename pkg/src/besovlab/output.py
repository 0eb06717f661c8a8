"""Deterministic CSV/JSON writers.

Every float is written with 17 significant digits in scientific notation so
that reruns can be compared byte for byte.  Non-finite values become the
strings ``inf``, ``-inf`` and ``nan`` (JSON has no literal for them).
"""
from __future__ import annotations

import csv
import io
import math
import os
from typing import Any, Iterable, Sequence

import numpy as np


def fmt(v: Any) -> str:
    """Render a scalar for CSV output."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.16e}"
    return str(v)


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(header))
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _json(v: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(v, dict):
        if not v:
            return "{}"
        items = [f'{pad}{_json(str(k), indent, level + 1)}: {_json(x, indent, level + 1)}'
                 for k, x in v.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(v, (list, tuple, np.ndarray)):
        seq = list(v)
        if not seq:
            return "[]"
        if all(not isinstance(x, (dict, list, tuple, np.ndarray)) for x in seq):
            return "[" + ", ".join(_json(x, indent, level + 1) for x in seq) + "]"
        return "[\n" + ",\n".join(pad + _json(x, indent, level + 1) for x in seq) + "\n" + end + "]"
    if v is None:
        return "null"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        s = fmt(v)
        return s if math.isfinite(float(v)) else f'"{s}"'
    if isinstance(v, (complex, np.complexfloating)):
        return _json([float(v.real), float(v.imag)], indent, level)
    s = str(v).replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
    return f'"{s}"'


def json_text(obj: Any, indent: int = 2) -> str:
    """JSON with keys in insertion order and 17-digit floats."""
    return _json(obj, indent, 0) + "\n"


def write_text(path: str, text: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)
    return path
