"""Line-delimited JSON records with fixed two-decimal numbers.

The stdlib encoder cannot print ``Decimal("100.00")`` as ``100.00``, so
encoding is done by hand; decoding goes through ``json`` with
``parse_float=Decimal``.
"""
from __future__ import annotations

import json
from decimal import Decimal
from typing import Any, Iterable, Iterator

from .core import format_fixed


def encode(obj: Any) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, Decimal):
        return format_fixed(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        items = (f"{json.dumps(str(k), ensure_ascii=False)}: {encode(v)}"
                 for k, v in obj.items())
        return "{" + ", ".join(items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(encode(v) for v in obj) + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def decode(line: str) -> Any:
    return json.loads(line, parse_float=Decimal)


def write_lines(path, rows: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fp:
        for row in rows:
            fp.write(encode(row))
            fp.write("\n")


def read_lines(path) -> Iterator[Any]:
    with open(path, encoding="utf-8") as fp:
        for line in fp:
            if line.strip():
                yield decode(line)
