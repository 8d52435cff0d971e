"""Schema-tagged CSV emission with locale-independent number formatting.

Every file this package writes starts with ``# schema: <tag>`` followed by
optional ``# key: value`` metadata lines, then a plain CSV header and rows.
Numbers are rendered with 12 significant digits and a '.' decimal separator
so reruns diff cleanly across machines.
"""

from __future__ import annotations

import os
from typing import Iterable, Sequence

import numpy as np

SIG_DIGITS = 12


def fmt(value) -> str:
    """Render a number at 12 significant digits; pass strings through."""
    if isinstance(value, str):
        return value
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), f".{SIG_DIGITS}g")


def write_csv(
    path: str,
    schema: str,
    header: Sequence[str],
    rows: Iterable[Sequence],
    meta: dict | None = None,
) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    lines = [f"# schema: {schema}"]
    for key, value in (meta or {}).items():
        lines.append(f"# {key}: {fmt(value)}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path: str) -> tuple[str, dict, list[str], list[list[str]]]:
    """Parse (schema, meta, header, rows) from a schema-tagged CSV."""
    schema = ""
    meta: dict[str, str] = {}
    header: list[str] = []
    rows: list[list[str]] = []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if ":" in body:
                    key, _, value = body.partition(":")
                    key = key.strip()
                    if key == "schema":
                        schema = value.strip()
                    else:
                        meta[key] = value.strip()
                continue
            if not header:
                header = [c.strip() for c in line.split(",")]
            else:
                rows.append(line.split(","))
    if not schema:
        raise ValueError(f"{path}: missing '# schema:' tag")
    return schema, meta, header, rows
