"""Atomic file output with ``# key=value`` provenance headers."""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path
from typing import Dict, Iterable, List, Mapping

from . import __version__

TOOL = "vegrqa"


def atomic_write_bytes(path, data: bytes) -> None:
    """Write via a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _clean(value) -> str:
    return str(value).replace("\n", " ").replace("\r", " ")


def header_lines(meta: Mapping[str, object]) -> List[str]:
    lines = [f"# tool={TOOL}", f"# version={__version__}"]
    lines += [f"# {k}={_clean(v)}" for k, v in meta.items()]
    return lines


def csv_bytes(rows: Iterable[Iterable[str]], meta: Mapping[str, object] = None) -> bytes:
    buf = io.StringIO()
    if meta is not None:
        for line in header_lines(meta):
            buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow(row)
    return buf.getvalue().encode("utf-8")


def write_csv(path, rows, meta: Mapping[str, object] = None) -> None:
    atomic_write_bytes(path, csv_bytes(rows, meta))


def parse_header(text: str) -> Dict[str, str]:
    """Collect the leading ``# key=value`` lines of a CSV."""
    out = {}
    for line in text.splitlines():
        if not line.startswith("#"):
            break
        key, sep, value = line[1:].strip().partition("=")
        if not sep:
            raise ValueError(f"malformed provenance line {line!r}")
        out[key] = value
    return out


def body(text: str) -> str:
    """Everything after the provenance header."""
    lines = text.splitlines(keepends=True)
    i = 0
    while i < len(lines) and lines[i].startswith("#"):
        i += 1
    return "".join(lines[i:])
