"""Token matrix files and JSON reports.

``tokm`` layout (all little-endian)::

    offset  size  field
    0       4     magic b"TOKM"
    4       4     version, uint32 (1)
    8       8     n, uint64
    16      8     d, uint64
    24      4*n*d float32 payload, row-major

Nothing may follow the payload.  ``csv`` holds one token per line as
comma-separated decimals; a single leading line starting with ``#`` is
treated as a header and skipped.
"""

from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    FormatError,
    InvalidMatrix,
    NonFiniteValue,
    RaggedCsv,
    TruncatedPayload,
    UnsupportedVersion,
)
from .linalg import as_tokens

MAGIC = b"TOKM"
VERSION = 1
HEADER = struct.Struct("<4sIQQ")
FORMATS = ("tokm", "csv")


def infer_format(path) -> str:
    return "csv" if Path(path).suffix.lower() == ".csv" else "tokm"


def read_matrix(path, format: str | None = None) -> np.ndarray:
    """Load a token matrix as ``float64``."""
    fmt = format or infer_format(path)
    if fmt == "tokm":
        return _read_tokm(Path(path).read_bytes())
    if fmt == "csv":
        return _read_csv(Path(path).read_text())
    raise ValueError(f"unknown matrix format {fmt!r}")


def _read_tokm(buf: bytes) -> np.ndarray:
    if len(buf) < 4 or buf[:4] != MAGIC:
        raise BadMagic(f"expected magic {MAGIC!r}, got {buf[:4]!r}")
    if len(buf) < HEADER.size:
        raise TruncatedPayload(f"header needs {HEADER.size} bytes, file has {len(buf)}")
    _, version, n, d = HEADER.unpack_from(buf)
    if version != VERSION:
        raise UnsupportedVersion(f"tokm version {version} (only {VERSION} is supported)")
    if n < 1 or d < 1:
        raise InvalidMatrix(f"tokm header declares shape ({n}, {d})")
    want = 4 * n * d
    have = len(buf) - HEADER.size
    if have < want:
        raise TruncatedPayload(f"payload has {have} bytes, header implies {want}")
    if have > want:
        raise FormatError(f"{have - want} trailing bytes after payload")
    data = np.frombuffer(buf, dtype="<f4", count=n * d, offset=HEADER.size)
    out = data.astype(np.float64).reshape(n, d)
    if not np.all(np.isfinite(out)):
        raise NonFiniteValue("tokm payload contains NaN or Inf")
    return out


def _read_csv(text: str) -> np.ndarray:
    lines = text.splitlines()
    if lines and lines[0].startswith("#"):
        lines = lines[1:]
    rows = []
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            rows.append([float(v) for v in line.split(",")])
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from None
        if len(rows[-1]) != len(rows[0]):
            raise RaggedCsv(f"line {lineno} has {len(rows[-1])} columns, expected {len(rows[0])}")
    if not rows:
        raise InvalidMatrix("csv contains no tokens")
    return as_tokens(np.array(rows))


def encode_tokm(x) -> bytes:
    x = as_tokens(x)
    with np.errstate(over="ignore"):
        narrow = x.astype("<f4")
    if not np.all(np.isfinite(narrow)):
        raise NonFiniteValue("values overflow float32")
    n, d = x.shape
    return HEADER.pack(MAGIC, VERSION, n, d) + narrow.tobytes(order="C")


def encode_csv(x) -> str:
    x = as_tokens(x)
    return "".join(",".join(repr(float(v)) for v in row) + "\n" for row in x)


def write_matrix(path, x, format: str | None = None) -> None:
    """Write ``x`` in ``tokm`` (float32, round-to-nearest-even) or ``csv``."""
    fmt = format or infer_format(path)
    if fmt == "tokm":
        Path(path).write_bytes(encode_tokm(x))
    elif fmt == "csv":
        Path(path).write_text(encode_csv(x))
    else:
        raise ValueError(f"unknown matrix format {fmt!r}")


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def write_report(path, report, include_timings: bool = False) -> None:
    """Write a compression report (or any already-ordered dict) as JSON.

    Keys keep their documented insertion order; see
    :meth:`apet.compression.CompressionReport.to_dict`.
    """
    obj = report.to_dict(include_timings) if hasattr(report, "to_dict") else report
    Path(path).write_text(dumps_json(obj))


def read_indices(path) -> list[int]:
    """One integer per line; blank lines and ``#`` comments are ignored."""
    out = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            try:
                out.append(int(line))
            except ValueError:
                raise FormatError(f"not an index: {line!r}") from None
    return out


def write_indices(path, indices) -> None:
    Path(path).write_text("".join(f"{int(i)}\n" for i in indices))


def ensure_parent(path) -> None:
    parent = os.path.dirname(os.fspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)
