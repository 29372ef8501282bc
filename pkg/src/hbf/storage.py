"""Index persistence and record-file parsing.

Index files are binary, little-endian: magic "HBF1", version u32, then
dim u64, gain f64, item_count u64, key seed u64, value seed u64,
followed by dim float64 coordinates. Bad magic, unknown version, and
short payloads raise distinct error classes so callers can report them
precisely.
"""

from __future__ import annotations

import csv
import io
import struct
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    BadMagicError,
    PersistenceError,
    RecordFormatError,
    TruncatedFileError,
    VersionMismatchError,
)
from .index import HbfMemory

MAGIC = b"HBF1"
VERSION = 1

_HEADER = struct.Struct("<IQdQQQ")


def serialize_memory(mem: HbfMemory) -> bytes:
    header = _HEADER.pack(
        VERSION, mem.dim, mem.gain, mem.item_count, mem.key_seed, mem.value_seed
    )
    return MAGIC + header + mem.vector.astype("<f8").tobytes()


def deserialize_memory(blob: bytes) -> HbfMemory:
    if len(blob) < len(MAGIC):
        raise TruncatedFileError(f"file too short for magic ({len(blob)} bytes)")
    if blob[: len(MAGIC)] != MAGIC:
        raise BadMagicError(f"bad magic {blob[:len(MAGIC)]!r}, expected {MAGIC!r}")
    if len(blob) < len(MAGIC) + _HEADER.size:
        raise TruncatedFileError("file too short for header")
    version, dim, gain, item_count, key_seed, value_seed = _HEADER.unpack_from(
        blob, len(MAGIC)
    )
    if version != VERSION:
        raise VersionMismatchError(f"unsupported version {version}, expected {VERSION}")
    expected = len(MAGIC) + _HEADER.size + 8 * dim
    if len(blob) < expected:
        raise TruncatedFileError(
            f"coordinate array truncated: {len(blob)} bytes, expected {expected}"
        )
    if len(blob) > expected:
        raise PersistenceError(f"{len(blob) - expected} trailing bytes after coordinates")
    vector = np.frombuffer(blob, dtype="<f8", count=dim, offset=len(MAGIC) + _HEADER.size)
    try:
        return HbfMemory(
            vector=vector.astype(np.float64),
            gain=gain,
            item_count=item_count,
            key_seed=key_seed,
            value_seed=value_seed,
        )
    except ValueError as exc:
        raise PersistenceError(f"invalid memory payload: {exc}") from exc


def save_memory(mem: HbfMemory, path) -> None:
    Path(path).write_bytes(serialize_memory(mem))


def load_memory(path) -> HbfMemory:
    return deserialize_memory(Path(path).read_bytes())


def read_records_tsv(path) -> list[tuple[bytes, bytes]]:
    """Parse key<TAB>value lines (UTF-8). Blank lines are skipped."""
    records: list[tuple[bytes, bytes]] = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise RecordFormatError(
                f"{path}:{lineno}: expected key<TAB>value, got {len(parts)} fields"
            )
        key, value = parts
        if not key or not value:
            raise RecordFormatError(f"{path}:{lineno}: empty key or value")
        records.append((key.encode("utf-8"), value.encode("utf-8")))
    return records


def read_labels(path) -> list[bytes]:
    """One label per line (UTF-8); blank lines are skipped."""
    labels = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line:
            labels.append(line.encode("utf-8"))
    return labels


def csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    """RFC-4180 CSV (CRLF line endings, minimal quoting)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(list(header))
    for row in rows:
        writer.writerow(["" if field is None else field for field in row])
    return buf.getvalue()
