"""Feature file I/O.

Binary layout (all integers little-endian):

    magic   4 bytes  b"ICHF"
    version u16      1
    flags   u16      bit0 set when labels are present
    n_samples u64
    n_dims    u64
    id table     n_samples x (u32 length + UTF-8 bytes)
    label table  same encoding, present iff flags bit0
    payload      n_samples * n_dims float32, little-endian, row-major

Values are quantized to float32 on write and widened back to float64 on
read, so write -> read round-trips bit-identically for float32-valued data.
A CSV import path (header: id[,label],f0,f1,...) is provided for the CLI.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .dataset import DataError, LabeledDataset, check_feature_matrix

MAGIC = b"ICHF"
FORMAT_VERSION = 1
_FLAG_LABELS = 1

_HEADER = struct.Struct("<4sHHQQ")
_U32 = struct.Struct("<I")


class FormatError(DataError):
    """Malformed or truncated feature file."""


def _write_string_table(fh, strings: list[str]) -> None:
    for s in strings:
        raw = s.encode("utf-8")
        fh.write(_U32.pack(len(raw)))
        fh.write(raw)


def write_feature_file(dataset: LabeledDataset, path) -> None:
    """Write a dataset in the binary feature format (float32 payload)."""
    values = check_feature_matrix(dataset.features)
    flags = _FLAG_LABELS if dataset.labels is not None else 0
    n, d = values.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, flags, n, d))
        _write_string_table(fh, dataset.sample_ids)
        if dataset.labels is not None:
            _write_string_table(fh, dataset.labels)
        fh.write(np.ascontiguousarray(values, dtype="<f4").tobytes())


def _read_exact(fh, size: int, what: str) -> bytes:
    buf = fh.read(size)
    if len(buf) != size:
        raise FormatError(f"truncated feature file ({what})")
    return buf


def _read_string_table(fh, count: int, what: str) -> list[str]:
    out = []
    for _ in range(count):
        (length,) = _U32.unpack(_read_exact(fh, 4, what))
        out.append(_read_exact(fh, length, what).decode("utf-8"))
    return out


def read_feature_file(path) -> LabeledDataset:
    """Read a binary feature file written by :func:`write_feature_file`."""
    with open(path, "rb") as fh:
        head = _read_exact(fh, _HEADER.size, "header")
        magic, version, flags, n, d = _HEADER.unpack(head)
        if magic != MAGIC:
            raise FormatError("unrecognized format (bad magic)")
        if version != FORMAT_VERSION:
            raise FormatError(f"unsupported format version {version}")
        sample_ids = _read_string_table(fh, n, "id table")
        labels = None
        if flags & _FLAG_LABELS:
            labels = _read_string_table(fh, n, "label table")
        payload = _read_exact(fh, 4 * n * d, "payload")
        extra = fh.read(1)
        if extra:
            raise FormatError("trailing bytes after payload")
    values = np.frombuffer(payload, dtype="<f4").reshape(n, d).astype(np.float64)
    return LabeledDataset(values, sample_ids, labels)


def read_csv_features(path) -> LabeledDataset:
    """Import features from CSV with header ``id[,label],<numeric columns...>``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FormatError("empty CSV")
    header = [h.strip() for h in rows[0]]
    if not header or header[0] != "id":
        raise FormatError("CSV header must start with an 'id' column")
    has_labels = len(header) > 1 and header[1] == "label"
    first_feat = 2 if has_labels else 1
    if len(header) <= first_feat:
        raise FormatError("CSV has no feature columns")
    ids, labels, values = [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise FormatError(f"CSV line {lineno}: expected {len(header)} fields")
        ids.append(row[0])
        if has_labels:
            labels.append(row[1])
        try:
            values.append([float(v) for v in row[first_feat:]])
        except ValueError as exc:
            raise FormatError(f"CSV line {lineno}: {exc}") from exc
    # quantize to float32 so a later binary write is lossless
    arr = np.asarray(values, dtype=np.float32).astype(np.float64)
    if not ids:
        arr = arr.reshape(0, len(header) - first_feat)
    return LabeledDataset(arr, ids, labels if has_labels else None)


def load_features(path) -> LabeledDataset:
    """Load a feature file, accepting the binary format or CSV by extension."""
    if Path(path).suffix.lower() == ".csv":
        return read_csv_features(path)
    return read_feature_file(path)
