"""Fixed-width binary dataset files with O(1) random row access.

File layout (little-endian):

    offset  size  field
    0       4     magic b"SJDS"
    4       4     format version (uint32)
    8       8     row count N (uint64)
    16      4     column count p (uint32)
    20      1     dtype code (uint8; 0 = IEEE float64)
    21      3     padding
    24      -     N*p float64 values, row-major

Row i starts at byte 24 + i*p*8, so any row is reachable with one seek.
"""
from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"SJDS"
FORMAT_VERSION = 1
DTYPE_FLOAT64 = 0

_HEADER_FMT = "<4sIQIB3x"
HEADER_SIZE = struct.calcsize(_HEADER_FMT)
assert HEADER_SIZE == 24

_ROW_DTYPE = np.dtype("<f8")


class StoreError(Exception):
    """A dataset file is malformed or cannot be ingested."""


@dataclass(frozen=True)
class DatasetHeader:
    row_count: int
    col_count: int
    version: int = FORMAT_VERSION
    dtype_code: int = DTYPE_FLOAT64

    @property
    def data_bytes(self) -> int:
        return self.row_count * self.col_count * _ROW_DTYPE.itemsize

    def pack(self) -> bytes:
        return struct.pack(
            _HEADER_FMT, MAGIC, self.version, self.row_count, self.col_count, self.dtype_code
        )


@dataclass(frozen=True)
class RecordBatch:
    """Rows pulled from a dataset, paired with where they came from."""

    rows: np.ndarray            # (n, p) float64
    source_indices: np.ndarray  # (n,) int64


class DatasetHandle:
    """Read-only view of an open dataset.

    Immutable after open; reads never touch file state, so one handle can be
    shared across threads.
    """

    def __init__(self, path: str | Path, header: DatasetHeader, rows: np.ndarray):
        self.path = str(path)
        self.header = header
        self._rows = rows

    @property
    def row_count(self) -> int:
        return self.header.row_count

    @property
    def col_count(self) -> int:
        return self.header.col_count

    def read_records(self, indices) -> RecordBatch:
        """Fetch the given rows, duplicates allowed, in the order requested."""
        idx = np.asarray(indices, dtype=np.int64)
        if idx.ndim != 1 or idx.size == 0:
            raise ValueError("indices must be a non-empty 1-d sequence")
        if idx.min() < 0 or idx.max() >= self.row_count:
            bad = idx[(idx < 0) | (idx >= self.row_count)][0]
            raise IndexError(f"row index {bad} out of range [0, {self.row_count})")
        rows = np.array(self._rows[idx], dtype=np.float64)
        return RecordBatch(rows=rows, source_indices=idx)


def open_dataset(path: str | Path) -> DatasetHandle:
    """Validate header and file length, then map the rows for random access."""
    path = Path(path)
    try:
        size = path.stat().st_size
        with open(path, "rb") as fh:
            raw = fh.read(HEADER_SIZE)
    except OSError as exc:
        raise StoreError(f"cannot open dataset: {exc}") from exc
    if len(raw) < HEADER_SIZE:
        raise StoreError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, version, n_rows, n_cols, dtype_code = struct.unpack(_HEADER_FMT, raw)
    if magic != MAGIC:
        raise StoreError(f"{path}: not an SJDS file (magic {magic!r})")
    if dtype_code != DTYPE_FLOAT64:
        raise StoreError(f"{path}: unsupported dtype code {dtype_code}")
    if n_rows < 1 or n_cols < 1:
        raise StoreError(f"{path}: invalid shape ({n_rows} x {n_cols})")
    header = DatasetHeader(row_count=n_rows, col_count=n_cols, version=version)
    expected = HEADER_SIZE + header.data_bytes
    if size != expected:
        raise StoreError(f"{path}: length mismatch (expected {expected} bytes, found {size})")
    rows = np.memmap(path, dtype=_ROW_DTYPE, mode="r", offset=HEADER_SIZE, shape=(n_rows, n_cols))
    return DatasetHandle(path, header, rows)


class DatasetWriter:
    """Streams row blocks to a new dataset file.

    The row count is unknown until the stream ends, so a provisional header is
    written first and patched on close. Writing is single-threaded and
    exclusive; readers only see the file once close() has run.
    """

    def __init__(self, path: str | Path, col_count: int):
        if col_count < 1:
            raise ValueError("col_count must be >= 1")
        self.path = Path(path)
        self.col_count = col_count
        self.rows_written = 0
        self._fh = open(self.path, "wb")
        self._fh.write(DatasetHeader(row_count=0, col_count=col_count).pack())

    def append(self, block) -> None:
        arr = np.ascontiguousarray(block, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2 or arr.shape[1] != self.col_count:
            raise ValueError(f"block must have {self.col_count} columns")
        self._fh.write(arr.astype(_ROW_DTYPE, copy=False).tobytes())
        self.rows_written += arr.shape[0]

    def close(self) -> DatasetHeader:
        header = DatasetHeader(row_count=self.rows_written, col_count=self.col_count)
        self._fh.seek(0)
        self._fh.write(header.pack())
        self._fh.close()
        if self.rows_written < 1:
            self.path.unlink(missing_ok=True)
            raise StoreError("no rows written")
        return header

    def abort(self) -> None:
        """Discard the partial file."""
        self._fh.close()
        self.path.unlink(missing_ok=True)


def write_matrix(rows, path: str | Path) -> DatasetHeader:
    """Write an in-memory (n, p) matrix as a dataset file."""
    arr = np.ascontiguousarray(rows, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("rows must be a 2-d matrix")
    writer = DatasetWriter(path, arr.shape[1])
    writer.append(arr)
    return writer.close()


def signed_log(x: float) -> float:
    """sign(x) * log|x|, with 0 mapped to 0. Rejects non-finite input."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"signed_log requires finite input, got {x}")
    if x == 0.0:
        return 0.0
    mag = math.log(abs(x))
    return mag if x > 0 else -mag


def convert_csv(
    csv_path: str | Path,
    columns: list[str],
    transform: str | None,
    out_path: str | Path,
) -> DatasetHeader:
    """Ingest named numeric CSV columns into a dataset file.

    The first CSV row is the header; an empty string is a missing value and
    drops the whole row. Any other unparseable value is an error. With
    transform="signed_log" each retained value is mapped through signed_log.
    """
    if transform not in (None, "none", "signed_log"):
        raise ValueError(f"unknown transform {transform!r}")
    apply_log = transform == "signed_log"
    if not columns:
        raise ValueError("at least one column must be selected")

    try:
        fh = open(csv_path, "r", newline="")
    except OSError as exc:
        raise StoreError(f"cannot read CSV: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            names = next(reader)
        except StopIteration:
            raise StoreError(f"{csv_path}: empty file") from None
        positions = []
        for name in columns:
            try:
                positions.append(names.index(name))
            except ValueError:
                raise StoreError(f"{csv_path}: unknown column {name!r}") from None

        writer = DatasetWriter(out_path, len(columns))
        buf: list[list[float]] = []
        for row_num, row in enumerate(reader, start=1):
            values = []
            for pos in positions:
                text = row[pos].strip() if pos < len(row) else ""
                if text == "":
                    values = None
                    break
                try:
                    value = float(text)
                except ValueError:
                    writer.abort()
                    raise StoreError(
                        f"{csv_path}: unparseable value {text!r} at row {row_num}"
                    ) from None
                if apply_log:
                    try:
                        value = signed_log(value)
                    except ValueError as exc:
                        writer.abort()
                        raise StoreError(f"{csv_path}: row {row_num}: {exc}") from None
                values.append(value)
            if values is None:
                continue
            buf.append(values)
            if len(buf) >= 65536:
                writer.append(np.asarray(buf))
                buf = []
        if buf:
            writer.append(np.asarray(buf))
        try:
            return writer.close()
        except StoreError:
            raise StoreError(f"{csv_path}: zero retained rows") from None
