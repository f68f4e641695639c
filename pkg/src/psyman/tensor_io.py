"""Dense float32 tensors, their binary file format, and ratings-table CSV.

Tensor file layout (extension ``.pst``), all little-endian:

    magic "PSYT" (4 bytes) | version u16 = 1 | dtype u8 = 0 (f32) |
    reserved u8 = 0 | ndim u8 (1..4) | dims: ndim x u32 | payload:
    product(dims) x f32, row-major

Total size is therefore ``9 + 4*ndim + 4*product(dims)`` bytes. Records can
be concatenated back to back in one file; ``read_tensor`` consumes exactly
one record and leaves the stream positioned after its payload.

Ratings CSV: UTF-8, comma-separated, mandatory header whose first column is
the literal ``image_id`` followed by attribute names; one row per image.
"""

from __future__ import annotations

import csv
import io
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, FormatError, ShapeError, TensorWriteError

MAGIC = b"PSYT"
VERSION = 1
DTYPE_F32 = 0
MAX_NDIM = 4
# Guards the u32 dims product before allocating the payload buffer.
_MAX_ELEMENTS = 1 << 31

_HEADER = struct.Struct("<4sHBBB")


class Tensor:
    """Immutable dense row-major float32 array with 1 to 4 axes."""

    __slots__ = ("_array",)

    def __init__(self, array, dims=None):
        arr = np.asarray(array, dtype=np.float32)
        if dims is not None:
            arr = arr.reshape(tuple(dims))
        if arr.ndim < 1 or arr.ndim > MAX_NDIM:
            raise ShapeError(f"tensor must have 1..{MAX_NDIM} axes, got {arr.ndim}")
        if any(d <= 0 for d in arr.shape):
            raise ShapeError(f"tensor dims must be positive, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DataError("tensor contains NaN or Inf")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        self._array = arr

    @property
    def dims(self) -> tuple[int, ...]:
        return self._array.shape

    @property
    def array(self) -> np.ndarray:
        """Read-only float32 view shaped like ``dims``."""
        return self._array

    @property
    def data(self) -> np.ndarray:
        """Read-only flat row-major float32 view."""
        return self._array.reshape(-1)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Tensor):
            return NotImplemented
        return self.dims == other.dims and self._array.tobytes() == other._array.tobytes()

    def __hash__(self):
        return hash((self.dims, self._array.tobytes()))

    def __repr__(self) -> str:
        return f"Tensor(dims={list(self.dims)})"



def write_tensor(t: Tensor, sink) -> int:
    """Write one tensor record to a binary sink; returns bytes written."""
    header = _HEADER.pack(MAGIC, VERSION, DTYPE_F32, 0, len(t.dims))
    dims = struct.pack(f"<{len(t.dims)}I", *t.dims)
    payload = t.data.astype("<f4", copy=False).tobytes()
    written = 0
    for chunk in (header, dims, payload):
        try:
            sink.write(chunk)
        except OSError as exc:
            raise TensorWriteError(f"tensor write failed: {exc}", written) from exc
        written += len(chunk)
    return written


def read_tensor(source) -> Tensor:
    """Read one tensor record; consumes exactly the bytes its header declares."""
    raw = source.read(_HEADER.size)
    if len(raw) < _HEADER.size:
        raise FormatError(f"truncated header: got {len(raw)} of {_HEADER.size} bytes")
    magic, version, dtype, _reserved, ndim = _HEADER.unpack(raw)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    if dtype != DTYPE_F32:
        raise FormatError(f"unsupported dtype code {dtype}")
    if ndim < 1 or ndim > MAX_NDIM:
        raise FormatError(f"ndim must be 1..{MAX_NDIM}, got {ndim}")
    raw = source.read(4 * ndim)
    if len(raw) < 4 * ndim:
        raise FormatError("truncated dims block")
    dims = struct.unpack(f"<{ndim}I", raw)
    count = 1
    for d in dims:
        if d == 0:
            raise FormatError(f"zero dim in {list(dims)}")
        count *= d
    if count > _MAX_ELEMENTS:
        raise FormatError(f"dims product overflow: {list(dims)}")
    payload = source.read(4 * count)
    if len(payload) < 4 * count:
        raise FormatError(f"truncated payload: got {len(payload)} of {4 * count} bytes")
    data = np.frombuffer(payload, dtype="<f4", count=count)
    if not np.all(np.isfinite(data)):
        raise DataError("payload contains NaN or Inf")
    return Tensor(data.reshape(dims))


def tensor_byte_size(dims) -> int:
    """Exact on-disk size of one record with the given dims."""
    return _HEADER.size + 4 * len(dims) + 4 * math.prod(dims)


def write_tensor_file(t: Tensor, path) -> int:
    with open(path, "wb") as fh:
        return write_tensor(t, fh)


def read_tensor_file(path) -> Tensor:
    with open(path, "rb") as fh:
        return read_tensor(fh)


@dataclass(frozen=True)
class RatingsTable:
    """Images x attributes score matrix; carries ground truth or predictions."""

    image_ids: tuple[str, ...]
    attribute_names: tuple[str, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 2:
            raise ShapeError(f"values must be 2-D, got {vals.ndim}-D")
        if vals.shape != (len(self.image_ids), len(self.attribute_names)):
            raise ShapeError(
                f"values shape {vals.shape} does not match "
                f"{len(self.image_ids)} ids x {len(self.attribute_names)} attributes"
            )
        if len(set(self.attribute_names)) != len(self.attribute_names):
            raise DataError("attribute names are not unique")
        if not np.all(np.isfinite(vals)):
            raise DataError("ratings contain NaN or Inf")
        vals = np.ascontiguousarray(vals)
        vals.flags.writeable = False
        object.__setattr__(self, "image_ids", tuple(self.image_ids))
        object.__setattr__(self, "attribute_names", tuple(self.attribute_names))
        object.__setattr__(self, "values", vals)

    @property
    def n_images(self) -> int:
        return len(self.image_ids)

    def column(self, name: str) -> np.ndarray:
        try:
            idx = self.attribute_names.index(name)
        except ValueError:
            raise DataError(f"unknown attribute {name!r}") from None
        return self.values[:, idx]


def read_ratings_csv(source, expect_range: tuple[float, float] | None = None) -> RatingsTable:
    """Parse a ratings CSV; row order in the file is preserved.

    ``expect_range=(lo, hi)`` additionally rejects any value outside the
    closed interval (used for 1..9 human rating tables).
    """
    if isinstance(source, (str, bytes)) and not isinstance(source, bytes):
        # Callers pass either a path or a text stream.
        with open(source, "r", encoding="utf-8", newline="") as fh:
            return read_ratings_csv(fh, expect_range)
    rows = list(csv.reader(source))
    if not rows:
        raise FormatError("empty CSV: missing header row")
    header = rows[0]
    if len(header) < 2:
        raise FormatError("header must contain image_id plus at least one attribute")
    if header[0] != "image_id":
        raise FormatError(f"first header column must be 'image_id', got {header[0]!r}")
    names = header[1:]
    if len(set(names)) != len(names):
        raise FormatError("duplicate attribute names in header")
    ids: list[str] = []
    values = np.empty((len(rows) - 1, len(names)), dtype=np.float64)
    for r, row in enumerate(rows[1:], start=1):
        if len(row) != len(header):
            raise FormatError(f"ragged row {r}: expected {len(header)} cells, got {len(row)}")
        ids.append(row[0])
        for c, cell in enumerate(row[1:]):
            try:
                v = float(cell)
            except ValueError:
                raise FormatError(f"non-numeric cell {cell!r} at row {r}, column {names[c]!r}") from None
            if not math.isfinite(v):
                raise DataError(f"non-finite value at row {r}, column {names[c]!r}")
            if expect_range is not None and not (expect_range[0] <= v <= expect_range[1]):
                raise DataError(
                    f"value {v} at row {r}, column {names[c]!r} outside "
                    f"[{expect_range[0]}, {expect_range[1]}]"
                )
            values[r - 1, c] = v
    return RatingsTable(tuple(ids), tuple(names), values)


def write_ratings_csv(table: RatingsTable, sink) -> None:
    """Inverse of read_ratings_csv; cells use shortest round-trip formatting."""
    if isinstance(sink, str):
        with open(sink, "w", encoding="utf-8", newline="") as fh:
            write_ratings_csv(table, fh)
            return
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(("image_id",) + table.attribute_names)
    for i, image_id in enumerate(table.image_ids):
        writer.writerow([image_id] + [repr(float(v)) for v in table.values[i]])


def tensor_to_bytes(t: Tensor) -> bytes:
    buf = io.BytesIO()
    write_tensor(t, buf)
    return buf.getvalue()


def tensor_from_bytes(blob: bytes) -> Tensor:
    return read_tensor(io.BytesIO(blob))
