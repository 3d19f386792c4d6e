"""Vector-file ingestion and binary persistence for codes, weights, indexes.

Three little-endian container formats, all magic-tagged:

* ``WHW1``, weight tables: magic, u32 b, then b pairs of f64
  (w_i(0), w_i(1)).
* ``WHC1``, code sets: magic, u32 b, u64 n, then n records of
  ceil(b/8) bytes in the canonical bit-0-first packing.
* ``WHI1``, built indexes: magic, u32 b, u32 m, u64 n, m span entries
  (u32 start, u32 length), then per table a u64 bucket count followed by
  buckets in ascending key order (key in ceil(length/8) bytes, u32
  posting count, that many u64 ids ascending), and finally the stored
  codes as a complete embedded WHC1 block.

Buckets and ids are persisted in the same canonical order the builder
produces, so save -> load -> save is byte-identical.

``read_fvecs``/``read_bvecs`` ingest the usual per-record vector
layouts: i32 dimension then that many f32 (fvecs) or u8 (bvecs) values.
Malformed input raises FormatError carrying the byte offset; nothing is
silently truncated.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .codes import MAX_BITS, CodeSet, WeightTable, n_code_bytes
from .errors import FormatError
from .multi_index import MultiIndex, SubstringTable

__all__ = [
    "VectorSet",
    "read_fvecs",
    "read_bvecs",
    "write_fvecs",
    "write_bvecs",
    "save_weights",
    "load_weights",
    "save_codes",
    "load_codes",
    "save_index",
    "load_index",
]


@dataclass(frozen=True)
class VectorSet:
    """A dense (n, d) block of real-valued vectors."""

    values: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 2:
            raise ValueError("values must be a 2-d array")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


def _read_vec_file(path, item_size: int, item_dtype, limit=None) -> VectorSet:
    # reads at most limit records' worth of bytes, so slicing a large
    # file stays cheap
    with open(path, "rb") as f:
        head = f.read(4)
        if len(head) == 0:
            return VectorSet(np.empty((0, 0), dtype=np.float32))
        if len(head) < 4:
            raise FormatError("truncated record header", offset=0)
        d = struct.unpack_from("<i", head, 0)[0]
        if d <= 0:
            raise FormatError(f"record declares dimension {d}", offset=0)
        rec = 4 + d * item_size
        body = f.read(-1 if limit is None else limit * rec - 4)
    data = head + body
    n_complete = len(data) // rec
    hit_limit = limit is not None and n_complete >= limit
    if not hit_limit and len(data) % rec != 0:
        raise FormatError("truncated final record", offset=n_complete * rec)
    n = n_complete if limit is None else min(limit, n_complete)
    raw = np.frombuffer(data, dtype=np.uint8, count=n * rec).reshape(n, rec)
    dims = raw[:, :4].copy().view("<i4").ravel()
    bad = np.flatnonzero(dims != d)
    if len(bad):
        i = int(bad[0])
        raise FormatError(
            f"record {i} declares dimension {int(dims[i])}, expected {d}",
            offset=i * rec,
        )
    vals = raw[:, 4:].copy().view(item_dtype)
    return VectorSet(np.ascontiguousarray(vals.astype(np.float32)))


def read_fvecs(path, limit=None) -> VectorSet:
    """Read float32 vectors; ``limit`` bounds how many records load."""
    return _read_vec_file(path, 4, "<f4", limit)


def read_bvecs(path, limit=None) -> VectorSet:
    """Read byte vectors (values widen to float32)."""
    return _read_vec_file(path, 1, np.uint8, limit)


def _write_vec_file(path, payload: np.ndarray):
    n, d = payload.shape[0], payload.shape[1] * payload.itemsize
    raw = np.empty((n, 4 + d), dtype=np.uint8)
    raw[:, :4] = np.frombuffer(struct.pack("<i", payload.shape[1]), np.uint8)
    raw[:, 4:] = payload.view(np.uint8).reshape(n, d)
    Path(path).write_bytes(raw.tobytes())


def write_fvecs(path, values: np.ndarray):
    _write_vec_file(path, np.ascontiguousarray(values, dtype="<f4"))


def write_bvecs(path, values: np.ndarray):
    arr = np.asarray(values)
    if arr.dtype != np.uint8:
        if np.any((arr < 0) | (arr > 255)):
            raise ValueError("bvecs values must fit in a byte")
        arr = arr.astype(np.uint8)
    _write_vec_file(path, np.ascontiguousarray(arr))


# ---------------------------------------------------------------------------
# container helpers

_W_MAGIC = b"WHW1"
_C_MAGIC = b"WHC1"
_I_MAGIC = b"WHI1"


def _need(data: bytes, off: int, count: int, what: str) -> int:
    if off + count > len(data):
        raise FormatError(f"truncated while reading {what}", offset=off)
    return off + count


def _check_magic(data: bytes, magic: bytes, off: int = 0):
    _need(data, off, 4, "magic")
    got = data[off : off + 4]
    if got != magic:
        raise FormatError(
            f"bad magic {got!r}, expected {magic!r}", offset=off
        )


# ---------------------------------------------------------------------------
# WHW1 weights


def save_weights(path, w: WeightTable):
    blob = struct.pack("<4sI", _W_MAGIC, w.n_bits)
    blob += w.table.astype("<f8").tobytes()
    Path(path).write_bytes(blob)


def load_weights(path) -> WeightTable:
    data = Path(path).read_bytes()
    _check_magic(data, _W_MAGIC)
    _need(data, 4, 4, "bit count")
    b = struct.unpack_from("<I", data, 4)[0]
    if b < 1:
        raise FormatError(f"bit count {b} out of range", offset=4)
    want = 8 + 16 * b
    if len(data) != want:
        raise FormatError(
            f"file holds {len(data)} bytes, expected {want} for {b} bits",
            offset=min(len(data), want),
        )
    table = np.frombuffer(data, dtype="<f8", offset=8).reshape(b, 2)
    return WeightTable(table.astype(np.float64))


# ---------------------------------------------------------------------------
# WHC1 codes


def _codes_blob(codes: CodeSet) -> bytes:
    blob = struct.pack("<4sIQ", _C_MAGIC, codes.n_bits, len(codes))
    return blob + codes.packed.tobytes()


def save_codes(path, codes: CodeSet):
    Path(path).write_bytes(_codes_blob(codes))


def _parse_codes(data: bytes, off: int) -> tuple[CodeSet, int]:
    _check_magic(data, _C_MAGIC, off)
    off2 = _need(data, off + 4, 12, "codes header")
    b, n = struct.unpack_from("<IQ", data, off + 4)
    if not 1 <= b <= MAX_BITS:
        raise FormatError(f"bit count {b} out of range", offset=off + 4)
    nbytes = n_code_bytes(b)
    end = _need(data, off2, n * nbytes, "code records")
    mat = np.frombuffer(data, dtype=np.uint8, count=n * nbytes, offset=off2)
    try:
        codes = CodeSet(mat.reshape(n, nbytes).copy(), b)
    except ValueError as e:
        raise FormatError(str(e), offset=off2) from e
    return codes, end


def load_codes(path) -> CodeSet:
    data = Path(path).read_bytes()
    codes, end = _parse_codes(data, 0)
    if end != len(data):
        raise FormatError("trailing bytes after code records", offset=end)
    return codes


# ---------------------------------------------------------------------------
# WHI1 index


def save_index(path, ix: MultiIndex):
    out = bytearray()
    out += struct.pack("<4sIIQ", _I_MAGIC, ix.n_bits, ix.m, ix.n)
    for start, length in ix.spans:
        out += struct.pack("<II", start, length)
    for table in ix.tables:
        out += struct.pack("<Q", table.n_buckets)
        key_bytes = (table.span[1] + 7) // 8
        for i, key in enumerate(table.keys):
            out += int(key).to_bytes(key_bytes, "little")
            ids = table.ids[table.offsets[i] : table.offsets[i + 1]]
            out += struct.pack("<I", len(ids))
            out += np.asarray(ids, dtype="<u8").tobytes()
    out += _codes_blob(ix.codes)
    Path(path).write_bytes(bytes(out))


def load_index(path) -> MultiIndex:
    data = Path(path).read_bytes()
    _check_magic(data, _I_MAGIC)
    off = _need(data, 4, 16, "index header")
    b, m, n = struct.unpack_from("<IIQ", data, 4)
    if not 1 <= b <= MAX_BITS:
        raise FormatError(f"bit count {b} out of range", offset=4)
    if not 1 <= m <= b:
        raise FormatError(f"table count {m} out of range for {b} bits", offset=8)
    spans = []
    pos = 0
    for i in range(m):
        off2 = _need(data, off, 8, "span entry")
        start, length = struct.unpack_from("<II", data, off)
        if start != pos or length < 1:
            raise FormatError("spans must tile the code contiguously", offset=off)
        spans.append((start, length))
        pos += length
        off = off2
    if pos != b:
        raise FormatError(f"spans cover {pos} bits, expected {b}", offset=off)

    tables = []
    for t in range(m):
        start, length = spans[t]
        key_bytes = (length + 7) // 8
        off2 = _need(data, off, 8, f"bucket count of table {t}")
        n_buckets = struct.unpack_from("<Q", data, off)[0]
        off = off2
        wide = length > 64
        keys_list = []
        counts = []
        id_chunks = []
        prev_key = -1
        for _ in range(n_buckets):
            off2 = _need(data, off, key_bytes + 4, "bucket header")
            key = int.from_bytes(data[off : off + key_bytes], "little")
            if key <= prev_key:
                raise FormatError("bucket keys must ascend", offset=off)
            prev_key = key
            count = struct.unpack_from("<I", data, off + key_bytes)[0]
            off = off2
            off2 = _need(data, off, count * 8, "bucket ids")
            ids = np.frombuffer(data, dtype="<u8", count=count, offset=off)
            if np.any(ids >= n):
                raise FormatError("bucket id out of range", offset=off)
            keys_list.append(key)
            counts.append(count)
            id_chunks.append(ids.astype(np.int64))
            off = off2
        keys = keys_list if wide else np.array(keys_list, dtype=np.uint64)
        offsets = np.zeros(n_buckets + 1, dtype=np.int64)
        if n_buckets:
            np.cumsum(counts, out=offsets[1:])
        ids_all = (
            np.concatenate(id_chunks) if id_chunks else np.empty(0, np.int64)
        )
        tables.append(SubstringTable((start, length), keys, offsets, ids_all))

    codes, end = _parse_codes(data, off)
    if end != len(data):
        raise FormatError("trailing bytes after embedded codes", offset=end)
    if codes.n_bits != b or len(codes) != n:
        raise FormatError("embedded codes disagree with index header", offset=off)
    total = sum(len(tb.ids) for tb in tables)
    if total != n * m:
        raise FormatError(
            f"tables hold {total} postings, expected {n * m}", offset=len(data)
        )
    return MultiIndex(codes, tuple(spans), tuple(tables))
