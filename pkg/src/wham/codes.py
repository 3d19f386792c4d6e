"""Binary codes, per-bit weight tables, and weighted Hamming distances.

Bit layout
----------
A code of ``n_bits`` bits is packed into ``ceil(n_bits / 8)`` bytes.
Bit ``i`` (0-based) lives in byte ``i // 8`` at bit position ``i % 8``,
i.e. little-endian within each byte.  Unused padding bits in the final
byte are always zero.  Codes up to 256 bits are supported.

Distance arithmetic
-------------------
Every distance in this package is a float64 sum of per-bit weights,
accumulated in one canonical order: within each 8-bit chunk the weights
are added left to right, and the per-chunk partial sums are then added
left to right across chunks.  All evaluation paths (scalar, table-driven,
vectorized, compiled) share this order, so equal inputs produce
bit-identical distances everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DimensionError, InvalidWeightError, UnsupportedLengthError

MAX_BITS = 256

# Bit j (little-endian) of each byte value, used to build per-chunk tables.
_BYTE_BITS = np.unpackbits(
    np.arange(256, dtype=np.uint8)[:, None], axis=1, bitorder="little"
).astype(bool)


def n_code_bytes(n_bits: int) -> int:
    """Number of bytes used to pack an ``n_bits``-bit code."""
    return (n_bits + 7) // 8


def _check_n_bits(n_bits: int) -> int:
    n_bits = int(n_bits)
    if n_bits < 1:
        raise DimensionError(f"code length must be positive, got {n_bits}")
    if n_bits > MAX_BITS:
        raise UnsupportedLengthError(
            f"code length {n_bits} exceeds the supported maximum of {MAX_BITS}"
        )
    return n_bits


def _padding_mask(n_bits: int) -> int:
    """Mask of valid bits in the final byte."""
    rem = n_bits % 8
    return 0xFF if rem == 0 else (1 << rem) - 1


@dataclass(frozen=True)
class BinaryCode:
    """An immutable fixed-length binary code in packed form."""

    data: bytes
    n_bits: int

    def __post_init__(self):
        _check_n_bits(self.n_bits)
        nbytes = n_code_bytes(self.n_bits)
        if len(self.data) != nbytes:
            raise DimensionError(
                f"expected {nbytes} packed bytes for {self.n_bits} bits, "
                f"got {len(self.data)}"
            )
        if self.data and self.data[-1] & ~_padding_mask(self.n_bits) & 0xFF:
            raise ValueError("padding bits in the final byte must be zero")

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BinaryCode":
        """Build a code from an iterable of 0/1 values, bit 0 first."""
        arr = np.asarray(list(bits), dtype=np.uint8)
        if arr.ndim != 1 or arr.size == 0:
            raise DimensionError("bits must be a non-empty 1-D sequence")
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("bits must be 0 or 1")
        packed = np.packbits(arr, bitorder="little")
        return cls(packed.tobytes(), arr.size)

    @classmethod
    def from_string(cls, s: str) -> "BinaryCode":
        """Build a code from a string like ``"0110"`` (bit 0 leftmost)."""
        return cls.from_bits(int(ch) for ch in s)

    @classmethod
    def from_int(cls, value: int, n_bits: int) -> "BinaryCode":
        """Build a code from an integer whose bit ``i`` is code bit ``i``."""
        n_bits = _check_n_bits(n_bits)
        if value < 0 or value >> n_bits:
            raise ValueError(f"value {value} does not fit in {n_bits} bits")
        return cls(int(value).to_bytes(n_code_bytes(n_bits), "little"), n_bits)

    @classmethod
    def zeros(cls, n_bits: int) -> "BinaryCode":
        n_bits = _check_n_bits(n_bits)
        return cls(bytes(n_code_bytes(n_bits)), n_bits)

    def bit(self, i: int) -> int:
        """Value of bit ``i`` (0-based)."""
        if not 0 <= i < self.n_bits:
            raise IndexError(f"bit index {i} out of range for {self.n_bits} bits")
        return (self.data[i // 8] >> (i % 8)) & 1

    def bits(self) -> np.ndarray:
        """Unpacked bits as a uint8 array of length ``n_bits``."""
        return np.unpackbits(
            np.frombuffer(self.data, dtype=np.uint8),
            count=self.n_bits,
            bitorder="little",
        )

    def to_int(self) -> int:
        return int.from_bytes(self.data, "little")

    def __xor__(self, other: "BinaryCode") -> "BinaryCode":
        if self.n_bits != other.n_bits:
            raise DimensionError(
                f"cannot xor codes of {self.n_bits} and {other.n_bits} bits"
            )
        return BinaryCode(
            bytes(a ^ b for a, b in zip(self.data, other.data)), self.n_bits
        )

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits())

    def __len__(self) -> int:
        return self.n_bits


def hamming_distance(q: BinaryCode, g: BinaryCode) -> int:
    """Number of differing bits between two codes of equal length."""
    if q.n_bits != g.n_bits:
        raise DimensionError(
            f"cannot compare codes of {q.n_bits} and {g.n_bits} bits"
        )
    return (q.to_int() ^ g.to_int()).bit_count()


@dataclass(frozen=True)
class WeightTable:
    """Per-bit weight pairs ``(w_i(0), w_i(1))``.

    ``table[i, x]`` is the cost contributed by bit ``i`` when the xor of
    query and database bit equals ``x``.  Entries must be finite and
    non-negative.
    """

    table: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.table, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] == 0:
            raise DimensionError(
                f"weight table must have shape (n_bits, 2), got {arr.shape}"
            )
        _check_n_bits(arr.shape[0])
        if not np.all(np.isfinite(arr)):
            raise InvalidWeightError("weights must be finite")
        if np.any(arr < 0):
            raise InvalidWeightError("weights must be non-negative")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "table", arr)

    @classmethod
    def unit(cls, n_bits: int) -> "WeightTable":
        """Plain Hamming: every bit costs 0 when equal, 1 when different."""
        t = np.zeros((_check_n_bits(n_bits), 2))
        t[:, 1] = 1.0
        return cls(t)

    @property
    def n_bits(self) -> int:
        return self.table.shape[0]


def as_weight_table(w) -> WeightTable:
    return w if isinstance(w, WeightTable) else WeightTable(np.asarray(w))


def fold_weights(q: BinaryCode, w: WeightTable) -> np.ndarray:
    """Swap each bit's weight pair so it is indexed by the database bit.

    Returns an (n_bits, 2) array ``folded`` with
    ``folded[i, g_i] == w.table[i, g_i xor q_i]``.
    """
    if q.n_bits != w.n_bits:
        raise DimensionError(
            f"query has {q.n_bits} bits but weight table has {w.n_bits}"
        )
    qb = q.bits().astype(np.intp)
    cols = np.arange(w.n_bits)
    folded = np.empty_like(w.table)
    folded[:, 0] = w.table[cols, qb]
    folded[:, 1] = w.table[cols, 1 - qb]
    return folded


@dataclass(frozen=True)
class QueryContext:
    """Query-folded weights plus the derived probe-ordering data.

    Attributes:
        folded: (n_bits, 2) array; ``folded[i, x]`` is the cost of database
            bit ``i`` having value ``x``.
        h_bits: bits of the cheapest code under ``folded`` (ties pick 0).
        base_weight: distance of that cheapest code.
        deltas: per-bit extra cost of flipping bit ``i`` away from ``h_bits``;
            always >= 0.
        order: bit indices sorted by ascending delta, ties by bit index.
    """

    folded: np.ndarray
    h_bits: np.ndarray
    base_weight: float
    deltas: np.ndarray
    order: np.ndarray

    @property
    def n_bits(self) -> int:
        return self.folded.shape[0]

    @property
    def h(self) -> BinaryCode:
        return BinaryCode.from_bits(self.h_bits)

    def h_int(self) -> int:
        return self.h.to_int()


def context_from_folded(folded: np.ndarray) -> QueryContext:
    """Derive the cheapest code, flip costs, and probe order from folded weights."""
    folded = np.asarray(folded, dtype=np.float64)
    h_bits = (folded[:, 0] > folded[:, 1]).astype(np.uint8)
    cols = np.arange(folded.shape[0])
    low = folded[cols, h_bits]
    high = folded[cols, 1 - h_bits]
    deltas = high - low
    order = np.argsort(deltas, kind="stable").astype(np.int64)
    base = chunked_sum(low)
    for arr in (folded, h_bits, deltas, order):
        arr.setflags(write=False)
    return QueryContext(folded, h_bits, base, deltas, order)


def build_query_context(q: BinaryCode, w) -> QueryContext:
    """Fold ``w`` around query ``q`` and precompute the probe ordering."""
    return context_from_folded(fold_weights(q, as_weight_table(w)))


def chunked_sum(values: Sequence[float]) -> float:
    """Canonical accumulation: 8-value chunk partials, then chunks, left to right."""
    vals = [float(v) for v in values]
    total = 0.0
    for c in range(0, len(vals), 8):
        part = 0.0
        for v in vals[c : c + 8]:
            part += v
        total += part
    return total


def context_distance(ctx: QueryContext, g: BinaryCode) -> float:
    """Weighted distance of code ``g`` under a prepared query context."""
    if g.n_bits != ctx.n_bits:
        raise DimensionError(
            f"code has {g.n_bits} bits but context has {ctx.n_bits}"
        )
    gb = g.bits()
    return chunked_sum(ctx.folded[i, gb[i]] for i in range(ctx.n_bits))


def weighted_distance(q: BinaryCode, g: BinaryCode, w) -> float:
    """Weighted Hamming distance: sum of ``w[i, q_i xor g_i]`` over bits."""
    w = as_weight_table(w)
    if q.n_bits != g.n_bits:
        raise DimensionError(
            f"cannot compare codes of {q.n_bits} and {g.n_bits} bits"
        )
    if q.n_bits != w.n_bits:
        raise DimensionError(
            f"codes have {q.n_bits} bits but weight table has {w.n_bits}"
        )
    x = (q.bits() ^ g.bits()).astype(np.intp)
    return chunked_sum(w.table[i, x[i]] for i in range(q.n_bits))


def chunk_tables(ctx: QueryContext) -> np.ndarray:
    """Per-byte lookup tables materializing the canonical distance.

    Returns an (n_bytes, 256) float64 array where summing
    ``tables[c][code_byte_c]`` across chunks (left to right) reproduces
    ``context_distance`` bit-exactly for every valid code.
    """
    n_bits = ctx.n_bits
    nbytes = n_code_bytes(n_bits)
    tables = np.zeros((nbytes, 256))
    for c in range(nbytes):
        acc = np.zeros(256)
        for j in range(8):
            i = c * 8 + j
            if i >= n_bits:
                break
            acc = acc + np.where(_BYTE_BITS[:, j], ctx.folded[i, 1], ctx.folded[i, 0])
        tables[c] = acc
    return tables


def packed_distances(tables: np.ndarray, packed: np.ndarray) -> np.ndarray:
    """Vectorized canonical distances for a packed (n, n_bytes) code matrix."""
    out = tables[0][packed[:, 0]].copy()
    for c in range(1, tables.shape[0]):
        out += tables[c][packed[:, c]]
    return out


@dataclass(frozen=True)
class CodeSet:
    """A column of equal-length codes stored as a packed byte matrix."""

    packed: np.ndarray
    n_bits: int

    def __post_init__(self):
        _check_n_bits(self.n_bits)
        arr = np.ascontiguousarray(self.packed, dtype=np.uint8)
        nbytes = n_code_bytes(self.n_bits)
        if arr.ndim != 2 or arr.shape[1] != nbytes:
            raise DimensionError(
                f"expected packed shape (n, {nbytes}) for {self.n_bits} bits, "
                f"got {arr.shape}"
            )
        bad = ~_padding_mask(self.n_bits) & 0xFF
        if bad and arr.shape[0] and np.any(arr[:, -1] & bad):
            raise ValueError("padding bits in the final byte must be zero")
        arr.setflags(write=False)
        object.__setattr__(self, "packed", arr)

    @classmethod
    def from_codes(cls, codes: Sequence[BinaryCode]) -> "CodeSet":
        if not codes:
            raise DimensionError("cannot infer code length from an empty sequence")
        n_bits = codes[0].n_bits
        for c in codes:
            if c.n_bits != n_bits:
                raise DimensionError("codes must all have the same length")
        mat = np.frombuffer(
            b"".join(c.data for c in codes), dtype=np.uint8
        ).reshape(len(codes), n_code_bytes(n_bits))
        return cls(mat, n_bits)

    @classmethod
    def from_bit_rows(cls, rows: np.ndarray) -> "CodeSet":
        """Pack an (n, n_bits) matrix of 0/1 values, bit 0 in column 0."""
        rows = np.asarray(rows, dtype=np.uint8)
        if rows.ndim != 2 or rows.shape[1] == 0:
            raise DimensionError(f"expected a 2-D bit matrix, got shape {rows.shape}")
        if not np.all((rows == 0) | (rows == 1)):
            raise ValueError("bit matrix entries must be 0 or 1")
        return cls(np.packbits(rows, axis=1, bitorder="little"), rows.shape[1])

    @classmethod
    def from_ints(cls, values: Iterable[int], n_bits: int) -> "CodeSet":
        codes = [BinaryCode.from_int(v, n_bits) for v in values]
        if not codes:
            return cls.empty(n_bits)
        return cls.from_codes(codes)

    @classmethod
    def empty(cls, n_bits: int) -> "CodeSet":
        return cls(np.zeros((0, n_code_bytes(n_bits)), dtype=np.uint8), n_bits)

    def __len__(self) -> int:
        return self.packed.shape[0]

    def __getitem__(self, i: int) -> BinaryCode:
        return BinaryCode(self.packed[i].tobytes(), self.n_bits)

    def __iter__(self) -> Iterator[BinaryCode]:
        for i in range(len(self)):
            yield self[i]

    def bit_rows(self) -> np.ndarray:
        """Unpacked (n, n_bits) matrix of 0/1 values."""
        return np.unpackbits(self.packed, axis=1, count=self.n_bits, bitorder="little")


def extract_keys(codes: CodeSet, start: int, length: int):
    """Integer values of a contiguous bit substring across a code set.

    ``start`` is 0-based.  Returns a uint64 array when the substring fits
    a machine word, otherwise a list of Python ints.
    """
    if not (0 <= start and length >= 1 and start + length <= codes.n_bits):
        raise DimensionError(
            f"substring [{start}, {start + length}) out of range "
            f"for {codes.n_bits} bits"
        )
    rows = codes.bit_rows()[:, start : start + length]
    if length <= 64:
        keys = np.zeros(len(codes), dtype=np.uint64)
        for j in range(length):
            keys |= rows[:, j].astype(np.uint64) << np.uint64(j)
        return keys
    packed = np.packbits(rows, axis=1, bitorder="little")
    return [int.from_bytes(row.tobytes(), "little") for row in packed]
