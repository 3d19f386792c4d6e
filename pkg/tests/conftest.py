"""Shared test helpers: independent oracles and random instance generators.

The oracle implementations here deliberately avoid the package's table
and index machinery: distances are recomputed from unpacked bits with
the canonical chunked accumulation (an independent cumsum-based path),
and top-K selection is a full stable sort.
"""

from __future__ import annotations

import numpy as np

from wham.codes import BinaryCode, CodeSet, WeightTable, n_code_bytes


def random_codeset(rng: np.random.Generator, n: int, n_bits: int) -> CodeSet:
    """Uniform random codes with zeroed padding bits."""
    nbytes = n_code_bytes(n_bits)
    mat = rng.integers(0, 256, size=(n, nbytes), dtype=np.uint8)
    rem = n_bits % 8
    if rem:
        mat[:, -1] &= (1 << rem) - 1
    return CodeSet(mat, n_bits)


def random_code(rng: np.random.Generator, n_bits: int) -> BinaryCode:
    return random_codeset(rng, 1, n_bits)[0]


def random_weights(rng: np.random.Generator, n_bits: int) -> WeightTable:
    """Generic weights: both columns positive, continuous."""
    return WeightTable(rng.uniform(0.0, 2.0, size=(n_bits, 2)))


def uniform_asym_weights(rng: np.random.Generator, n_bits: int) -> WeightTable:
    """Matching bits are free; mismatches cost a per-bit uniform draw."""
    t = np.zeros((n_bits, 2))
    t[:, 1] = rng.uniform(0.5, 1.5, size=n_bits)
    return WeightTable(t)


def oracle_bit_costs(q: BinaryCode, w: WeightTable, codes: CodeSet) -> np.ndarray:
    """(n, n_bits) matrix of per-bit cost contributions, bit order preserved."""
    qb = q.bits().astype(np.intp)
    xor = codes.bit_rows().astype(np.intp) ^ qb[None, :]
    cols = np.arange(codes.n_bits)
    return w.table[cols[None, :], xor]


def oracle_chunked_rowsums(costs: np.ndarray) -> np.ndarray:
    """Canonical chunked accumulation via cumsum (independent of chunk_tables)."""
    n, b = costs.shape
    total = np.zeros(n)
    for c in range(0, b, 8):
        chunk = costs[:, c : c + 8]
        total += np.cumsum(chunk, axis=1)[:, -1]
    return total


def oracle_distances(q: BinaryCode, w: WeightTable, codes: CodeSet) -> np.ndarray:
    """Canonical weighted distances of every code to ``q``, bit-exact."""
    return oracle_chunked_rowsums(oracle_bit_costs(q, w, codes))


def oracle_topk(q: BinaryCode, w: WeightTable, codes: CodeSet, k: int):
    """Exact top-K by (distance, id) via full stable sort."""
    d = oracle_distances(q, w, codes)
    order = np.lexsort((np.arange(len(codes)), d))[: min(k, len(codes))]
    return [(int(i), float(d[i])) for i in order]


def oracle_hamming(q: BinaryCode, codes: CodeSet) -> np.ndarray:
    qb = q.bits()
    return (codes.bit_rows() ^ qb[None, :]).sum(axis=1)
