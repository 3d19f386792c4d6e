"""Seeded fixtures that turn real vectors into codes and weights.

These exist so the engines have reproducible inputs; nothing in the
index or query path depends on how codes or weights were produced.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codes import MAX_BITS, CodeSet, WeightTable
from .errors import UnsupportedLengthError
from .io import VectorSet

__all__ = [
    "LshModel",
    "make_lsh_model",
    "apply_lsh",
    "binarize_lsh",
    "synth_weights",
]


@dataclass(frozen=True)
class LshModel:
    """Random-hyperplane signs: bit i is 1 iff x . projections[i] >= thresholds[i]."""

    seed: int
    projections: np.ndarray
    thresholds: np.ndarray

    @property
    def n_bits(self) -> int:
        return self.projections.shape[0]

    @property
    def d(self) -> int:
        return self.projections.shape[1]


def make_lsh_model(d: int, n_bits: int, seed: int) -> LshModel:
    if not 1 <= n_bits <= MAX_BITS:
        raise UnsupportedLengthError(
            f"n_bits must be in [1, {MAX_BITS}], got {n_bits}"
        )
    if d < 1:
        raise ValueError(f"vector dimension must be positive, got {d}")
    rng = np.random.default_rng(seed)
    proj = rng.standard_normal((n_bits, d))
    return LshModel(int(seed), proj, np.zeros(n_bits))


def apply_lsh(model: LshModel, values: np.ndarray) -> CodeSet:
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.d:
        raise ValueError(
            f"expected (n, {model.d}) vectors, got shape {x.shape}"
        )
    bits = x @ model.projections.T >= model.thresholds[None, :]
    return CodeSet.from_bit_rows(bits)


def binarize_lsh(vs: VectorSet, n_bits: int, seed: int) -> CodeSet:
    """Hash every vector to an n_bits code; same data and seed, same codes."""
    model = make_lsh_model(vs.d if vs.n else 1, n_bits, seed)
    if vs.n == 0:
        return CodeSet.empty(n_bits)
    return apply_lsh(model, vs.values)


def synth_weights(n_bits: int, seed: int, scheme: str = "uniform-asym") -> WeightTable:
    """Seeded weight tables.

    ``unit`` gives w_i(0)=0, w_i(1)=1 (plain Hamming); ``uniform-asym``
    keeps matches free and draws each mismatch cost from U[0.5, 1.5].
    """
    if scheme == "unit":
        return WeightTable.unit(n_bits)
    if scheme == "uniform-asym":
        rng = np.random.default_rng(seed)
        t = np.zeros((n_bits, 2))
        t[:, 1] = rng.uniform(0.5, 1.5, size=n_bits)
        return WeightTable(t)
    raise ValueError(f"unknown weight scheme {scheme!r}")
