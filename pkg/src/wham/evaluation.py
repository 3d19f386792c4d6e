"""Precision, speed-up, ground truth, and the benchmark harness.

The harness times methods over a shared query set and reports one row
per (method, K): mean per-query wall time, speed-up against the linear
scan row, precision against the configured ground truth, and the mean
probed-bucket / evaluated-candidate counts for the index methods.
Result sets are deterministic under a fixed seed; timings are not.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .baselines import linear_scan_topk, mih_weighted_topk
from .codes import CodeSet
from .errors import DimensionError
from .fixtures import binarize_lsh, synth_weights
from .io import VectorSet
from .multi_index import build_multi, query_multi

__all__ = [
    "GroundTruth",
    "BenchConfig",
    "BenchRecord",
    "precision_at_k",
    "speedup_factor",
    "euclidean_groundtruth",
    "run_benchmark",
]


@dataclass(frozen=True)
class GroundTruth:
    """Per query, the ordered ids of its true neighbors."""

    ids: np.ndarray

    def __post_init__(self):
        if self.ids.ndim != 2:
            raise ValueError("ground truth must be (n_queries, T)")

    @property
    def n_queries(self) -> int:
        return self.ids.shape[0]

    @property
    def depth(self) -> int:
        return self.ids.shape[1]


def precision_at_k(retrieved, truth_entry, k: int) -> float:
    """Fraction of the first k retrieved ids that appear in the truth list."""
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    got = list(retrieved)[:k]
    hits = len(set(got) & set(int(i) for i in np.asarray(truth_entry).ravel()))
    return hits / k


def speedup_factor(t_linear: float, t_method: float) -> float:
    """How many times faster than the linear scan a method ran."""
    if t_method <= 0:
        raise ValueError(f"method time must be positive, got {t_method}")
    return t_linear / t_method


def euclidean_groundtruth(base: VectorSet, queries: VectorSet, t: int) -> GroundTruth:
    """Top-t ids per query by squared Euclidean distance, ties by id."""
    if base.d != queries.d:
        raise DimensionError(
            f"query dimension {queries.d} does not match base dimension {base.d}"
        )
    if t < 1:
        raise ValueError(f"t must be positive, got {t}")
    n = base.n
    take = min(t, n)
    x = base.values.astype(np.float64)
    sq = (x * x).sum(axis=1)
    out = np.empty((queries.n, take), dtype=np.int64)
    ids = np.arange(n)
    for qi in range(queries.n):
        q = queries.values[qi].astype(np.float64)
        d2 = sq - 2.0 * (x @ q) + float(q @ q)
        order = np.lexsort((ids, d2))[:take]
        out[qi] = order
    return GroundTruth(out)


@dataclass(frozen=True)
class BenchConfig:
    """Grid and protocol for one benchmark run.

    ``truth="weighted"`` scores methods against the exact weighted
    ranking (the linear scan); ``truth="euclidean"`` generates Gaussian
    vectors, binarizes them, and scores against Euclidean neighbors of
    the original vectors.
    """

    n: int = 10_000
    n_queries: int = 100
    n_bits: int = 32
    m: object = "auto"
    k_values: tuple = (10,)
    methods: tuple = ("linear", "miwq")
    scheme: str = "uniform-asym"
    truth: str = "weighted"
    d: int = 64
    seed: int = 0
    warmup: int = 10
    repetitions: int = 1
    engine: str = "auto"

    @classmethod
    def from_dict(cls, raw: dict) -> "BenchConfig":
        allowed = set(cls.__dataclass_fields__)
        bad = set(raw) - allowed
        if bad:
            raise ValueError(f"unknown config keys: {sorted(bad)}")
        cfg = dict(raw)
        for key in ("k_values", "methods"):
            if key in cfg and isinstance(cfg[key], list):
                cfg[key] = tuple(cfg[key])
        return cls(**cfg)

    def __post_init__(self):
        for meth in self.methods:
            if meth not in ("linear", "miwq", "mih"):
                raise ValueError(f"unknown method {meth!r}")
        if self.truth not in ("weighted", "euclidean"):
            raise ValueError(f"unknown truth kind {self.truth!r}")
        if self.n < 1 or self.n_queries < 1:
            raise ValueError("n and n_queries must be positive")
        if any(k < 1 for k in self.k_values):
            raise ValueError("k values must be positive")
        if self.repetitions < 1:
            raise ValueError("repetitions must be positive")


@dataclass
class BenchRecord:
    method: str
    b: int
    m: int
    k: int
    mean_ms: float
    speedup: object
    precision: float
    mean_candidates: float
    mean_buckets: float


_CSV_COLUMNS = [
    "method", "b", "m", "k", "mean_ms", "speedup",
    "precision", "mean_candidates", "mean_buckets",
]


def _time_method(fn, queries, warmup: int, repetitions: int):
    """Mean wall-clock ms per query plus the (deterministic) results."""
    for q in queries[: max(1, warmup)]:
        fn(q)
    results = []
    start = time.perf_counter()
    for _ in range(repetitions):
        results = [fn(q) for q in queries]
    elapsed = time.perf_counter() - start
    return elapsed / (repetitions * len(queries)) * 1e3, results


def run_benchmark(config: BenchConfig, out_dir=None) -> list[BenchRecord]:
    """Run the configured grid and return one record per (method, K).

    Index build and ground-truth computation happen before any clock
    starts.  When ``out_dir`` is given, ``bench.csv`` and ``bench.json``
    are written there, the JSON echoing the config.
    """
    rng = np.random.default_rng(config.seed)
    b = config.n_bits
    w = synth_weights(b, seed=config.seed + 1, scheme=config.scheme)

    if config.truth == "euclidean":
        base_vecs = VectorSet(
            rng.standard_normal((config.n, config.d)).astype(np.float32)
        )
        query_vecs = VectorSet(
            rng.standard_normal((config.n_queries, config.d)).astype(np.float32)
        )
        codes = binarize_lsh(base_vecs, b, seed=config.seed + 2)
        queries = list(binarize_lsh(query_vecs, b, seed=config.seed + 2))
        truth_by_k = {
            k: euclidean_groundtruth(base_vecs, query_vecs, k)
            for k in config.k_values
        }
    else:
        nbytes = (b + 7) // 8
        mat = rng.integers(0, 256, size=(config.n, nbytes), dtype=np.uint8)
        qmat = rng.integers(0, 256, size=(config.n_queries, nbytes), dtype=np.uint8)
        rem = b % 8
        if rem:
            mat[:, -1] &= (1 << rem) - 1
            qmat[:, -1] &= (1 << rem) - 1
        codes = CodeSet(mat, b)
        queries = list(CodeSet(qmat, b))
        truth_by_k = None  # weighted truth: the linear scan itself

    ix = build_multi(codes, m=config.m)

    records: list[BenchRecord] = []
    for k in config.k_values:
        if truth_by_k is None:
            truth = GroundTruth(
                np.array(
                    [[i for i, _ in linear_scan_topk(codes, q, w, k)] for q in queries],
                    dtype=np.int64,
                ).reshape(len(queries), -1)
            )
        else:
            truth = truth_by_k[k]

        rows: dict[str, BenchRecord] = {}
        for method in config.methods:
            if method == "linear":
                fn = lambda q: linear_scan_topk(codes, q, w, k)
                stats_fn = lambda q, res: (float(len(codes)), 0.0)
            elif method == "miwq":
                fn = lambda q: query_multi(ix, q, w, k, engine=config.engine)
                def stats_fn(q, res, _k=k):
                    _, st = query_multi(ix, q, w, _k, engine=config.engine, return_stats=True)
                    return float(st.candidates_evaluated), float(st.buckets_probed)
            else:
                fn = lambda q: mih_weighted_topk(ix, q, w, k)
                def stats_fn(q, res, _k=k):
                    _, st = mih_weighted_topk(ix, q, w, _k, return_stats=True)
                    return float(st.candidates_collected), float(st.buckets_probed)

            mean_ms, results = _time_method(fn, queries, config.warmup, config.repetitions)
            precisions = [
                precision_at_k([i for i, _ in res], truth.ids[qi], k)
                for qi, res in enumerate(results)
            ]
            stat_pairs = [stats_fn(q, res) for q, res in zip(queries, results)]
            rows[method] = BenchRecord(
                method=method,
                b=b,
                m=ix.m,
                k=k,
                mean_ms=mean_ms,
                speedup=None,
                precision=float(np.mean(precisions)),
                mean_candidates=float(np.mean([c for c, _ in stat_pairs])),
                mean_buckets=float(np.mean([p for _, p in stat_pairs])),
            )

        linear_ms = rows["linear"].mean_ms if "linear" in rows else None
        for rec in rows.values():
            if linear_ms is not None:
                rec.speedup = speedup_factor(linear_ms, rec.mean_ms)
        records.extend(rows[m_] for m_ in config.methods)

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "bench.csv", "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=_CSV_COLUMNS)
            writer.writeheader()
            for rec in records:
                row = asdict(rec)
                row["speedup"] = "" if rec.speedup is None else f"{rec.speedup:.4f}"
                writer.writerow(row)
        with open(out / "bench.json", "w") as f:
            json.dump(
                {"config": asdict(config), "records": [asdict(r) for r in records]},
                f,
                indent=2,
            )
    return records
