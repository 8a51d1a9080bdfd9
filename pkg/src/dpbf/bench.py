"""Workload generation, empirical FPR measurement and query latency
benchmarking, with CSV output.

Workloads are reproducible: the member set and the probe set are drawn
jointly without replacement from the universe with numpy's PCG64
generator (numpy.random.default_rng(seed)), then split, so the two are
disjoint by construction and every probe that answers positive is a
false positive.  The same seed always yields the same workload; streams
for shuffling derive from the workload seed.

Latency methodology: a warmup pass, then one timed batch pass per
repetition over a shuffled interleaving of members and non-members,
using the monotonic clock.  Per-query means come from batch totals;
individual queries sit below clock resolution.
"""

from __future__ import annotations

import math
import time
from array import array
from dataclasses import dataclass, field, fields

import numpy as np

from .baselines import DynamicBloomFilter, StandardBloomFilter, fpr_lower_bound
from .errors import CapacityError, InvalidParameterError
from .tree import PartitionBloomFilter

STRUCTURE_NAMES = ("dpbf", "dbf", "sbf")

CSV_COLUMNS = (
    "structure", "set_size", "target_fpr", "measured_fpr", "probes",
    "false_positives", "alpha", "theorem_lower_bound", "build_ms",
    "mean_query_ns", "total_bits", "unit_filter_count", "rng_seed",
)


@dataclass
class Workload:
    """A member set and a disjoint probe set over [0, universe_size)."""

    rng_seed: int
    universe_size: int
    member_set: array
    probe_set: array


@dataclass
class EvalRecord:
    structure: str
    set_size: int
    target_fpr: float
    measured_fpr: float
    probes: int
    false_positives: int
    alpha: float
    theorem_lower_bound: float
    build_ms: float
    mean_query_ns: float
    total_bits: int
    unit_filter_count: int
    rng_seed: int
    # stored alongside, not part of the CSV contract
    fpr_3sigma: float = 0.0
    repetitions: int = 1


@dataclass
class SweepConfig:
    structures: tuple = STRUCTURE_NAMES
    sizes: tuple = (100, 1000, 10_000, 100_000)
    universe_size: int = 1 << 24
    depth: int = 14
    hash_count: int = 7
    target_fpr: float = 0.01
    probe_count: int = 1_000_000
    seeds: tuple = (1, 2, 3)
    hash_seed: int = 0
    latency_repetitions: int = 1

    def validate(self) -> None:
        if not self.structures:
            raise InvalidParameterError("no structures selected")
        for name in self.structures:
            if name not in STRUCTURE_NAMES:
                raise InvalidParameterError(
                    f"unknown structure {name!r}; choose from {STRUCTURE_NAMES}")
        if not self.sizes or any(s < 0 for s in self.sizes):
            raise InvalidParameterError("sizes must be non-negative")
        if self.probe_count < 1:
            raise InvalidParameterError("probe_count must be >= 1")
        if not self.seeds:
            raise InvalidParameterError("at least one workload seed is required")
        if self.depth < 0 or self.universe_size < 1 or self.hash_count < 1:
            raise InvalidParameterError("invalid filter parameters")
        if not 0.0 < self.target_fpr < 1.0:
            raise InvalidParameterError("target_fpr must lie in (0, 1)")
        if self.latency_repetitions < 1:
            raise InvalidParameterError("latency_repetitions must be >= 1")


def generate_workload(seed: int, universe_size: int, set_size: int,
                      probe_count: int) -> Workload:
    """Draw set_size members plus probe_count probes, all distinct ids."""
    total = set_size + probe_count
    if total > universe_size:
        raise CapacityError(
            f"{total} distinct ids requested from a universe of {universe_size}")
    rng = np.random.default_rng(seed)
    if universe_size <= (1 << 20):
        picked = rng.permutation(universe_size)[:total].astype(np.uint64)
    else:
        # rejection sampling: draw with replacement, deduplicate, repeat
        chosen = np.empty(0, dtype=np.uint64)
        while len(chosen) < total:
            want = total - len(chosen)
            extra = rng.integers(0, universe_size, size=want + want // 4 + 16,
                                 dtype=np.uint64)
            chosen = np.unique(np.concatenate([chosen, extra]))
        picked = rng.permutation(chosen)[:total]
    members = array("Q", picked[:set_size].tobytes())
    probes = array("Q", picked[set_size:].tobytes())
    return Workload(seed, universe_size, members, probes)


def build_structure(name: str, cfg: SweepConfig, workload: Workload):
    """Build one structure from the workload members; returns it with the
    wall-clock build time in milliseconds."""
    members = workload.member_set
    start = time.perf_counter_ns()
    if name == "dpbf":
        structure = PartitionBloomFilter(cfg.universe_size, cfg.depth,
                                         cfg.hash_count, cfg.target_fpr,
                                         cfg.hash_seed)
        for e in members:
            structure.insert(e)
    elif name == "dbf":
        capacity = cfg.universe_size // (1 << cfg.depth)
        structure = DynamicBloomFilter.for_unit_capacity(
            capacity, cfg.hash_count, cfg.target_fpr, cfg.hash_seed)
        for e in members:
            structure.insert(e)
    elif name == "sbf":
        structure = StandardBloomFilter(max(1, len(members)), cfg.hash_count,
                                        cfg.target_fpr, cfg.hash_seed)
        if members:
            structure.insert_many(members)
    else:
        raise InvalidParameterError(f"unknown structure {name!r}")
    build_ms = (time.perf_counter_ns() - start) / 1e6
    return structure, build_ms


def _base_record(name: str, structure, workload: Workload,
                 build_ms: float) -> EvalRecord:
    n_t = structure.target_population
    set_size = len(workload.member_set)
    return EvalRecord(
        structure=name,
        set_size=set_size,
        target_fpr=structure.target_fpr,
        measured_fpr=0.0,
        probes=0,
        false_positives=0,
        alpha=set_size / n_t,
        theorem_lower_bound=fpr_lower_bound(set_size, n_t, structure.target_fpr),
        build_ms=build_ms,
        mean_query_ns=0.0,
        total_bits=structure.total_bits,
        unit_filter_count=structure.unit_filter_count,
        rng_seed=workload.rng_seed,
    )


def measure_fpr(name: str, structure, workload: Workload,
                build_ms: float = 0.0) -> EvalRecord:
    """Probe every non-member; every positive answer is a false positive."""
    record = _base_record(name, structure, workload, build_ms)
    members = workload.member_set
    hits = structure.contains_batch(members)
    assert hits == len(members), (
        f"{name}: {len(members) - hits} false negatives, the filter is broken")
    probes = workload.probe_set
    if not probes:
        return record
    start = time.perf_counter_ns()
    false_positives = structure.contains_batch(probes)
    elapsed = time.perf_counter_ns() - start
    record.probes = len(probes)
    record.false_positives = false_positives
    record.measured_fpr = false_positives / len(probes)
    record.mean_query_ns = elapsed / len(probes)
    p = record.measured_fpr
    record.fpr_3sigma = 3.0 * math.sqrt(p * (1.0 - p) / len(probes))
    return record


def measure_latency(name: str, structure, workload: Workload,
                    repetitions: int = 1, build_ms: float = 0.0) -> EvalRecord:
    """Time interleaved member and non-member queries, warm cache.

    Also derives the false positive rate from the non-member half of the
    timed sequence, so latency records carry meaningful FPR fields.
    """
    if repetitions < 1:
        raise InvalidParameterError("repetitions must be >= 1")
    record = _base_record(name, structure, workload, build_ms)
    record.repetitions = repetitions

    half = min(len(workload.member_set), len(workload.probe_set))
    members = np.frombuffer(workload.member_set, dtype=np.uint64)[:half]
    nonmembers = np.frombuffer(workload.probe_set, dtype=np.uint64)[:half]
    seq = np.concatenate([members, nonmembers])
    is_member = np.zeros(len(seq), dtype=bool)
    is_member[:half] = True
    order = np.random.default_rng((workload.rng_seed, 0x4C61)).permutation(len(seq))
    seq = array("Q", seq[order].tobytes())
    is_member = is_member[order]
    answers = np.zeros(len(seq), dtype=np.uint8)

    structure.contains_batch(seq, answers)  # warmup
    start = time.perf_counter_ns()
    for _ in range(repetitions):
        structure.contains_batch(seq, answers)
    elapsed = time.perf_counter_ns() - start

    record.mean_query_ns = elapsed / (repetitions * len(seq)) if seq else 0.0
    assert int(answers[is_member].sum()) == half, f"{name}: false negatives in timed pass"
    false_positives = int(answers[~is_member].sum())
    record.probes = len(seq) - half
    record.false_positives = false_positives
    if record.probes:
        p = false_positives / record.probes
        record.measured_fpr = p
        record.fpr_3sigma = 3.0 * math.sqrt(p * (1.0 - p) / record.probes)
    return record


def sweep(cfg: SweepConfig, mode: str = "fpr") -> list[EvalRecord]:
    """Measure every structure x size x seed point, in that nesting order."""
    cfg.validate()
    if mode not in ("fpr", "latency"):
        raise InvalidParameterError(f"mode must be 'fpr' or 'latency', got {mode!r}")
    workloads = {}
    records = []
    for name in cfg.structures:
        for size in cfg.sizes:
            for seed in cfg.seeds:
                key = (size, seed)
                if key not in workloads:
                    workloads[key] = generate_workload(seed, cfg.universe_size,
                                                       size, cfg.probe_count)
                workload = workloads[key]
                structure, build_ms = build_structure(name, cfg, workload)
                if mode == "fpr":
                    records.append(measure_fpr(name, structure, workload, build_ms))
                else:
                    records.append(measure_latency(name, structure, workload,
                                                   cfg.latency_repetitions,
                                                   build_ms))
    return records


def _csv_cell(value) -> str:
    # repr of a float is its shortest round-trip decimal form
    return repr(value) if isinstance(value, float) else str(value)


def format_csv(records) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for r in records:
        lines.append(",".join(_csv_cell(getattr(r, c)) for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def write_csv(records, stream) -> None:
    stream.write(format_csv(records))
