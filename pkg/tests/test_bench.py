import io

import numpy as np
import pytest

from dpbf.bench import (CSV_COLUMNS, EvalRecord, SweepConfig, build_structure,
                        format_csv, generate_workload, measure_fpr,
                        measure_latency, sweep)
from dpbf.errors import CapacityError, InvalidParameterError

SMALL = SweepConfig(
    sizes=(10, 100),
    universe_size=1 << 16,
    depth=6,
    hash_count=4,
    target_fpr=0.02,
    probe_count=10_000,
    seeds=(1, 2),
)


class TestWorkloads:
    def test_reproducible(self):
        a = generate_workload(9, 1 << 20, 500, 2000)
        b = generate_workload(9, 1 << 20, 500, 2000)
        assert a.member_set == b.member_set
        assert a.probe_set == b.probe_set

    def test_disjoint_by_construction(self):
        w = generate_workload(3, 1 << 24, 10_000, 100_000)
        members = np.sort(np.frombuffer(w.member_set, dtype=np.uint64))
        probes = np.sort(np.frombuffer(w.probe_set, dtype=np.uint64))
        assert len(np.intersect1d(members, probes)) == 0
        assert len(np.unique(members)) == len(members)
        assert len(np.unique(probes)) == len(probes)

    def test_small_universe_path(self):
        w = generate_workload(5, 1000, 400, 600)
        ids = sorted(list(w.member_set) + list(w.probe_set))
        assert ids == sorted(set(ids))
        assert all(0 <= e < 1000 for e in ids)

    def test_empty_member_set(self):
        w = generate_workload(1, 1 << 16, 0, 100)
        assert len(w.member_set) == 0
        assert len(w.probe_set) == 100

    def test_capacity_error(self):
        with pytest.raises(CapacityError):
            generate_workload(1, 100, 60, 60)


class TestMeasurement:
    def test_fpr_record_fields(self):
        w = generate_workload(4, SMALL.universe_size, 100, SMALL.probe_count)
        structure, build_ms = build_structure("dpbf", SMALL, w)
        record = measure_fpr("dpbf", structure, w, build_ms)
        assert record.probes == SMALL.probe_count
        assert record.measured_fpr == record.false_positives / record.probes
        assert record.alpha == 100 / structure.target_population
        assert record.total_bits == structure.total_bits
        assert record.build_ms == build_ms
        assert record.mean_query_ns > 0
        assert record.fpr_3sigma >= 0

    def test_fpr_detects_false_negatives(self):
        class Broken:
            target_population = 1
            target_fpr = 0.5
            total_bits = 0
            unit_filter_count = 0

            def contains_batch(self, elements, out=None):
                return 0

        w = generate_workload(4, 1 << 16, 10, 100)
        with pytest.raises(AssertionError, match="false negatives"):
            measure_fpr("broken", Broken(), w)

    def test_latency_record(self):
        w = generate_workload(8, SMALL.universe_size, 200, SMALL.probe_count)
        structure, _ = build_structure("dbf", SMALL, w)
        record = measure_latency("dbf", structure, w, repetitions=3)
        assert record.repetitions == 3
        assert record.mean_query_ns > 0
        assert record.probes == 200  # non-member half of the timed pass

    def test_latency_stability_across_repetitions(self):
        w = generate_workload(8, SMALL.universe_size, 16_384, 16_384)
        structure, _ = build_structure("sbf", SMALL, w)
        one = measure_latency("sbf", structure, w, repetitions=1)
        many = measure_latency("sbf", structure, w, repetitions=100)
        hi = max(one.mean_query_ns, many.mean_query_ns)
        assert abs(one.mean_query_ns - many.mean_query_ns) <= 0.5 * hi

    def test_single_unit_structures_query_alike(self):
        # below one unit of load both structures probe exactly one filter
        size = SMALL.universe_size >> SMALL.depth  # one leaf's worth
        w = generate_workload(2, SMALL.universe_size, size, 50_000)
        dpbf_f, _ = build_structure("dpbf", SMALL, w)
        dbf_f, _ = build_structure("dbf", SMALL, w)
        assert dbf_f.filter_count == 1
        a = measure_latency("dpbf", dpbf_f, w, repetitions=20)
        b = measure_latency("dbf", dbf_f, w, repetitions=20)
        ratio = a.mean_query_ns / b.mean_query_ns
        assert 1 / 3 <= ratio <= 3


class TestSweep:
    def test_record_count_and_order(self):
        records = sweep(SMALL, mode="fpr")
        assert len(records) == 3 * 2 * 2
        expect = [(name, size, seed)
                  for name in SMALL.structures
                  for size in SMALL.sizes
                  for seed in SMALL.seeds]
        assert [(r.structure, r.set_size, r.rng_seed) for r in records] == expect

    def test_reproducible_measurements(self):
        first = sweep(SMALL, mode="fpr")
        second = sweep(SMALL, mode="fpr")
        for a, b in zip(first, second):
            assert a.false_positives == b.false_positives
            assert a.measured_fpr == b.measured_fpr
            assert a.total_bits == b.total_bits

    def test_dbf_fpr_nondecreasing_in_set_size(self):
        cfg = SweepConfig(structures=("dbf",), sizes=(64, 512, 4096),
                          universe_size=1 << 16, depth=8, hash_count=4,
                          target_fpr=0.02, probe_count=50_000, seeds=(3,))
        records = sweep(cfg, mode="fpr")
        rates = [r.measured_fpr for r in records]
        assert rates == sorted(rates)

    def test_invalid_configs(self):
        for cfg in (SweepConfig(structures=("nope",)),
                    SweepConfig(sizes=()),
                    SweepConfig(probe_count=0),
                    SweepConfig(seeds=()),
                    SweepConfig(target_fpr=0.0),
                    SweepConfig(latency_repetitions=0)):
            with pytest.raises(InvalidParameterError):
                cfg.validate()
        with pytest.raises(InvalidParameterError):
            sweep(SMALL, mode="nope")


class TestCsv:
    def test_header_exact(self):
        text = format_csv([])
        assert text == ("structure,set_size,target_fpr,measured_fpr,probes,"
                        "false_positives,alpha,theorem_lower_bound,build_ms,"
                        "mean_query_ns,total_bits,unit_filter_count,rng_seed\n")

    def test_floats_round_trip(self):
        record = EvalRecord(
            structure="dpbf", set_size=10, target_fpr=0.01,
            measured_fpr=1 / 3, probes=300, false_positives=100,
            alpha=0.7071067811865476, theorem_lower_bound=0.03940399,
            build_ms=1.25, mean_query_ns=17.333333333333332,
            total_bits=45, unit_filter_count=9, rng_seed=1)
        line = format_csv([record]).splitlines()[1]
        cells = dict(zip(CSV_COLUMNS, line.split(",")))
        for column in ("measured_fpr", "alpha", "theorem_lower_bound",
                       "build_ms", "mean_query_ns", "target_fpr"):
            assert float(cells[column]) == getattr(record, column)
        assert cells["structure"] == "dpbf"
        assert cells["total_bits"] == "45"

    def test_write_csv_stream(self):
        from dpbf.bench import write_csv

        buffer = io.StringIO()
        write_csv([], buffer)
        assert buffer.getvalue().startswith("structure,")
