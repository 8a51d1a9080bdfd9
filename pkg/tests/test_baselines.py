import math

import numpy as np
import pytest

from dpbf import (DynamicBloomFilter, StandardBloomFilter, estimated_fpr,
                  fpr_lower_bound, population_for, size_for)
from dpbf.errors import InvalidParameterError


def small_dbf(seed=7):
    # 4-element units at a high rate so lists grow quickly in tests
    return DynamicBloomFilter.for_unit_capacity(4, 2, 0.7, seed)


class TestDynamicGrowth:
    def test_empty(self):
        d = small_dbf()
        assert d.filter_count == 0
        assert not d.query(123)
        assert d.theoretical_fpr() == 0.0

    def test_exactly_one_unit_at_capacity(self):
        d = small_dbf()
        for e in range(4):
            d.insert(e)
        assert d.filter_count == 1
        assert d.counts == [4]

    def test_capacity_plus_one_opens_second_unit(self):
        d = small_dbf()
        for e in range(5):
            d.insert(e)
        assert d.filter_count == 2
        assert d.counts == [4, 1]

    @pytest.mark.parametrize("inserts,expected", [(1, 1), (4, 1), (6, 2),
                                                  (9, 3), (12, 3), (13, 4)])
    def test_list_length_is_ceil_alpha(self, inserts, expected):
        d = small_dbf()
        for e in range(inserts):
            d.insert(e)
        assert d.filter_count == math.ceil(inserts / 4) == expected

    def test_all_but_last_full(self):
        d = small_dbf()
        for e in range(47):
            d.insert(e)
        *full, last = d.counts
        assert all(c == 4 for c in full)
        assert 0 < last <= 4

    def test_duplicates_count(self):
        d = small_dbf()
        for _ in range(9):
            d.insert(0)
        assert d.counts == [4, 4, 1]
        assert d.insert_total == 9

    def test_filters_property(self):
        d = small_dbf()
        for e in range(6):
            d.insert(e)
        filters = d.filters
        assert len(filters) == 2
        assert filters[0][1] == 4 and filters[1][1] == 2
        assert all(isinstance(bits, bytes) for bits, _ in filters)
        assert d.total_bits == 2 * d.bits_per_filter

    def test_rejects_useless_width(self):
        with pytest.raises(InvalidParameterError):
            DynamicBloomFilter(1, 1, 0.01)


class TestDynamicQuery:
    def test_no_false_negatives_across_list(self):
        rng = np.random.default_rng(17)
        d = DynamicBloomFilter.for_unit_capacity(64, 4, 0.05, 17)
        members = rng.integers(0, 1 << 40, size=1_000, dtype=np.uint64)
        for e in members:
            d.insert(int(e))
        assert d.filter_count == math.ceil(len(members) / d.target_population)
        assert d.contains_batch(members) == len(members)
        for e in members[:200]:
            assert d.query(int(e))

    def test_batch_matches_scalar(self):
        d = small_dbf()
        for e in range(0, 40, 3):
            d.insert(e)
        elements = np.arange(64, dtype=np.uint64)
        out = np.zeros(64, dtype=np.uint8)
        hits = d.contains_batch(elements, out)
        scalar = [d.query(int(e)) for e in elements]
        assert hits == sum(scalar)
        assert [bool(v) for v in out] == scalar

    def test_measured_fpr_respects_lower_bound(self):
        # alpha = 4: four full units, each at its population target
        capacity, k, f, seed = 1024, 7, 0.01, 5
        d = DynamicBloomFilter.for_unit_capacity(capacity, k, f, seed)
        for e in range(4 * capacity):
            d.insert(e)
        probes = np.arange(1 << 20, (1 << 20) + 1_000_000, dtype=np.uint64)
        measured = d.contains_batch(probes) / len(probes)
        bound = fpr_lower_bound(4 * capacity, d.target_population, f)
        assert measured >= 0.7 * bound
        assert measured <= 2.0 * bound


class TestTheoreticalFpr:
    def test_single_full_unit_equals_target(self):
        d = small_dbf()
        for e in range(4):
            d.insert(e)
        assert d.theoretical_fpr() == 0.7

    def test_three_full_units(self):
        d = DynamicBloomFilter.for_unit_capacity(1024, 7, 0.01, 1)
        for e in range(3 * 1024):
            d.insert(e)
        assert abs(d.theoretical_fpr() - 0.029701) < 1e-15

    def test_partial_tail_uses_estimate(self):
        d = DynamicBloomFilter.for_unit_capacity(1024, 7, 0.01, 1)
        for e in range(1024 + 100):
            d.insert(e)
        tail = estimated_fpr(100, d.bits_per_filter, 7)
        expect = 0.01 + (1 - 0.01) * tail
        assert abs(d.theoretical_fpr() - expect) < 1e-12

    def test_dominates_lower_bound_on_every_reachable_state(self):
        d = DynamicBloomFilter.for_unit_capacity(64, 4, 0.02, 3)
        previous = 0.0
        for n in range(1, 1000):
            d.insert(n)
            theoretical = d.theoretical_fpr()
            bound = fpr_lower_bound(n, d.target_population, 0.02)
            assert theoretical >= bound, f"violated at n={n}"
            assert theoretical >= previous, f"not monotone at n={n}"
            previous = theoretical


class TestStandardBloomFilter:
    def test_sizing(self):
        s = StandardBloomFilter(1000, 7, 0.01, 3)
        assert s.bits_per_filter == size_for(1000, 7, 0.01)
        assert s.target_population == population_for(s.bits_per_filter, 7, 0.01)
        assert s.target_population >= 1000
        assert s.unit_filter_count == 1

    def test_membership(self):
        s = StandardBloomFilter(100, 4, 0.05, 9)
        members = np.arange(100, dtype=np.uint64)
        s.insert_many(members)
        assert s.insert_count == 100
        assert s.contains_batch(members) == 100
        assert s.query(50)

    def test_empirical_fpr_at_capacity(self):
        s = StandardBloomFilter(1000, 7, 0.01, 21)
        s.insert_many(np.arange(1000, dtype=np.uint64))
        probes = np.arange(1 << 20, (1 << 20) + 1_000_000, dtype=np.uint64)
        assert s.contains_batch(probes) / len(probes) <= 1.3 * 0.01
