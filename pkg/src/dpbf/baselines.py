"""Baseline structures: the append-only dynamic Bloom filter and a plain
standard Bloom filter.

The dynamic Bloom filter (Guo et al., "The Dynamic Bloom Filters", IEEE
TKDE 2010) grows by appending unit filters: elements go into the last
filter until it reaches its population target, then a fresh empty
filter starts.  Queries probe every filter in the list, so with q full
filters a non-member survives only if all q reject it, and the false
positive rate is at least 1 - (1 - f_t)^q.  That lower bound grows
roughly linearly in the stored set size, which is the behavior the
partition filter is built to avoid.
"""

from __future__ import annotations

from . import kernels
from .bloom import compound_fpr, estimated_fpr, population_for, size_for, _check_count, _check_fpr
from .errors import InvalidParameterError


def fpr_lower_bound(set_size: int, target_population: int, target_fpr: float) -> float:
    """Lower bound 1 - (1 - f)^floor(set_size / target_population) on the
    false positive rate of a dynamic Bloom filter holding set_size
    elements.  Zero while the set still fits a single unit filter."""
    _check_count("set_size", set_size, minimum=0)
    _check_count("target_population", target_population)
    _check_fpr(target_fpr)
    bound, _ = compound_fpr(set_size // target_population, target_fpr)
    return bound


class StandardBloomFilter:
    """A single fixed-size Bloom filter provisioned for a known capacity."""

    __slots__ = ("capacity", "hash_count", "target_fpr", "hash_seed",
                 "bits_per_filter", "_salts", "_bits", "insert_count")

    def __init__(self, capacity: int, hash_count: int = 7,
                 target_fpr: float = 0.01, hash_seed: int = 0):
        _check_count("capacity", capacity)
        self.capacity = capacity
        self.hash_count = _check_count("hash_count", hash_count)
        _check_fpr(target_fpr)
        self.target_fpr = float(target_fpr)
        self.hash_seed = hash_seed
        self.bits_per_filter = size_for(capacity, hash_count, target_fpr)
        self._salts = kernels.derive_salts(hash_seed)
        self._bits = bytearray((self.bits_per_filter + 7) // 8)
        self.insert_count = 0

    def insert(self, element: int) -> None:
        s1, s2 = self._salts
        kernels.set_bits(self._bits, self.bits_per_filter, self.hash_count,
                         s1, s2, element)
        self.insert_count += 1

    def insert_many(self, elements) -> None:
        view = kernels.as_u64_view(elements)
        s1, s2 = self._salts
        kernels.set_bits_many(self._bits, self.bits_per_filter,
                              self.hash_count, s1, s2, view)
        self.insert_count += len(view)

    def query(self, element: int) -> bool:
        s1, s2 = self._salts
        return bool(kernels.test_bits(self._bits, self.bits_per_filter,
                                      self.hash_count, s1, s2, element))

    def contains_batch(self, elements, out=None) -> int:
        s1, s2 = self._salts
        return kernels.count_hits(self._bits, self.bits_per_filter,
                                  self.hash_count, s1, s2,
                                  kernels.as_u64_view(elements), out)

    @property
    def target_population(self) -> int:
        return population_for(self.bits_per_filter, self.hash_count, self.target_fpr)

    @property
    def unit_filter_count(self) -> int:
        return 1

    @property
    def total_bits(self) -> int:
        return self.bits_per_filter


class DynamicBloomFilter:
    """Append-only list of homogeneous unit filters.

    Every filter except the last holds exactly target_population
    elements; the last holds between 1 and target_population (the list
    may also be empty).  A fresh filter is appended lazily on the first
    insert after the last one fills, which keeps the invariant clean
    with identical observable behavior.  Duplicate inserts increment
    counts, mirroring the partition filter's policy.

    Filters are stored back to back in one buffer so the query loop
    walks contiguous memory.
    """

    __slots__ = ("bits_per_filter", "hash_count", "target_fpr", "hash_seed",
                 "target_population", "_salts", "_stride", "_bits", "counts")

    def __init__(self, bits_per_filter: int, hash_count: int = 7,
                 target_fpr: float = 0.01, hash_seed: int = 0):
        self.bits_per_filter = _check_count("bits_per_filter", bits_per_filter)
        self.hash_count = _check_count("hash_count", hash_count)
        _check_fpr(target_fpr)
        self.target_fpr = float(target_fpr)
        self.hash_seed = hash_seed
        self.target_population = population_for(bits_per_filter, hash_count, target_fpr)
        if self.target_population < 1:
            raise InvalidParameterError(
                f"{bits_per_filter} bits cannot hold even one element at rate {target_fpr}")
        self._salts = kernels.derive_salts(hash_seed)
        self._stride = (bits_per_filter + 7) // 8
        self._bits = bytearray()
        self.counts: list[int] = []

    @classmethod
    def for_unit_capacity(cls, capacity: int, hash_count: int = 7,
                          target_fpr: float = 0.01, hash_seed: int = 0
                          ) -> "DynamicBloomFilter":
        """Size each unit filter for `capacity` elements at the target rate."""
        return cls(size_for(capacity, hash_count, target_fpr),
                   hash_count, target_fpr, hash_seed)

    def insert(self, element: int) -> None:
        if not self.counts or self.counts[-1] >= self.target_population:
            self._bits += bytes(self._stride)
            self.counts.append(0)
        s1, s2 = self._salts
        offset = (len(self.counts) - 1) * self._stride
        view = memoryview(self._bits)[offset:offset + self._stride]
        kernels.set_bits(view, self.bits_per_filter, self.hash_count,
                         s1, s2, element)
        view.release()
        self.counts[-1] += 1

    def query(self, element: int) -> bool:
        if not self.counts:
            return False
        s1, s2 = self._salts
        return bool(kernels.list_test(self._bits, len(self.counts), self._stride,
                                      self.bits_per_filter, self.hash_count,
                                      s1, s2, element))

    def contains_batch(self, elements, out=None) -> int:
        view = kernels.as_u64_view(elements)
        if not self.counts:
            if out is not None:
                for i in range(len(view)):
                    out[i] = 0
            return 0
        s1, s2 = self._salts
        return kernels.list_count_hits(self._bits, len(self.counts), self._stride,
                                       self.bits_per_filter, self.hash_count,
                                       s1, s2, view, out)

    def theoretical_fpr(self) -> float:
        """1 - prod(1 - fpr_i) over the list.

        Full filters contribute exactly the target rate (they are sized
        so their population target meets it); the partial tail filter
        contributes its estimated rate.  Computed so the result is never
        below fpr_lower_bound for the same insert total, exactly, in
        binary64: both share the same compound survival term and the
        tail only adds a non-negative product.
        """
        full = sum(1 for c in self.counts if c >= self.target_population)
        partial = [c for c in self.counts if c < self.target_population]
        assert len(partial) <= 1, "only the last filter may be partial"
        bound, survival = compound_fpr(full, self.target_fpr)
        if partial:
            bound += survival * estimated_fpr(partial[0], self.bits_per_filter,
                                              self.hash_count)
        return bound

    @property
    def filter_count(self) -> int:
        return len(self.counts)

    @property
    def filters(self) -> list[tuple[bytes, int]]:
        """The (bit array, insert count) pairs, oldest first."""
        st = self._stride
        return [(bytes(self._bits[i * st:(i + 1) * st]), c)
                for i, c in enumerate(self.counts)]

    @property
    def unit_filter_count(self) -> int:
        return len(self.counts)

    @property
    def total_bits(self) -> int:
        return len(self.counts) * self.bits_per_filter

    @property
    def insert_total(self) -> int:
        return sum(self.counts)
