"""Unit Bloom filter primitives and the sizing formulas shared by every
structure in this package.

A family of unit Bloom filters is described by one FilterParams value:
every filter in the family has the same bit width, probe count and hash
seed, so their bit arrays can be OR-ed and AND-ed together to realise
set union and intersection.

Sizing inverts the classic false positive approximation
fpr(n, m, k) = (1 - e^(-nk/m))^k.  For a target rate f and capacity n,

    size_for(n, k, f)       = ceil(-n*k / ln(1 - f**(1/k)))
    population_for(m, k, f) = floor(-(m/k) * ln(1 - f**(1/k)))

size_for ceils and population_for floors, so both directions err toward
a lower false positive rate and population_for(size_for(n)) >= n.

The formulas are evaluated with the stdlib decimal module at 40
significant digits and rounded once to binary64.  That makes the
returned values correctly rounded and identical across platforms, where
a straight libm evaluation drifts by several ulps once the outer k-th
power amplifies the base's rounding error.

Probe positions use Kirsch-Mitzenmacher double hashing (probe i lands
on (h1 + i*h2) mod m with h2 forced odd), giving k probes from a single
seeded 128-bit hash evaluation; see Kirsch & Mitzenmacher, "Less
hashing, same performance" (2006).
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from decimal import Decimal, localcontext

from . import kernels
from .errors import InvalidParameterError, OutOfUniverseError, ParameterMismatchError

_PREC = 40
_MAX_BITS = sys.maxsize * 8  # addressable bytearray limit


def _check_fpr(f) -> None:
    if not isinstance(f, (int, float)) or isinstance(f, bool):
        raise InvalidParameterError(f"target fpr must be a real number, got {f!r}")
    if not 0.0 < float(f) < 1.0:
        raise InvalidParameterError(f"target fpr must lie in (0, 1), got {f!r}")


def _check_count(name, value, minimum=1) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise InvalidParameterError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise InvalidParameterError(f"{name} must be >= {minimum}, got {value}")
    return value


def _ln_one_minus_root(k: int, f: float) -> Decimal:
    """ln(1 - f^(1/k)) as a 40-digit Decimal (always negative)."""
    df = Decimal(f)
    t = (df.ln() / k).exp()
    u = 1 - t
    if u == 1:
        # t fell below working precision; ln(1 - t) = -t to 40 digits
        return -t
    return u.ln()


def size_for(n: int, k: int, f: float) -> int:
    """Bits needed to hold n elements with k hashes at false positive rate f."""
    _check_count("n", n)
    _check_count("k", k)
    _check_fpr(f)
    with localcontext() as ctx:
        ctx.prec = _PREC
        v = _ln_one_minus_root(k, float(f))
        m = int((-Decimal(n * k) / v).to_integral_value(rounding="ROUND_CEILING"))
    if m > _MAX_BITS:
        raise OverflowError(f"required bit array of {m} bits exceeds the addressable size")
    return m


def population_for(m: int, k: int, f: float) -> int:
    """Largest population an m-bit, k-hash filter can hold at rate f.

    Floors so the bound is conservative; may be 0 when m is too small.
    """
    _check_count("m", m)
    _check_count("k", k)
    _check_fpr(f)
    with localcontext() as ctx:
        ctx.prec = _PREC
        v = _ln_one_minus_root(k, float(f))
        return int((-(Decimal(m) / k) * v).to_integral_value(rounding="ROUND_FLOOR"))


def estimated_fpr(n: int, m: int, k: int) -> float:
    """The classic approximation (1 - e^(-nk/m))^k.

    This is the expected false positive rate of an m-bit, k-hash filter
    holding n elements, not the exact expectation over bit states.
    """
    _check_count("n", n, minimum=0)
    _check_count("m", m)
    _check_count("k", k)
    if n == 0:
        return 0.0
    with localcontext() as ctx:
        ctx.prec = _PREC
        x = Decimal(-(n * k)) / Decimal(m)
        return float((1 - x.exp()) ** k)


def compound_fpr(rounds: int, f: float) -> tuple[float, float]:
    """(1 - (1-f)^rounds, (1-f)^rounds), both correctly rounded.

    The first component is the false positive rate of `rounds`
    independent probes each failing with rate f; the second is the
    matching survival probability.
    """
    _check_count("rounds", rounds, minimum=0)
    _check_fpr(f)
    if rounds == 0:
        return 0.0, 1.0
    with localcontext() as ctx:
        ctx.prec = _PREC
        s = (1 - Decimal(float(f))) ** rounds
        return float(1 - s), float(s)


@dataclass(frozen=True)
class FilterParams:
    """Shared configuration of one homogeneous family of unit filters.

    universe_size is rounded up to the next multiple of 2**depth so the
    namespace splits into equal leaf ranges; padding ids are valid to
    query but are never inserted by well-behaved callers.  The derived
    fields are target_population (elements per leaf namespace) and
    bits_per_filter (unit filter width from size_for).
    """

    universe_size: int
    depth: int
    hash_count: int
    target_fpr: float
    hash_seed: int = 0
    bits_per_filter: int = field(init=False)
    target_population: int = field(init=False)
    _salts: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        _check_count("universe_size", self.universe_size)
        _check_count("depth", self.depth, minimum=0)
        if self.depth > 63:
            raise InvalidParameterError(f"depth must be <= 63, got {self.depth}")
        _check_count("hash_count", self.hash_count)
        if self.hash_count > 255:
            raise InvalidParameterError(f"hash_count must be <= 255, got {self.hash_count}")
        _check_fpr(self.target_fpr)
        if not isinstance(self.hash_seed, int) or not 0 <= self.hash_seed < (1 << 64):
            raise InvalidParameterError(f"hash_seed must be a 64-bit unsigned int, got {self.hash_seed!r}")
        leaves = 1 << self.depth
        universe = (self.universe_size + leaves - 1) // leaves * leaves
        object.__setattr__(self, "universe_size", universe)
        object.__setattr__(self, "target_population", universe // leaves)
        object.__setattr__(
            self,
            "bits_per_filter",
            size_for(self.target_population, self.hash_count, self.target_fpr),
        )
        object.__setattr__(self, "_salts", kernels.derive_salts(self.hash_seed))

    @property
    def bytes_per_filter(self) -> int:
        return (self.bits_per_filter + 7) // 8

    def check_element(self, element) -> int:
        if not isinstance(element, int) or isinstance(element, bool):
            raise OutOfUniverseError(f"element must be an integer id, got {element!r}")
        if not 0 <= element < self.universe_size:
            raise OutOfUniverseError(
                f"element {element} outside universe [0, {self.universe_size})"
            )
        return element


def probe_positions(element: int, params: FilterParams) -> list[int]:
    """The k bit positions this element probes in any filter of the family.

    Deterministic for a fixed (element, seed, m, k); identical across
    processes and backends.
    """
    params.check_element(element)
    s1, s2 = params._salts
    return kernels.probe_positions(element, s1, s2, params.bits_per_filter, params.hash_count)


class UnitBloomFilter:
    """One m-bit member of a homogeneous filter family.

    No false negatives: after insert(x), query(x) is always True.
    Mutation is single-writer; concurrent reads are safe once no writer
    is active.
    """

    __slots__ = ("params", "bits")

    def __init__(self, params: FilterParams, bits: bytearray | None = None):
        if bits is None:
            bits = bytearray(params.bytes_per_filter)
        elif len(bits) != params.bytes_per_filter:
            raise InvalidParameterError(
                f"bit buffer holds {len(bits)} bytes, expected {params.bytes_per_filter}"
            )
        self.params = params
        self.bits = bits

    def insert(self, element: int) -> None:
        self.params.check_element(element)
        s1, s2 = self.params._salts
        kernels.set_bits(self.bits, self.params.bits_per_filter,
                         self.params.hash_count, s1, s2, element)

    def insert_many(self, elements) -> None:
        s1, s2 = self.params._salts
        kernels.set_bits_many(self.bits, self.params.bits_per_filter,
                              self.params.hash_count, s1, s2,
                              kernels.as_u64_view(elements))

    def query(self, element: int) -> bool:
        self.params.check_element(element)
        s1, s2 = self.params._salts
        return bool(kernels.test_bits(self.bits, self.params.bits_per_filter,
                                      self.params.hash_count, s1, s2, element))

    def count_hits(self, elements, out=None) -> int:
        s1, s2 = self.params._salts
        return kernels.count_hits(self.bits, self.params.bits_per_filter,
                                  self.params.hash_count, s1, s2,
                                  kernels.as_u64_view(elements), out)

    def copy(self) -> "UnitBloomFilter":
        return UnitBloomFilter(self.params, bytearray(self.bits))

    def popcount(self) -> int:
        return sum(bin(b).count("1") for b in self.bits)

    def __eq__(self, other):
        if not isinstance(other, UnitBloomFilter):
            return NotImplemented
        return self.params == other.params and self.bits == other.bits

    __hash__ = None


def _check_same_family(a: UnitBloomFilter, b: UnitBloomFilter) -> None:
    if a.params != b.params:
        raise ParameterMismatchError("filters belong to different parameter families")


def merge_or(a: UnitBloomFilter, b: UnitBloomFilter) -> UnitBloomFilter:
    """Bitwise union: positive for every element either input was positive for."""
    _check_same_family(a, b)
    out = a.copy()
    kernels.or_into(out.bits, b.bits)
    return out


def merge_and(a: UnitBloomFilter, b: UnitBloomFilter) -> UnitBloomFilter:
    """Bitwise intersection: positive only where both inputs were positive."""
    _check_same_family(a, b)
    out = a.copy()
    kernels.and_into(out.bits, b.bits)
    return out
