"""The dynamic partition Bloom filter: a leaf map plus a compressed tree.

Two substructures share one homogeneous family of unit filters:

* the leaf map: one populated unit filter per non-empty leaf namespace,
  keyed by leaf index.  It feeds insertion, union and intersection.
* the compressed tree: the unique binary tree in which every populated
  leaf covers at most target_population stored elements while every
  internal node's subtree covers more.  Queries descend it; a leaf with
  no filter answers negative immediately.

Because every tree leaf holds at most target_population elements, the
estimated false positive rate of any single membership query stays at
or below the configured target no matter how large the stored set
grows.  Insertions split overfull tree leaves in place; union and
intersection merge leaf maps and rebuild the tree canonically, so the
tree (and the serialized form) never depend on operation order.

Counts increment on every insert call without a membership pre-check;
duplicate inserts can inflate counts and force earlier splits, which
only lowers the false positive rate.  Per-leaf counts cap at the leaf
namespace size, the true distinct-element maximum, so a depth-level
leaf never needs to split.
"""

from __future__ import annotations

import struct
from array import array
from dataclasses import dataclass

from . import kernels
from .bloom import FilterParams, UnitBloomFilter, estimated_fpr, merge_and, merge_or
from .errors import CorruptPayloadError, ParameterMismatchError
from .partition import NodeCoord, children, leaf_index_of, leaf_span, namespace_of

MAGIC = b"DPBF"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<4sBQBBdQQ")  # magic, version, |U|, d, k, f, m, seed
_COUNT = struct.Struct("<Q")
_ENTRY = struct.Struct("<QQ")  # leaf index, insert count


@dataclass
class PopulatedUnit:
    """A non-empty leaf of the full-depth partition: its index, the
    number of (capped) insert calls routed to it, and its unit filter."""

    leaf_index: int
    insert_count: int
    ubf: UnitBloomFilter


class TreeNode:
    """Node of the compressed tree.

    A node is either a leaf (no children; carries a unit filter iff its
    count is non-zero) or an internal node (exactly two children, no
    filter, count above the per-leaf population target).
    """

    __slots__ = ("coord", "count", "ubf", "left", "right")

    def __init__(self, coord: NodeCoord, count: int = 0,
                 ubf: UnitBloomFilter | None = None):
        self.coord = coord
        self.count = count
        self.ubf = ubf
        self.left: TreeNode | None = None
        self.right: TreeNode | None = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def iter_leaves(self):
        """Yield leaf nodes in namespace order."""
        stack = [self]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                yield node
            else:
                stack.append(node.right)
                stack.append(node.left)

    def __eq__(self, other):
        if not isinstance(other, TreeNode):
            return NotImplemented
        if (self.coord != other.coord or self.count != other.count
                or (self.ubf is None) != (other.ubf is None)):
            return False
        if self.ubf is not None and self.ubf.bits != other.ubf.bits:
            return False
        if self.is_leaf != other.is_leaf:
            return False
        if self.is_leaf:
            return True
        return self.left == other.left and self.right == other.right

    __hash__ = None

    def __repr__(self):
        kind = "leaf" if self.is_leaf else "internal"
        return f"TreeNode({self.coord}, count={self.count}, {kind})"


def compress(units: dict[int, PopulatedUnit], params: FilterParams) -> TreeNode:
    """Build the canonical compressed tree for a leaf map.

    Bottom-up in one pass over the map keys: sibling subtrees merge into
    a single leaf while their combined count stays within the population
    target; once a pair exceeds it, the parent becomes internal and any
    absent sibling materialises as an empty leaf.
    """
    if not units:
        return TreeNode(NodeCoord(0, 0))
    n_t = params.target_population
    depth = params.depth
    current: dict[int, TreeNode] = {}
    for j, unit in units.items():
        current[j] = TreeNode(NodeCoord(depth, j), unit.insert_count, unit.ubf.copy())
    for level in range(depth, 0, -1):
        merged: dict[int, TreeNode] = {}
        for pj in {j >> 1 for j in current}:
            left = current.get(2 * pj)
            right = current.get(2 * pj + 1)
            total = (left.count if left else 0) + (right.count if right else 0)
            if total <= n_t:
                node = TreeNode(NodeCoord(level - 1, pj), total)
                for child in (left, right):
                    if child is not None and child.ubf is not None:
                        if node.ubf is None:
                            node.ubf = child.ubf  # fresh copy made at depth level
                        else:
                            kernels.or_into(node.ubf.bits, child.ubf.bits)
            else:
                if left is None:
                    left = TreeNode(NodeCoord(level, 2 * pj))
                if right is None:
                    right = TreeNode(NodeCoord(level, 2 * pj + 1))
                node = TreeNode(NodeCoord(level - 1, pj), total)
                node.left = left
                node.right = right
            merged[pj] = node
        current = merged
    return current[0]


@dataclass(frozen=True)
class FilterStats:
    """Space accounting: allocated unit filters number map_units +
    tree_units, never more than twice map_units."""

    map_units: int
    tree_units: int
    total_bits: int
    max_unit_fpr: float


class PartitionBloomFilter:
    """Bounded false positive set membership under arbitrary set growth.

    Mutation is single-writer; any number of threads may query once no
    writer is active.  union/intersection read two filters and build a
    fresh one.
    """

    __slots__ = ("params", "units", "root", "_plan")

    def __init__(self, universe_size: int, depth: int, hash_count: int = 7,
                 target_fpr: float = 0.01, hash_seed: int = 0):
        self.params = FilterParams(universe_size, depth, hash_count,
                                   target_fpr, hash_seed)
        self.units: dict[int, PopulatedUnit] = {}
        self.root = TreeNode(NodeCoord(0, 0))
        self._plan = None

    @classmethod
    def _from_units(cls, params: FilterParams,
                    units: dict[int, PopulatedUnit]) -> "PartitionBloomFilter":
        self = object.__new__(cls)
        self.params = params
        self.units = units
        self.root = compress(units, params)
        self._plan = None
        return self

    # ------------------------------------------------------------------
    # mutation

    def insert(self, element: int) -> None:
        p = self.params
        p.check_element(element)
        leaf = leaf_index_of(element, p.depth, p.universe_size)
        unit = self.units.get(leaf)
        if unit is None:
            unit = PopulatedUnit(leaf, 0, UnitBloomFilter(p))
            self.units[leaf] = unit
        unit.ubf.insert(element)
        grew = unit.insert_count < p.target_population
        if grew:
            unit.insert_count += 1

        node = self.root
        if grew:
            node.count += 1
        while node.left is not None:
            node = self._child_for(node, element)
            if grew:
                node.count += 1
        if node.ubf is None:
            node.ubf = UnitBloomFilter(p)
        node.ubf.insert(element)
        if grew and node.count > p.target_population and node.coord.level < p.depth:
            self._split(node)
        self._plan = None

    def _child_for(self, node: TreeNode, element: int) -> TreeNode:
        level, index = node.coord
        # left child owns [2j*w, (2j+1)*w) with w = |U| / 2^(level+1)
        boundary = (2 * index + 1) * (self.params.universe_size >> (level + 1))
        return node.left if element < boundary else node.right

    def _descend(self, element: int) -> TreeNode:
        node = self.root
        while node.left is not None:
            node = self._child_for(node, element)
        return node

    def _units_in_span(self, span: range):
        if len(span) <= 2 * len(self.units):
            units = self.units
            return [units[j] for j in span if j in units]
        return [u for j, u in self.units.items() if span.start <= j < span.stop]

    def _build_span_node(self, coord: NodeCoord) -> TreeNode:
        entries = self._units_in_span(leaf_span(coord, self.params.depth))
        node = TreeNode(coord, sum(u.insert_count for u in entries))
        if node.count:
            ubf = entries[0].ubf.copy()
            for u in entries[1:]:
                kernels.or_into(ubf.bits, u.ubf.bits)
            node.ubf = ubf
        return node

    def _split(self, node: TreeNode) -> None:
        p = self.params
        lc, rc = children(node.coord)
        node.ubf = None
        node.left = self._build_span_node(lc)
        node.right = self._build_span_node(rc)
        for child in (node.left, node.right):
            if child.count > p.target_population and child.coord.level < p.depth:
                self._split(child)

    # ------------------------------------------------------------------
    # queries

    def query(self, element: int) -> bool:
        self.params.check_element(element)
        node = self._descend(element)
        if node.ubf is None:
            return False
        return node.ubf.query(element)

    # a dispatch table costs 4 bytes per depth-level leaf; beyond this
    # many leaves the plan falls back to binary search over intervals
    _TABLE_LEAF_LIMIT = 1 << 20

    def _get_plan(self):
        if self._plan is None:
            p = self.params
            starts = array("Q")
            ends = array("Q")
            blob = bytearray()
            populated = []
            for node in self.root.iter_leaves():
                if node.ubf is None:
                    continue
                rng = namespace_of(node.coord, p.universe_size)
                starts.append(rng.start)
                ends.append(rng.end)
                blob += node.ubf.bits
                populated.append(rng)
            leaves = 1 << p.depth
            if leaves <= self._TABLE_LEAF_LIMIT:
                width = p.target_population
                shift = width.bit_length() - 1 if width & (width - 1) == 0 else -1
                table = array("i", b"\xff\xff\xff\xff" * leaves)  # all -1
                for slot, rng in enumerate(populated):
                    for j in range(rng.start // width, rng.end // width):
                        table[j] = slot
                self._plan = ("table", table, shift, width, bytes(blob))
            else:
                self._plan = ("bsearch", starts, ends, bytes(blob))
        return self._plan

    def contains_batch(self, elements, out=None) -> int:
        """Query a u64 buffer of elements; returns the positive count and
        optionally fills out with 1/0 per element.

        Elements outside the universe simply answer negative here; the
        scalar query() path raises instead.
        """
        plan = self._get_plan()
        p = self.params
        s1, s2 = p._salts
        view = kernels.as_u64_view(elements)
        if plan[0] == "table":
            _, table, shift, width, blob = plan
            return kernels.table_count_hits(table, shift, width, blob,
                                            p.bytes_per_filter, p.bits_per_filter,
                                            p.hash_count, s1, s2, view, out)
        _, starts, ends, blob = plan
        return kernels.plan_count_hits(starts, ends, blob, p.bytes_per_filter,
                                       p.bits_per_filter, p.hash_count, s1, s2,
                                       view, out)

    # ------------------------------------------------------------------
    # set algebra

    def union(self, other: "PartitionBloomFilter") -> "PartitionBloomFilter":
        """A filter answering positive for everything either input held."""
        self._check_compatible(other)
        cap = self.params.target_population
        merged: dict[int, PopulatedUnit] = {}
        for leaf in self.units.keys() | other.units.keys():
            a = self.units.get(leaf)
            b = other.units.get(leaf)
            if a is not None and b is not None:
                merged[leaf] = PopulatedUnit(
                    leaf, min(a.insert_count + b.insert_count, cap),
                    merge_or(a.ubf, b.ubf))
            else:
                src = a if a is not None else b
                merged[leaf] = PopulatedUnit(leaf, src.insert_count, src.ubf.copy())
        return PartitionBloomFilter._from_units(self.params, merged)

    def intersection(self, other: "PartitionBloomFilter") -> "PartitionBloomFilter":
        """A filter answering positive for every element of the true set
        intersection (one-sided error is preserved; counts become upper
        bounds)."""
        self._check_compatible(other)
        merged: dict[int, PopulatedUnit] = {}
        for leaf in self.units.keys() & other.units.keys():
            a = self.units[leaf]
            b = other.units[leaf]
            merged[leaf] = PopulatedUnit(
                leaf, min(a.insert_count, b.insert_count), merge_and(a.ubf, b.ubf))
        return PartitionBloomFilter._from_units(self.params, merged)

    def _check_compatible(self, other: "PartitionBloomFilter") -> None:
        if not isinstance(other, PartitionBloomFilter):
            raise ParameterMismatchError(f"expected a PartitionBloomFilter, got {type(other)!r}")
        if self.params != other.params:
            raise ParameterMismatchError("filters built with different parameters")

    # ------------------------------------------------------------------
    # accounting

    @property
    def target_population(self) -> int:
        return self.params.target_population

    @property
    def target_fpr(self) -> float:
        return self.params.target_fpr

    def _populated_leaves(self):
        return [n for n in self.root.iter_leaves() if n.ubf is not None]

    @property
    def unit_filter_count(self) -> int:
        return len(self.units) + len(self._populated_leaves())

    @property
    def total_bits(self) -> int:
        return self.unit_filter_count * self.params.bits_per_filter

    def stats(self) -> FilterStats:
        p = self.params
        leaves = self._populated_leaves()
        s = len(self.units)
        assert len(leaves) <= s, "tree holds more unit filters than the leaf map"
        for unit in self.units.values():
            assert 1 <= unit.insert_count <= p.target_population
        max_fpr = 0.0
        for node in leaves:
            assert node.count <= p.target_population
            fpr = estimated_fpr(node.count, p.bits_per_filter, p.hash_count)
            if fpr > max_fpr:
                max_fpr = fpr
        return FilterStats(
            map_units=s,
            tree_units=len(leaves),
            total_bits=(s + len(leaves)) * p.bits_per_filter,
            max_unit_fpr=max_fpr,
        )

    def validate(self) -> None:
        """Walk every invariant; raises AssertionError on violation.

        Intended for tests and debugging, not hot paths: reconstruction
        checks OR together whole bit arrays.
        """
        p = self.params
        n_t = p.target_population
        for j, unit in self.units.items():
            assert 0 <= j < (1 << p.depth), f"leaf index {j} out of range"
            assert unit.leaf_index == j
            assert 1 <= unit.insert_count <= n_t, f"leaf {j} count {unit.insert_count}"
            assert unit.ubf.params == p
            # an all-zero filter is legal here: intersecting disjoint leaf
            # contents keeps the key with an AND-ed empty bit array

        total = 0
        stack = [self.root]
        assert self.root.coord == NodeCoord(0, 0)
        while stack:
            node = stack.pop()
            if node.is_leaf:
                spanned = self._units_in_span(leaf_span(node.coord, p.depth))
                span_count = sum(u.insert_count for u in spanned)
                assert node.count == span_count, f"{node} count drifted from map"
                assert node.count <= n_t, f"{node} exceeds population target"
                total += node.count
                if node.ubf is None:
                    assert node.count == 0, f"{node} populated but missing its filter"
                else:
                    assert node.count > 0
                    expect = bytearray(p.bytes_per_filter)
                    for u in spanned:
                        kernels.or_into(expect, u.ubf.bits)
                    assert node.ubf.bits == expect, f"{node} bits drifted from map"
            else:
                assert node.right is not None, f"{node} has a single child"
                assert node.count > n_t, f"{node} is internal but fits one filter"
                assert node.count == node.left.count + node.right.count
                lc, rc = children(node.coord)
                assert node.left.coord == lc and node.right.coord == rc
                stack.append(node.left)
                stack.append(node.right)
        assert total == sum(u.insert_count for u in self.units.values())
        assert len(self._populated_leaves()) <= len(self.units)

    # ------------------------------------------------------------------
    # serialization

    def to_bytes(self) -> bytes:
        """Serialize params and the leaf map (the tree is canonical and
        rebuilt on load).  Entries are sorted by leaf index, so equal
        structures serialize to identical bytes."""
        p = self.params
        out = bytearray()
        out += _HEADER.pack(MAGIC, FORMAT_VERSION, p.universe_size, p.depth,
                            p.hash_count, p.target_fpr, p.bits_per_filter,
                            p.hash_seed)
        out += _COUNT.pack(len(self.units))
        for leaf in sorted(self.units):
            unit = self.units[leaf]
            out += _ENTRY.pack(leaf, unit.insert_count)
            out += unit.ubf.bits
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "PartitionBloomFilter":
        view = memoryview(data)
        if len(view) < _HEADER.size:
            raise CorruptPayloadError("payload shorter than the header")
        magic, version, universe, depth, hashes, fpr, bits, seed = \
            _HEADER.unpack_from(view, 0)
        if magic != MAGIC:
            raise CorruptPayloadError(f"bad magic {magic!r}")
        if version != FORMAT_VERSION:
            raise CorruptPayloadError(f"unsupported format version {version}")
        if depth > 63 or universe % (1 << depth):
            raise CorruptPayloadError(
                f"universe {universe} does not split into 2^{depth} leaves")
        try:
            params = FilterParams(universe, depth, hashes, fpr, seed)
        except (ValueError, OverflowError) as exc:
            raise CorruptPayloadError(f"invalid parameters: {exc}") from exc
        if params.bits_per_filter != bits:
            raise CorruptPayloadError(
                f"stored width {bits} disagrees with derived {params.bits_per_filter}")

        offset = _HEADER.size
        if len(view) < offset + _COUNT.size:
            raise CorruptPayloadError("payload truncated before the entry count")
        (entry_count,) = _COUNT.unpack_from(view, offset)
        offset += _COUNT.size

        stride = params.bytes_per_filter
        entry_size = _ENTRY.size + stride
        if len(view) != offset + entry_count * entry_size:
            raise CorruptPayloadError("payload length disagrees with the entry count")

        pad_bits = 8 * stride - params.bits_per_filter
        pad_mask = (0xFF << (8 - pad_bits)) & 0xFF if pad_bits else 0
        units: dict[int, PopulatedUnit] = {}
        prev = -1
        for _ in range(entry_count):
            leaf, count = _ENTRY.unpack_from(view, offset)
            offset += _ENTRY.size
            raw = bytearray(view[offset:offset + stride])
            offset += stride
            if leaf >= (1 << depth):
                raise CorruptPayloadError(f"leaf index {leaf} out of range")
            if leaf <= prev:
                raise CorruptPayloadError("leaf indices not strictly ascending")
            prev = leaf
            if not 1 <= count <= params.target_population:
                raise CorruptPayloadError(
                    f"leaf {leaf} count {count} outside [1, {params.target_population}]")
            if pad_mask and raw[-1] & pad_mask:
                raise CorruptPayloadError(f"leaf {leaf} has padding bits set")
            units[leaf] = PopulatedUnit(leaf, count, UnitBloomFilter(params, raw))
        return cls._from_units(params, units)
