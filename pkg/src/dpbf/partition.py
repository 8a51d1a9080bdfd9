"""Namespace partition arithmetic for the binary tree over [0, |U|).

The tree node at (level i, index j) owns the half-open id range
[j * |U|/2^i, (j+1) * |U|/2^i).  Level 0 is the root owning the whole
universe; each level halves the ranges, so level i has 2^i equal,
disjoint ranges covering the universe exactly.  All functions here are
pure integer arithmetic.
"""

from __future__ import annotations

from typing import NamedTuple

from .errors import InvalidCoordinateError, InvalidParameterError, OutOfUniverseError


class NodeCoord(NamedTuple):
    level: int
    index: int


class IdRange(NamedTuple):
    """Half-open id interval [start, end)."""

    start: int
    end: int

    def __contains__(self, element) -> bool:
        return self.start <= element < self.end

    def __len__(self) -> int:
        return self.end - self.start


def check_coord(coord: NodeCoord) -> NodeCoord:
    level, index = coord
    if level < 0:
        raise InvalidCoordinateError(f"level must be >= 0, got {level}")
    if not 0 <= index < (1 << level):
        raise InvalidCoordinateError(f"index {index} outside [0, 2^{level}) at level {level}")
    return NodeCoord(level, index)


def namespace_of(coord: NodeCoord, universe_size: int) -> IdRange:
    """The id range owned by a node; universe must split evenly at its level."""
    level, index = check_coord(coord)
    if universe_size < 1:
        raise InvalidParameterError(f"universe_size must be >= 1, got {universe_size}")
    width, rem = divmod(universe_size, 1 << level)
    if rem:
        raise InvalidParameterError(
            f"universe of {universe_size} ids does not split evenly into 2^{level} ranges"
        )
    return IdRange(index * width, (index + 1) * width)


def leaf_index_of(element: int, depth: int, universe_size: int) -> int:
    """Index of the depth-level leaf whose range contains the element."""
    if not 0 <= element < universe_size:
        raise OutOfUniverseError(f"element {element} outside universe [0, {universe_size})")
    return (element << depth) // universe_size


def parent(coord: NodeCoord) -> NodeCoord:
    level, index = check_coord(coord)
    if level == 0:
        raise InvalidCoordinateError("the root has no parent")
    return NodeCoord(level - 1, index >> 1)


def children(coord: NodeCoord) -> tuple[NodeCoord, NodeCoord]:
    level, index = check_coord(coord)
    return NodeCoord(level + 1, 2 * index), NodeCoord(level + 1, 2 * index + 1)


def leaf_span(coord: NodeCoord, depth: int) -> range:
    """The depth-level leaf indices covered by this node's subtree."""
    level, index = check_coord(coord)
    if level > depth:
        raise InvalidCoordinateError(f"level {level} exceeds tree depth {depth}")
    width = 1 << (depth - level)
    return range(index * width, (index + 1) * width)
