"""Dynamic partition Bloom filter.

A tree-of-Bloom-filters structure that keeps the membership false
positive rate bounded no matter how large the stored set grows, with
set union and intersection, plus dynamic (growing-list) and standard
Bloom filter baselines and a benchmark harness.
"""

from .baselines import DynamicBloomFilter, StandardBloomFilter, fpr_lower_bound
from .bloom import (FilterParams, UnitBloomFilter, estimated_fpr, merge_and,
                    merge_or, population_for, probe_positions, size_for)
from .errors import (CapacityError, CorruptPayloadError, DpbfError,
                     InvalidCoordinateError, InvalidParameterError,
                     OutOfUniverseError, ParameterMismatchError)
from .kernels import BACKEND
from .partition import (IdRange, NodeCoord, children, leaf_index_of,
                        leaf_span, namespace_of, parent)
from .tree import (FilterStats, PartitionBloomFilter, PopulatedUnit, TreeNode,
                   compress)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CapacityError",
    "CorruptPayloadError",
    "DpbfError",
    "DynamicBloomFilter",
    "FilterParams",
    "FilterStats",
    "IdRange",
    "InvalidCoordinateError",
    "InvalidParameterError",
    "NodeCoord",
    "OutOfUniverseError",
    "ParameterMismatchError",
    "PartitionBloomFilter",
    "PopulatedUnit",
    "StandardBloomFilter",
    "TreeNode",
    "UnitBloomFilter",
    "children",
    "compress",
    "estimated_fpr",
    "fpr_lower_bound",
    "leaf_index_of",
    "leaf_span",
    "merge_and",
    "merge_or",
    "namespace_of",
    "parent",
    "population_for",
    "probe_positions",
    "size_for",
]
