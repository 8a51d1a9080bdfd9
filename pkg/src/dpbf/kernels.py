"""Backend selection for the hot kernels.

The compiled extension (dpbf._kernels, Cython) is preferred; the pure
Python module (dpbf._kernels_py) is the fallback and the reference for
bit-exact behavior.  Set DPBF_PURE_PYTHON=1 to force the fallback, e.g.
to compare backends (see benchmarks/compare_backends.py).
"""

import os

if os.environ.get("DPBF_PURE_PYTHON", "") not in ("", "0"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

BACKEND = _impl.BACKEND

mix64 = _impl.mix64
derive_salts = _impl.derive_salts
probe_pair = _impl.probe_pair
probe_positions = _impl.probe_positions
set_bits = _impl.set_bits
set_bits_many = _impl.set_bits_many
test_bits = _impl.test_bits
count_hits = _impl.count_hits
list_test = _impl.list_test
list_count_hits = _impl.list_count_hits
plan_count_hits = _impl.plan_count_hits
table_count_hits = _impl.table_count_hits
or_into = _impl.or_into
and_into = _impl.and_into


def as_u64_view(buf):
    """A zero-copy 'Q'-format memoryview over any u64 buffer.

    Accepts array('Q'), numpy uint64 arrays (whose buffer format may be
    'L' on LP64 platforms) and plain memoryviews.
    """
    mv = buf if isinstance(buf, memoryview) else memoryview(buf)
    if mv.format != "Q":
        mv = mv.cast("B").cast("Q")
    return mv
