"""Pure-Python hot kernels: hashing, bit probing and the batch query loops.

This module is the fallback backend; dpbf._kernels is the compiled twin
with identical signatures and bit-identical results.  Keep the two in
lockstep: any change here must be mirrored in _kernels.pyx.

Hash scheme: two independent 64-bit lanes derived from the seed, each
finishing an element through the splitmix64 finalizer (Stafford mix 13).
The pair (h1, h2) acts as one seeded 128-bit hash of the element's
8-byte little-endian encoding; h2 is forced odd.  Probe i of a filter
with m bits lands on (h1 + i*h2) mod m, evaluated in unbounded integer
arithmetic (equivalently: start at h1 mod m and step by h2 mod m with a
conditional subtract, which is how both backends compute it).
"""

BACKEND = "python"

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB


def mix64(z):
    """splitmix64 finalizer: a bijective 64-bit mix with full avalanche."""
    z = int(z) & _MASK64  # plain int: numpy scalars would wrap noisily
    z = ((z ^ (z >> 30)) * _MIX_A) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX_B) & _MASK64
    return z ^ (z >> 31)


def derive_salts(seed):
    """Expand a 64-bit seed into the two per-family hash salts."""
    seed = int(seed) & _MASK64
    return mix64(seed), mix64(seed ^ _GOLDEN)


def probe_pair(element, s1, s2):
    """Return (h1, h2) for an element; h2 is forced odd."""
    element = int(element) & _MASK64
    return mix64(element ^ s1), mix64(element ^ s2) | 1


def probe_positions(element, s1, s2, m, k):
    """The k probe positions of an element in an m-bit filter."""
    h1, h2 = probe_pair(element, s1, s2)
    pos = h1 % m
    step = h2 % m
    out = []
    for _ in range(k):
        out.append(pos)
        pos += step
        if pos >= m:
            pos -= m
    return out


def set_bits(bits, m, k, s1, s2, element):
    """Set the k probe positions of element in a writable bit buffer."""
    h1, h2 = probe_pair(element, s1, s2)
    pos = h1 % m
    step = h2 % m
    for _ in range(k):
        bits[pos >> 3] |= 1 << (pos & 7)
        pos += step
        if pos >= m:
            pos -= m


def set_bits_many(bits, m, k, s1, s2, elements):
    for e in elements:
        set_bits(bits, m, k, s1, s2, e)


def _test_at(bits, base, m, k, h1, h2):
    pos = h1 % m
    step = h2 % m
    for _ in range(k):
        if not (bits[base + (pos >> 3)] >> (pos & 7)) & 1:
            return False
        pos += step
        if pos >= m:
            pos -= m
    return True


def test_bits(bits, m, k, s1, s2, element):
    """True iff all k probe positions of element are set."""
    h1, h2 = probe_pair(element, s1, s2)
    return _test_at(bits, 0, m, k, h1, h2)


def count_hits(bits, m, k, s1, s2, elements, out=None):
    """Query every element against one filter; returns the positive count.

    When out is given it receives 1/0 per element.
    """
    hits = 0
    if out is None:
        for e in elements:
            h1, h2 = probe_pair(e, s1, s2)
            if _test_at(bits, 0, m, k, h1, h2):
                hits += 1
    else:
        for i, e in enumerate(elements):
            h1, h2 = probe_pair(e, s1, s2)
            r = 1 if _test_at(bits, 0, m, k, h1, h2) else 0
            out[i] = r
            hits += r
    return hits


def list_test(bits, nfilters, stride, m, k, s1, s2, element):
    """True iff any of nfilters consecutive filters (stride bytes apart)
    answers positive for element."""
    h1, h2 = probe_pair(element, s1, s2)
    base = 0
    for _ in range(nfilters):
        if _test_at(bits, base, m, k, h1, h2):
            return True
        base += stride
    return False


def list_count_hits(bits, nfilters, stride, m, k, s1, s2, elements, out=None):
    hits = 0
    if out is None:
        for e in elements:
            if list_test(bits, nfilters, stride, m, k, s1, s2, e):
                hits += 1
    else:
        for i, e in enumerate(elements):
            r = 1 if list_test(bits, nfilters, stride, m, k, s1, s2, e) else 0
            out[i] = r
            hits += r
    return hits


def _plan_test(starts, ends, nleaves, bits, stride, m, k, s1, s2, element):
    # Binary search for the unique populated leaf interval covering the
    # element; a miss answers negative without hashing.
    lo, hi = 0, nleaves
    while lo < hi:
        mid = (lo + hi) >> 1
        if element >= ends[mid]:
            lo = mid + 1
        else:
            hi = mid
    if lo == nleaves or element < starts[lo]:
        return False
    h1, h2 = probe_pair(element, s1, s2)
    return _test_at(bits, lo * stride, m, k, h1, h2)


def plan_count_hits(starts, ends, bits, stride, m, k, s1, s2, elements, out=None):
    """Query elements against a flattened tree: sorted disjoint leaf id
    intervals [starts[i], ends[i]) with the i-th leaf's bit array at
    offset i*stride."""
    nleaves = len(starts)
    hits = 0
    if out is None:
        for e in elements:
            if _plan_test(starts, ends, nleaves, bits, stride, m, k, s1, s2, e):
                hits += 1
    else:
        for i, e in enumerate(elements):
            r = 1 if _plan_test(starts, ends, nleaves, bits, stride, m, k, s1, s2, e) else 0
            out[i] = r
            hits += r
    return hits


def table_count_hits(table, shift, width, bits, stride, m, k, s1, s2,
                     elements, out=None):
    """Query elements against a flattened tree using a direct dispatch
    table: entry j holds the plan slot of the populated leaf covering
    depth-level leaf j, or -1.  Leaf j of an element is e >> shift when
    shift >= 0, else e // width."""
    size = len(table)
    hits = 0
    if out is None:
        for e in elements:
            idx = (e >> shift) if shift >= 0 else (e // width)
            if idx < size:
                slot = table[idx]
                if slot >= 0:
                    h1, h2 = probe_pair(e, s1, s2)
                    if _test_at(bits, slot * stride, m, k, h1, h2):
                        hits += 1
    else:
        for i, e in enumerate(elements):
            r = 0
            idx = (e >> shift) if shift >= 0 else (e // width)
            if idx < size:
                slot = table[idx]
                if slot >= 0:
                    h1, h2 = probe_pair(e, s1, s2)
                    if _test_at(bits, slot * stride, m, k, h1, h2):
                        r = 1
            out[i] = r
            hits += r
    return hits


def or_into(dst, src):
    """dst |= src, byte-wise; buffers must have equal length."""
    n = len(dst)
    if len(src) != n:
        raise ValueError("buffer length mismatch")
    for i in range(n):
        dst[i] |= src[i]


def and_into(dst, src):
    """dst &= src, byte-wise; buffers must have equal length."""
    n = len(dst)
    if len(src) != n:
        raise ValueError("buffer length mismatch")
    for i in range(n):
        dst[i] &= src[i]
