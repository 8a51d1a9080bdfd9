# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; the bit-exact twin of dpbf._kernels_py.

Any change here must be mirrored in _kernels_py.py.
"""

from libc.stdint cimport uint8_t, uint64_t

BACKEND = "cython"

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t MIX_A = 0xBF58476D1CE4E5B9ULL
cdef uint64_t MIX_B = 0x94D049BB133111EBULL


cdef inline uint64_t _mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * MIX_A
    z = (z ^ (z >> 27)) * MIX_B
    return z ^ (z >> 31)


def mix64(z):
    """splitmix64 finalizer: a bijective 64-bit mix with full avalanche."""
    return _mix64(<uint64_t> z)


def derive_salts(seed):
    """Expand a 64-bit seed into the two per-family hash salts."""
    cdef uint64_t s = <uint64_t> seed
    return _mix64(s), _mix64(s ^ GOLDEN)


def probe_pair(element, s1, s2):
    """Return (h1, h2) for an element; h2 is forced odd."""
    cdef uint64_t e = <uint64_t> element
    return _mix64(e ^ <uint64_t> s1), _mix64(e ^ <uint64_t> s2) | 1ULL


def probe_positions(element, s1, s2, m, k):
    """The k probe positions of an element in an m-bit filter."""
    cdef uint64_t e = <uint64_t> element
    cdef uint64_t mm = <uint64_t> m
    cdef uint64_t h1 = _mix64(e ^ <uint64_t> s1)
    cdef uint64_t h2 = _mix64(e ^ <uint64_t> s2) | 1ULL
    cdef uint64_t pos = h1 % mm
    cdef uint64_t step = h2 % mm
    cdef Py_ssize_t i
    out = []
    for i in range(k):
        out.append(pos)
        pos += step
        if pos >= mm:
            pos -= mm
    return out


cdef inline void _set_at(uint8_t* bits, uint64_t m, int k,
                         uint64_t h1, uint64_t h2) nogil:
    cdef uint64_t pos = h1 % m
    cdef uint64_t step = h2 % m
    cdef int i
    for i in range(k):
        bits[pos >> 3] |= <uint8_t> (1 << (pos & 7))
        pos += step
        if pos >= m:
            pos -= m


cdef inline bint _test_at(const uint8_t* bits, uint64_t m, int k,
                          uint64_t h1, uint64_t h2) nogil:
    cdef uint64_t pos = h1 % m
    cdef uint64_t step = h2 % m
    cdef int i
    for i in range(k):
        if not (bits[pos >> 3] >> (pos & 7)) & 1:
            return False
        pos += step
        if pos >= m:
            pos -= m
    return True


def set_bits(unsigned char[::1] bits, m, k, s1, s2, element):
    """Set the k probe positions of element in a writable bit buffer."""
    cdef uint64_t e = <uint64_t> element
    cdef uint64_t a = <uint64_t> s1, b = <uint64_t> s2
    _set_at(&bits[0], <uint64_t> m, <int> k, _mix64(e ^ a), _mix64(e ^ b) | 1ULL)


def set_bits_many(unsigned char[::1] bits, m, k, s1, s2,
                  const unsigned long long[::1] elements):
    cdef uint64_t mm = <uint64_t> m
    cdef int kk = <int> k
    cdef uint64_t a = <uint64_t> s1, b = <uint64_t> s2
    cdef uint8_t* pb = &bits[0]
    cdef Py_ssize_t i, n = elements.shape[0]
    cdef uint64_t e
    for i in range(n):
        e = elements[i]
        _set_at(pb, mm, kk, _mix64(e ^ a), _mix64(e ^ b) | 1ULL)


def test_bits(const unsigned char[::1] bits, m, k, s1, s2, element):
    """True iff all k probe positions of element are set."""
    cdef uint64_t e = <uint64_t> element
    cdef uint64_t a = <uint64_t> s1, b = <uint64_t> s2
    return _test_at(&bits[0], <uint64_t> m, <int> k,
                    _mix64(e ^ a), _mix64(e ^ b) | 1ULL)


def count_hits(const unsigned char[::1] bits, m, k, s1, s2,
               const unsigned long long[::1] elements,
               unsigned char[::1] out=None):
    """Query every element against one filter; returns the positive count.

    When out is given it receives 1/0 per element.
    """
    cdef uint64_t mm = <uint64_t> m
    cdef int kk = <int> k
    cdef uint64_t a = <uint64_t> s1, b = <uint64_t> s2
    cdef const uint8_t* pb = &bits[0]
    cdef Py_ssize_t i, n = elements.shape[0]
    cdef Py_ssize_t hits = 0
    cdef uint64_t e
    cdef bint r
    if out is None:
        for i in range(n):
            e = elements[i]
            if _test_at(pb, mm, kk, _mix64(e ^ a), _mix64(e ^ b) | 1ULL):
                hits += 1
    else:
        for i in range(n):
            e = elements[i]
            r = _test_at(pb, mm, kk, _mix64(e ^ a), _mix64(e ^ b) | 1ULL)
            out[i] = r
            hits += r
    return hits


cdef inline bint _list_test(const uint8_t* bits, Py_ssize_t nfilters,
                            Py_ssize_t stride, uint64_t m, int k,
                            uint64_t h1, uint64_t h2) nogil:
    cdef Py_ssize_t f
    cdef const uint8_t* base = bits
    for f in range(nfilters):
        if _test_at(base, m, k, h1, h2):
            return True
        base += stride
    return False


def list_test(const unsigned char[::1] bits, nfilters, stride, m, k, s1, s2,
              element):
    """True iff any of nfilters consecutive filters (stride bytes apart)
    answers positive for element."""
    cdef uint64_t e = <uint64_t> element
    cdef uint64_t a = <uint64_t> s1, b = <uint64_t> s2
    return _list_test(&bits[0], <Py_ssize_t> nfilters, <Py_ssize_t> stride,
                      <uint64_t> m, <int> k,
                      _mix64(e ^ a), _mix64(e ^ b) | 1ULL)


def list_count_hits(const unsigned char[::1] bits, nfilters, stride, m, k,
                    s1, s2, const unsigned long long[::1] elements,
                    unsigned char[::1] out=None):
    cdef Py_ssize_t nf = <Py_ssize_t> nfilters
    cdef Py_ssize_t st = <Py_ssize_t> stride
    cdef uint64_t mm = <uint64_t> m
    cdef int kk = <int> k
    cdef uint64_t a = <uint64_t> s1, b = <uint64_t> s2
    cdef const uint8_t* pb = &bits[0]
    cdef Py_ssize_t i, n = elements.shape[0]
    cdef Py_ssize_t hits = 0
    cdef uint64_t e
    cdef bint r
    if out is None:
        for i in range(n):
            e = elements[i]
            if _list_test(pb, nf, st, mm, kk, _mix64(e ^ a), _mix64(e ^ b) | 1ULL):
                hits += 1
    else:
        for i in range(n):
            e = elements[i]
            r = _list_test(pb, nf, st, mm, kk, _mix64(e ^ a), _mix64(e ^ b) | 1ULL)
            out[i] = r
            hits += r
    return hits


cdef inline bint _plan_test(const uint64_t* starts, const uint64_t* ends,
                            Py_ssize_t nleaves, const uint8_t* bits,
                            Py_ssize_t stride, uint64_t m, int k,
                            uint64_t s1, uint64_t s2, uint64_t e) nogil:
    # Binary search for the unique populated leaf interval covering the
    # element; a miss answers negative without hashing.
    cdef Py_ssize_t lo = 0, hi = nleaves, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if e >= ends[mid]:
            lo = mid + 1
        else:
            hi = mid
    if lo == nleaves or e < starts[lo]:
        return False
    return _test_at(bits + lo * stride, m, k,
                    _mix64(e ^ s1), _mix64(e ^ s2) | 1ULL)


def plan_count_hits(const unsigned long long[::1] starts,
                    const unsigned long long[::1] ends,
                    const unsigned char[::1] bits, stride, m, k, s1, s2,
                    const unsigned long long[::1] elements,
                    unsigned char[::1] out=None):
    """Query elements against a flattened tree: sorted disjoint leaf id
    intervals [starts[i], ends[i]) with the i-th leaf's bit array at
    offset i*stride."""
    cdef Py_ssize_t nleaves = starts.shape[0]
    cdef Py_ssize_t st = <Py_ssize_t> stride
    cdef uint64_t mm = <uint64_t> m
    cdef int kk = <int> k
    cdef uint64_t a = <uint64_t> s1, b = <uint64_t> s2
    cdef const uint64_t* ps = NULL
    cdef const uint64_t* pe = NULL
    cdef const uint8_t* pb = NULL
    if nleaves > 0:
        ps = <const uint64_t*> &starts[0]
        pe = <const uint64_t*> &ends[0]
        pb = &bits[0]
    cdef Py_ssize_t i, n = elements.shape[0]
    cdef Py_ssize_t hits = 0
    cdef uint64_t e
    cdef bint r
    if out is None:
        for i in range(n):
            e = elements[i]
            if _plan_test(ps, pe, nleaves, pb, st, mm, kk, a, b, e):
                hits += 1
    else:
        for i in range(n):
            e = elements[i]
            r = _plan_test(ps, pe, nleaves, pb, st, mm, kk, a, b, e)
            out[i] = r
            hits += r
    return hits


def table_count_hits(const int[::1] table, shift, width,
                     const unsigned char[::1] bits, stride, m, k, s1, s2,
                     const unsigned long long[::1] elements,
                     unsigned char[::1] out=None):
    """Query elements against a flattened tree using a direct dispatch
    table: entry j holds the plan slot of the populated leaf covering
    depth-level leaf j, or -1.  Leaf j of an element is e >> shift when
    shift >= 0, else e // width."""
    cdef Py_ssize_t size = table.shape[0]
    cdef int sh = <int> shift
    cdef uint64_t w = <uint64_t> width
    cdef Py_ssize_t st = <Py_ssize_t> stride
    cdef uint64_t mm = <uint64_t> m
    cdef int kk = <int> k
    cdef uint64_t a = <uint64_t> s1, b = <uint64_t> s2
    cdef const int* pt = &table[0] if size > 0 else NULL
    cdef const uint8_t* pb = &bits[0] if bits.shape[0] > 0 else NULL
    cdef Py_ssize_t i, n = elements.shape[0]
    cdef Py_ssize_t hits = 0
    cdef uint64_t e, idx
    cdef int slot
    cdef bint r
    for i in range(n):
        e = elements[i]
        idx = (e >> sh) if sh >= 0 else (e // w)
        r = False
        if idx < <uint64_t> size:
            slot = pt[idx]
            if slot >= 0:
                r = _test_at(pb + (<Py_ssize_t> slot) * st, mm, kk,
                             _mix64(e ^ a), _mix64(e ^ b) | 1ULL)
        if r:
            hits += 1
        if out is not None:
            out[i] = r
    return hits


def or_into(unsigned char[::1] dst, const unsigned char[::1] src):
    """dst |= src, byte-wise; buffers must have equal length."""
    cdef Py_ssize_t i, n = dst.shape[0]
    if src.shape[0] != n:
        raise ValueError("buffer length mismatch")
    for i in range(n):
        dst[i] |= src[i]


def and_into(unsigned char[::1] dst, const unsigned char[::1] src):
    """dst &= src, byte-wise; buffers must have equal length."""
    cdef Py_ssize_t i, n = dst.shape[0]
    if src.shape[0] != n:
        raise ValueError("buffer length mismatch")
    for i in range(n):
        dst[i] &= src[i]
