"""The compiled kernels must match the pure-Python reference bit for bit."""

from array import array

import numpy as np
import pytest

from dpbf import _kernels_py as pyk
from dpbf.kernels import as_u64_view

cyk = pytest.importorskip("dpbf._kernels", reason="compiled backend not built")

CASES = [
    # (seed, m, k)
    (0, 5, 2),
    (7, 9593, 7),
    (123456789, 1 << 16, 1),
    ((1 << 64) - 1, 1023, 13),
    (42, 8, 1),
]


def _salts(seed):
    s_py = pyk.derive_salts(seed)
    s_cy = cyk.derive_salts(seed)
    assert s_py == s_cy
    return s_py


@pytest.fixture(scope="module")
def elements():
    rng = np.random.default_rng(2718)
    return rng.integers(0, 1 << 64, size=4096, dtype=np.uint64)


class TestScalarEquivalence:
    def test_mix64(self):
        for z in (0, 1, 0xDEADBEEF, (1 << 64) - 1, 1 << 63):
            assert pyk.mix64(z) == cyk.mix64(z)

    @pytest.mark.parametrize("seed,m,k", CASES)
    def test_probe_pair_and_positions(self, seed, m, k, elements):
        s1, s2 = _salts(seed)
        for e in elements[:512]:
            e = int(e)
            assert pyk.probe_pair(e, s1, s2) == cyk.probe_pair(e, s1, s2)
            assert pyk.probe_positions(e, s1, s2, m, k) == \
                cyk.probe_positions(e, s1, s2, m, k)

    def test_h2_is_odd_in_both(self):
        s1, s2 = _salts(99)
        for e in range(256):
            assert pyk.probe_pair(e, s1, s2)[1] % 2 == 1
            assert cyk.probe_pair(e, s1, s2)[1] % 2 == 1


class TestFilterEquivalence:
    @pytest.mark.parametrize("seed,m,k", CASES)
    def test_set_and_test(self, seed, m, k, elements):
        s1, s2 = _salts(seed)
        nbytes = (m + 7) // 8
        a = bytearray(nbytes)
        b = bytearray(nbytes)
        subset = elements[: len(elements) // 2]
        for e in subset:
            pyk.set_bits(a, m, k, s1, s2, int(e))
        cyk.set_bits_many(b, m, k, s1, s2, subset)
        assert a == b
        out_py = np.zeros(len(elements), dtype=np.uint8)
        out_cy = np.zeros(len(elements), dtype=np.uint8)
        hits_py = pyk.count_hits(a, m, k, s1, s2, elements, out_py)
        hits_cy = cyk.count_hits(b, m, k, s1, s2, elements, out_cy)
        assert hits_py == hits_cy
        assert out_py.tobytes() == out_cy.tobytes()

    @pytest.mark.parametrize("seed,m,k", CASES[:3])
    def test_list_kernels(self, seed, m, k, elements):
        s1, s2 = _salts(seed)
        stride = (m + 7) // 8
        nfilters = 5
        blob = bytearray(nfilters * stride)
        for i, e in enumerate(elements[:200]):
            offset = (i % nfilters) * stride
            view = memoryview(blob)[offset:offset + stride]
            pyk.set_bits(view, m, k, s1, s2, int(e))
        hits_py = pyk.list_count_hits(blob, nfilters, stride, m, k, s1, s2, elements)
        hits_cy = cyk.list_count_hits(blob, nfilters, stride, m, k, s1, s2, elements)
        assert hits_py == hits_cy
        for e in elements[:64]:
            assert pyk.list_test(blob, nfilters, stride, m, k, s1, s2, int(e)) == \
                cyk.list_test(blob, nfilters, stride, m, k, s1, s2, int(e))

    def test_plan_kernels(self, elements):
        s1, s2 = _salts(31)
        m, k = 257, 4
        stride = (m + 7) // 8
        starts = array("Q", [0, 1000, 5000])
        ends = array("Q", [512, 2000, 1 << 33])
        blob = bytearray(3 * stride)
        for i, e in enumerate(elements[:300]):
            offset = (i % 3) * stride
            view = memoryview(blob)[offset:offset + stride]
            pyk.set_bits(view, m, k, s1, s2, int(e))
        out_py = np.zeros(len(elements), dtype=np.uint8)
        out_cy = np.zeros(len(elements), dtype=np.uint8)
        hits_py = pyk.plan_count_hits(starts, ends, blob, stride, m, k, s1, s2,
                                      elements, out_py)
        hits_cy = cyk.plan_count_hits(starts, ends, blob, stride, m, k, s1, s2,
                                      elements, out_cy)
        assert hits_py == hits_cy
        assert out_py.tobytes() == out_cy.tobytes()
        # empty plan answers all-negative in both lanes
        empty = array("Q")
        assert pyk.plan_count_hits(empty, empty, b"", stride, m, k, s1, s2,
                                   elements) == 0
        assert cyk.plan_count_hits(empty, empty, b"", stride, m, k, s1, s2,
                                   elements) == 0

    def test_table_kernels(self):
        s1, s2 = _salts(77)
        m, k = 101, 3
        stride = (m + 7) // 8
        width = 64
        table = array("i", [-1, 0, -1, 1, 1, -1, 0, -1])
        blob = bytearray(2 * stride)
        rng = np.random.default_rng(8)
        members = rng.integers(0, 8 * width, size=100, dtype=np.uint64)
        for e in members:
            slot = table[int(e) // width]
            if slot >= 0:
                view = memoryview(blob)[slot * stride:(slot + 1) * stride]
                pyk.set_bits(view, m, k, s1, s2, int(e))
        probes = rng.integers(0, 16 * width, size=2048, dtype=np.uint64)
        for shift in (-1, 6):  # division and power-of-two paths
            out_py = np.zeros(len(probes), dtype=np.uint8)
            out_cy = np.zeros(len(probes), dtype=np.uint8)
            hits_py = pyk.table_count_hits(table, shift, width, blob, stride,
                                           m, k, s1, s2, probes, out_py)
            hits_cy = cyk.table_count_hits(table, shift, width, blob, stride,
                                           m, k, s1, s2, probes, out_cy)
            assert hits_py == hits_cy
            assert out_py.tobytes() == out_cy.tobytes()

    def test_byte_merges(self):
        rng = np.random.default_rng(3)
        a = bytearray(rng.integers(0, 256, size=64, dtype=np.uint8).tobytes())
        b = bytes(rng.integers(0, 256, size=64, dtype=np.uint8).tobytes())
        a_py, a_cy = bytearray(a), bytearray(a)
        pyk.or_into(a_py, b)
        cyk.or_into(a_cy, b)
        assert a_py == a_cy
        a_py, a_cy = bytearray(a), bytearray(a)
        pyk.and_into(a_py, b)
        cyk.and_into(a_cy, b)
        assert a_py == a_cy
        with pytest.raises(ValueError):
            cyk.or_into(bytearray(3), b"\x00" * 4)
        with pytest.raises(ValueError):
            pyk.and_into(bytearray(3), b"\x00" * 4)


class TestBufferAdapters:
    def test_as_u64_view_roundtrips(self):
        values = [0, 1, 2**63, 2**64 - 1]
        for buf in (array("Q", values),
                    np.array(values, dtype=np.uint64),
                    memoryview(array("Q", values))):
            view = as_u64_view(buf)
            assert view.format == "Q"
            assert list(view) == values
