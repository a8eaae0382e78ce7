"""Kernel backends: correctness against simple oracles, and cython/numpy parity."""
import numpy as np
import pytest

from magroute import _kernels

BACKENDS = ["numpy"]
if _kernels.backend_name() == "cython":
    BACKENDS.append("cython")


@pytest.fixture(params=BACKENDS)
def impl(request):
    return _kernels.get_impl(request.param)


def _loop_segment_sum(values, seg, n):
    out = np.zeros((n, values.shape[1]))
    for p in range(len(seg)):
        out[seg[p]] += values[p]
    return out


def test_segment_sum_matches_loop_oracle(impl):
    rng = np.random.default_rng(0)
    for _ in range(20):
        n_seg = int(rng.integers(1, 8))
        p = int(rng.integers(0, 30))
        seg = np.sort(rng.integers(0, n_seg, size=p)).astype(np.int64)
        vals = np.ascontiguousarray(rng.normal(size=(p, 3)))
        got = impl.segment_sum(vals, seg, n_seg)
        np.testing.assert_allclose(got, _loop_segment_sum(vals, seg, n_seg), atol=1e-12)


def test_segment_sum_empty_segments(impl):
    vals = np.ones((2, 2))
    seg = np.array([1, 1], dtype=np.int64)
    out = impl.segment_sum(vals, seg, 4)
    np.testing.assert_array_equal(out[0], 0.0)
    np.testing.assert_array_equal(out[1], 2.0)
    np.testing.assert_array_equal(out[2:], 0.0)


def test_scatter_add_rows(impl):
    out = np.zeros((4, 2))
    rows = np.array([0, 2, 2], dtype=np.int64)
    vals = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    impl.scatter_add_rows(out, rows, vals)
    np.testing.assert_allclose(out, [[1, 2], [0, 0], [8, 10], [0, 0]])


def _csr(n, pairs):
    adj = [[] for _ in range(n)]
    for i, j in pairs:
        adj[i].append(j)
        adj[j].append(i)
    indptr = np.zeros(n + 1, dtype=np.int64)
    indices = []
    for i in range(n):
        nbrs = sorted(set(adj[i]))
        indices.extend(nbrs)
        indptr[i + 1] = len(indices)
    return indptr, np.array(indices, dtype=np.int64)


def test_edge_stats_triangle(impl):
    # triangle {0,1,2}: edge (0,1) has CN=1, Jacc=1/3, AA=1/ln 2, PA=4
    indptr, indices = _csr(3, [(0, 1), (1, 2), (0, 2)])
    deg = np.array([2.0, 2.0, 2.0])
    out = impl.edge_structural_stats(
        indptr, indices, deg, np.array([0], dtype=np.int64), np.array([1], dtype=np.int64)
    )
    np.testing.assert_allclose(out[0], [1.0, 1.0 / 3.0, 1.0 / np.log(2.0), 4.0], atol=1e-12)


def test_edge_stats_disjoint_pair(impl):
    indptr, indices = _csr(2, [(0, 1)])
    deg = np.array([1.0, 1.0])
    out = impl.edge_structural_stats(
        indptr, indices, deg, np.array([0], dtype=np.int64), np.array([1], dtype=np.int64)
    )
    np.testing.assert_allclose(out[0], [0.0, 0.0, 0.0, 1.0], atol=1e-12)


def test_edge_stats_self_pair_convention(impl):
    # self pair (i, i): CN = d_i, Jacc = 1, AA over own neighborhood, PA = d_i^2
    indptr, indices = _csr(4, [(0, 1), (0, 2), (0, 3), (1, 2)])
    deg = np.array([3.0, 2.0, 2.0, 1.0])
    out = impl.edge_structural_stats(
        indptr, indices, deg, np.array([0], dtype=np.int64), np.array([0], dtype=np.int64)
    )
    aa = 1.0 / np.log(2.0) + 1.0 / np.log(2.0)  # nodes 1 and 2; node 3 has degree 1
    np.testing.assert_allclose(out[0], [3.0, 1.0, aa, 9.0], atol=1e-12)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled core not built")
def test_backends_bitwise_identical():
    rng = np.random.default_rng(7)
    np_impl = _kernels.get_impl("numpy")
    cy_impl = _kernels.get_impl("cython")

    p, n_seg = 1000, 37
    seg = np.sort(rng.integers(0, n_seg, size=p)).astype(np.int64)
    vals = np.ascontiguousarray(rng.normal(size=(p, 5)))
    assert np.array_equal(np_impl.segment_sum(vals, seg, n_seg), cy_impl.segment_sum(vals, seg, n_seg))

    rows = rng.integers(0, 50, size=p).astype(np.int64)
    a = np.zeros((50, 5))
    b = np.zeros((50, 5))
    np_impl.scatter_add_rows(a, rows, vals)
    cy_impl.scatter_add_rows(b, rows, vals)
    assert np.array_equal(a, b)

    n = 40
    pairs = {(int(i), int(j)) for i, j in rng.integers(0, n, size=(120, 2)) if i != j}
    indptr, indices = _csr(n, list(pairs))
    deg = np.diff(indptr).astype(np.float64)
    esrc = np.array([i for i, _ in pairs], dtype=np.int64)
    edst = np.array([j for _, j in pairs], dtype=np.int64)
    assert np.array_equal(
        np_impl.edge_structural_stats(indptr, indices, deg, esrc, edst),
        cy_impl.edge_structural_stats(indptr, indices, deg, esrc, edst),
    )
