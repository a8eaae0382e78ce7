"""Pure-numpy implementations of the hot kernels.

Semantics are shared with the compiled core in ``_core.pyx``; both
accumulate in the same element order so results are bitwise identical
across backends.
"""
import numpy as np


def segment_sum(values, seg, n_segments):
    """Sum rows of ``values`` (P, m) into ``n_segments`` buckets.

    ``seg`` must be int64, non-decreasing, with entries in [0, n_segments).
    Empty segments yield zero rows.
    """
    values = np.ascontiguousarray(values, dtype=np.float64)
    out = np.zeros((n_segments, values.shape[1]), dtype=np.float64)
    if values.shape[0] == 0:
        return out
    # reduceat needs the first row index of every non-empty segment
    starts = np.flatnonzero(np.r_[True, seg[1:] != seg[:-1]])
    out[seg[starts]] = np.add.reduceat(values, starts, axis=0)
    return out


def scatter_add_rows(out, rows, values):
    """out[rows[p]] += values[p] for every p, in index order (in place)."""
    np.add.at(out, rows, values)
    return out


def edge_structural_stats(indptr, indices, deg, esrc, edst):
    """Per-edge local statistics over sorted CSR neighbor lists.

    Returns (E, 4) columns [common_neighbors, jaccard, adamic_adar,
    pref_attachment]. Adamic-Adar skips common neighbors of degree <= 1
    (1/log d is singular there). Self-pairs (i == i) use the substitution
    N(i) ∩ N(i) = N(i), giving CN = d_i, Jaccard = 1 for d_i > 0.
    """
    n_edges = len(esrc)
    out = np.zeros((n_edges, 4), dtype=np.float64)
    log_deg = np.zeros_like(deg)
    big = deg > 1
    log_deg[big] = 1.0 / np.log(deg[big])
    for e in range(n_edges):
        i, j = esrc[e], edst[e]
        ni = indices[indptr[i] : indptr[i + 1]]
        nj = indices[indptr[j] : indptr[j + 1]]
        common = ni if i == j else np.intersect1d(ni, nj, assume_unique=True)
        cn = float(len(common))
        union = deg[i] + deg[j] - cn if i != j else deg[i]
        out[e, 0] = cn
        out[e, 1] = cn / union if union > 0 else 0.0
        out[e, 2] = float(log_deg[common].sum())
        out[e, 3] = deg[i] * deg[j]
    return out
