"""Pure-NumPy implementations of the hot kernels.

Same contracts as the compiled module ``_kernels_c``; selected automatically
when the extension is unavailable or when POINTDIFF_PURE is set.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

_CHUNK = 256


def dft_1d(x: np.ndarray, wre: np.ndarray, wim: np.ndarray, k: np.ndarray):
    """S(k) = sum_j w_j exp(-2*pi*i*k*x_j) for 1-d points; returns (re, im)."""
    w = wre + 1j * wim
    out = np.empty(k.size, dtype=complex)
    for lo in range(0, k.size, _CHUNK):
        kk = k[lo : lo + _CHUNK]
        out[lo : lo + _CHUNK] = np.exp(-2j * np.pi * np.outer(kk, x)) @ w
    return np.ascontiguousarray(out.real), np.ascontiguousarray(out.imag)


def dft_grouped_1d(x: np.ndarray, wre: np.ndarray, wim: np.ndarray,
                   base_k: np.ndarray, delta: float, q: int):
    """S at k = base_k[g] + j*delta for j in range(q), exploiting the even
    spacing: one base exponential per (group, point) plus phase recurrences.
    Returns (re, im) of shape (len(base_k) * q,) ordered group-major."""
    w = wre + 1j * wim
    inc = np.exp(-2j * np.pi * delta * x)
    ng = base_k.size
    out = np.empty(ng * q, dtype=complex)
    for lo in range(0, ng, _CHUNK):
        kb = base_k[lo : lo + _CHUNK]
        cur = np.exp(-2j * np.pi * np.outer(kb, x)) * w
        idx = (lo + np.arange(kb.size)) * q
        for j in range(q):
            out[idx + j] = cur.sum(axis=1)
            if j + 1 < q:
                cur = cur * inc
    return np.ascontiguousarray(out.real), np.ascontiguousarray(out.imag)


def pair_hist_1d(
    x: np.ndarray, wre: np.ndarray, wim: np.ndarray,
    lo: float, width: float, nbins: int, rmax: float,
):
    """Ordered-pair products w_j * conj(w_i) binned at x_j - x_i, |dz| <= rmax.

    ``x`` must be sorted ascending.  Returns (re, im) bin sums.
    """
    n = x.size
    re = np.zeros(nbins)
    im = np.zeros(nbins)
    if n < 2:
        return re, im
    w = wre + 1j * wim
    hi = np.searchsorted(x, x + rmax, side="right")
    starts = np.arange(1, n + 1)
    counts = np.maximum(hi - starts, 0)
    total = int(counts.sum())
    if total == 0:
        return re, im
    ii = np.repeat(np.arange(n), counts)
    offsets = np.cumsum(counts) - counts
    jj = np.arange(total) - np.repeat(offsets, counts) + np.repeat(starts, counts)
    dz = x[jj] - x[ii]
    prod = w[jj] * np.conj(w[ii])
    for sign in (1.0, -1.0):
        z = sign * dz
        p = prod if sign > 0 else np.conj(prod)
        idx = np.floor((z - lo) / width).astype(np.int64)
        ok = (idx >= 0) & (idx < nbins)
        re += np.bincount(idx[ok], weights=p.real[ok], minlength=nbins)
        im += np.bincount(idx[ok], weights=p.imag[ok], minlength=nbins)
    return re, im


def pair_radial_hist(pts: np.ndarray, r_edges: np.ndarray, halfwidth: float):
    """Translation-corrected ordered-pair counts per radial bin (cube window).

    Each unordered pair at separation dz contributes 2 / prod_d(2s - |dz_d|),
    the reciprocal overlap volume of the window with its translate, binned by
    |dz| on ``r_edges``.
    """
    nbins = r_edges.size - 1
    out = np.zeros(nbins)
    if pts.shape[0] < 2:
        return out
    pairs = cKDTree(pts).query_pairs(float(r_edges[-1]), output_type="ndarray")
    if pairs.size == 0:
        return out
    dz = pts[pairs[:, 0]] - pts[pairs[:, 1]]
    r = np.linalg.norm(dz, axis=1)
    overlap = np.prod(2.0 * halfwidth - np.abs(dz), axis=1)
    idx = np.searchsorted(r_edges, r, side="right") - 1
    ok = (idx >= 0) & (idx < nbins) & (r >= r_edges[0]) & (overlap > 0)
    np.add.at(out, idx[ok], 2.0 / overlap[ok])
    return out
