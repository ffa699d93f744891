"""Kernel dispatch: compiled extension when available, pure NumPy otherwise.

Set POINTDIFF_PURE=1 to force the NumPy backend (used by the benchmark and
the equivalence tests).
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

__all__ = ["BACKEND", "dft_1d", "dft_grouped_1d", "pair_hist_1d", "pair_radial_hist"]

_impl = _kernels_py
BACKEND = "python"
if not os.environ.get("POINTDIFF_PURE"):
    try:
        from . import _kernels_c as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        pass


def _f64(a) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(a, dtype=np.float64))


def dft_1d(x, weights, k, impl=None):
    """Complex sums S(k) = sum_j w_j exp(-2*pi*i*k*x_j) for 1-d point sets."""
    w = np.asarray(weights, dtype=complex)
    re, im = (impl or _impl).dft_1d(_f64(x), _f64(w.real), _f64(w.imag), _f64(k))
    return re + 1j * im


def dft_grouped_1d(x, weights, base_k, delta, q, impl=None):
    """Complex sums S(base_k[g] + j*delta), j < q, ordered group-major."""
    w = np.asarray(weights, dtype=complex)
    re, im = (impl or _impl).dft_grouped_1d(
        _f64(x), _f64(w.real), _f64(w.imag), _f64(base_k), float(delta), int(q))
    return re + 1j * im


def pair_hist_1d(x_sorted, weights, lo, width, nbins, rmax, impl=None):
    """Complex ordered-pair bin sums for sorted 1-d points (see _kernels_py)."""
    w = np.asarray(weights, dtype=complex)
    re, im = (impl or _impl).pair_hist_1d(
        _f64(x_sorted), _f64(w.real), _f64(w.imag),
        float(lo), float(width), int(nbins), float(rmax),
    )
    return re + 1j * im


def pair_radial_hist(points, r_edges, halfwidth, impl=None):
    """Translation-corrected radial ordered-pair counts (cube window)."""
    pts = np.ascontiguousarray(np.atleast_2d(np.asarray(points, dtype=np.float64)))
    return (impl or _impl).pair_radial_hist(pts, _f64(r_edges), float(halfwidth))
