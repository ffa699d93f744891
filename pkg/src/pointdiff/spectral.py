"""Estimators: periodograms, autocorrelation histograms, Palm averages,
radial pair correlations, and the empirical-vs-reference comparison report.

All estimators are pure functions of a realisation; realisation averaging is
done by small accumulator classes that keep running sums in a fixed order,
so results are bit-identical for a fixed (seed, realisation count) no matter
how many workers produced the realisations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from ._kernels import dft_1d, pair_hist_1d, pair_radial_hist
from .measures import SpectralModel, WeightedPointSet

__all__ = [
    "EmpiricalSpectrum",
    "AcHistogram",
    "RadialPairEstimate",
    "periodogram",
    "empirical_autocorr",
    "palm_first_moment",
    "pair_correlation_radial",
    "bragg_weight",
    "ac_density_estimate",
    "bartlett",
    "compare",
    "scan_unexplained",
    "CheckEntry",
    "ComparisonReport",
    "SpectrumAccumulator",
    "AcAccumulator",
    "RadialAccumulator",
    "spectrum_to_csv",
    "autocorr_to_csv",
]

_PAIR_GUARD = 10**10


# ---------------------------------------------------------------------------
# single-realisation estimators
# ---------------------------------------------------------------------------


def periodogram(ps: WeightedPointSet, k_grid) -> np.ndarray:
    """Scattering intensity I(k) = |sum_x w_x exp(-2 pi i k.x)|^2 / vol."""
    kv = np.atleast_2d(np.asarray(k_grid, dtype=float))
    if kv.shape[0] == 1 and kv.shape[1] != ps.dim and kv.shape[1] > 0:
        kv = kv.T
    if kv.shape[1] != ps.dim:
        raise ValueError("k grid dimension mismatch")
    vol = ps.window.volume()
    if ps.count == 0:
        return np.zeros(kv.shape[0])
    if ps.dim == 1:
        s = dft_1d(ps.points[:, 0], ps.weights, kv[:, 0])
    else:
        s = np.exp(-2j * math.pi * kv @ ps.points.T) @ ps.weights
    return np.abs(s) ** 2 / vol


def _centered_bins(bin_width: float, max_radius: float):
    """Odd number of bins of the given width, centred on multiples of it.

    The outermost bin edge stays inside max_radius, so every bin sees the
    full pair population (no half-covered edge bins).
    """
    nhalf = max(0, int(math.floor(max_radius / bin_width - 0.5 + 1e-9)))
    nbins = 2 * nhalf + 1
    lo = -(nhalf + 0.5) * bin_width
    edges = lo + bin_width * np.arange(nbins + 1)
    centres = bin_width * (np.arange(nbins) - nhalf)
    return lo, edges, centres, nbins


@dataclass(frozen=True)
class AcHistogram:
    """Binned two-point (autocorrelation) estimate for 1-d realisations.

    ``bins`` holds complex densities: pair products w_x conj(w_y) summed per
    bin of x - y and divided by (window volume x bin width).  The mass at 0
    (sum |w_x|^2 / vol) is kept separately.
    """

    bin_edges: np.ndarray
    bin_centres: np.ndarray
    bins: np.ndarray
    bin_stderr: np.ndarray
    atom0: float
    realisation_count: int
    window_volume: float

    def __post_init__(self):
        if self.atom0 < 0:
            raise ValueError("atom-at-0 mass must be nonnegative")


def empirical_autocorr(
    ps: WeightedPointSet, bin_width: float, max_radius: Optional[float] = None
) -> AcHistogram:
    """Naive in-window pair histogram of one realisation (1-d).

    Both points of every ordered pair must lie in the window, which biases
    bin z by exactly a factor (1 - |z| / L) for an interval of length L; the
    estimator is kept naive so that this surface term stays exactly testable.
    """
    if ps.dim != 1:
        raise ValueError("vector-difference histograms are implemented for d = 1; use pair_correlation_radial")
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    span = 2.0 * ps.window.scale
    if max_radius is None:
        if ps.count**2 > _PAIR_GUARD:
            raise ValueError("pair count above guard; pass max_radius to cut by distance")
        max_radius = span
    lo, edges, centres, nbins = _centered_bins(bin_width, max_radius)
    order = np.argsort(ps.points[:, 0])
    x = ps.points[order, 0]
    w = ps.weights[order]
    sums = pair_hist_1d(x, w, lo, bin_width, nbins, max_radius)
    vol = ps.window.volume()
    dens = sums / (vol * bin_width)
    atom0 = float(np.sum(np.abs(ps.weights) ** 2)) / vol
    return AcHistogram(edges, centres, dens, np.zeros(nbins), atom0, 1, vol)


def palm_first_moment(
    realisations: Iterable[WeightedPointSet], bin_width: float, max_radius: float
) -> AcHistogram:
    """Average neighbourhood histogram around a typical point (1-d).

    Centres are taken in the window eroded by ``max_radius`` so every centre
    sees its full neighbourhood; for each centre the differences to all
    other points are binned, normalised per centre and per bin width.  The
    atom at 0 is the average self-mass per centre (1 for unit weights).
    """
    if bin_width <= 0 or max_radius <= 0:
        raise ValueError("bin_width and max_radius must be positive")
    lo, edges, centres_axis, nbins = _centered_bins(bin_width, max_radius)
    per_real = []
    total_real = 0
    for ps in realisations:
        total_real += 1
        if ps.dim != 1:
            raise ValueError("Palm averages are implemented for d = 1")
        eroded = ps.window.erode(max_radius)
        x = np.sort(ps.points[:, 0])
        sel = np.abs(x) < eroded.scale
        xc = x[sel]
        if xc.size == 0:
            raise ValueError("no points in the eroded window")
        lo_idx = np.searchsorted(x, xc - max_radius, side="left")
        hi_idx = np.searchsorted(x, xc + max_radius, side="right")
        counts = hi_idx - lo_idx
        ii = np.repeat(np.arange(xc.size), counts)
        offs = np.cumsum(counts) - counts
        jj = np.arange(int(counts.sum())) - np.repeat(offs, counts) + np.repeat(lo_idx, counts)
        dz = x[jj] - xc[ii]
        centre_global = np.flatnonzero(sel)
        dz = dz[jj != centre_global[ii]]
        idx = np.floor((dz - lo) / bin_width).astype(np.int64)
        ok = (idx >= 0) & (idx < nbins)
        hist = np.bincount(idx[ok], minlength=nbins).astype(float)
        per_real.append(hist / (xc.size * bin_width))
    stack = np.asarray(per_real)
    mean = stack.mean(axis=0)
    stderr = stack.std(axis=0, ddof=1) / math.sqrt(total_real) if total_real > 1 else np.zeros(nbins)
    return AcHistogram(edges, centres_axis, mean.astype(complex), stderr, 1.0, total_real, float("nan"))


@dataclass(frozen=True)
class RadialPairEstimate:
    """Radial pair-correlation density with translation (overlap) correction."""

    r_edges: np.ndarray
    r_centres: np.ndarray
    density: np.ndarray
    stderr: np.ndarray
    realisation_count: int


def _shell_volumes(dim: int, r_edges: np.ndarray) -> np.ndarray:
    unit = math.pi ** (dim / 2.0) / math.gamma(dim / 2.0 + 1.0)
    vols = unit * np.asarray(r_edges, dtype=float) ** dim
    return np.diff(vols)


def pair_correlation_radial(ps: WeightedPointSet, r_edges) -> np.ndarray:
    """Unbiased radial two-point density of one realisation (cube window).

    Each ordered pair at separation dz is weighted by the reciprocal overlap
    volume of the window with its dz-translate, which removes the edge bias
    of the naive estimator exactly.
    """
    if ps.window.kind != "cube":
        raise ValueError("translation correction implemented for cube windows")
    edges = np.asarray(r_edges, dtype=float)
    counts = pair_radial_hist(ps.points, edges, ps.window.scale)
    return counts / _shell_volumes(ps.dim, edges)


# ---------------------------------------------------------------------------
# realisation-averaged containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EmpiricalSpectrum:
    """Averaged periodogram on a scalar-labelled grid plus estimated atoms."""

    k_scalars: np.ndarray
    k_vectors: np.ndarray
    intensity_mean: np.ndarray
    intensity_stderr: np.ndarray
    atom_k_scalars: np.ndarray
    atom_k_vectors: np.ndarray
    atom_weights: np.ndarray
    atom_stderr: np.ndarray
    realisation_count: int
    window_volume: float

    def __post_init__(self):
        if np.any(self.intensity_mean < 0):
            raise ValueError("intensities must be nonnegative")
        if not np.all(np.isfinite(self.intensity_stderr)):
            raise ValueError("stderr must be finite")
        if np.any(self.atom_weights < -3.0 * self.atom_stderr - 1e-15):
            raise ValueError("atom weight below the noise floor sanity bound")


class SpectrumAccumulator:
    """Running mean/stderr of I(k) per grid point, with Daniell-style grouping.

    ``group_index`` maps each evaluated wavevector to its grid point; the
    per-realisation value of a grid point is the mean of its group, which
    tightens the raw periodogram variance without touching the rectangular
    window.  Atom candidates are accumulated as I(k0)/vol.
    """

    def __init__(self, k_scalars, k_vectors, group_index, n_groups,
                 atom_scalars, atom_vectors, window_volume):
        self.k_scalars = np.asarray(k_scalars, dtype=float)
        self.k_vectors = np.atleast_2d(np.asarray(k_vectors, dtype=float))
        self.group_index = np.asarray(group_index, dtype=np.int64)
        self.n_groups = int(n_groups)
        self.group_counts = np.bincount(self.group_index, minlength=self.n_groups).astype(float)
        self.atom_scalars = np.asarray(atom_scalars, dtype=float)
        self.atom_vectors = np.atleast_2d(np.asarray(atom_vectors, dtype=float))
        self.window_volume = float(window_volume)
        self._sum = np.zeros(self.n_groups)
        self._sumsq = np.zeros(self.n_groups)
        self._atom_sum = np.zeros(self.atom_scalars.size)
        self._atom_sumsq = np.zeros(self.atom_scalars.size)
        self._n = 0

    @property
    def eval_vectors(self) -> np.ndarray:
        if self.atom_vectors.size:
            return np.concatenate([self.k_vectors, self.atom_vectors], axis=0)
        return self.k_vectors

    def add(self, intensities: np.ndarray) -> None:
        m = self.group_index.size
        grid_i = np.asarray(intensities[:m], dtype=float)
        vals = np.bincount(self.group_index, weights=grid_i, minlength=self.n_groups).astype(float)
        vals /= np.maximum(self.group_counts, 1)
        self._sum += vals
        self._sumsq += vals**2
        if self.atom_scalars.size:
            a = np.asarray(intensities[m:], dtype=float) / self.window_volume
            self._atom_sum += a
            self._atom_sumsq += a**2
        self._n += 1

    def merge(self, other: "SpectrumAccumulator") -> None:
        self._sum += other._sum
        self._sumsq += other._sumsq
        self._atom_sum += other._atom_sum
        self._atom_sumsq += other._atom_sumsq
        self._n += other._n

    def finalize(self) -> EmpiricalSpectrum:
        n = max(self._n, 1)
        mean = self._sum / n
        var = np.maximum(self._sumsq / n - mean**2, 0.0)
        stderr = np.sqrt(var / max(n - 1, 1))
        amean = self._atom_sum / n
        avar = np.maximum(self._atom_sumsq / n - amean**2, 0.0)
        astderr = np.sqrt(avar / max(n - 1, 1))
        rep_vectors = self._rep_vectors()
        return EmpiricalSpectrum(
            self.k_scalars, rep_vectors, mean, stderr,
            self.atom_scalars, self.atom_vectors, amean, astderr,
            self._n, self.window_volume,
        )

    def _rep_vectors(self) -> np.ndarray:
        reps = np.zeros((self.n_groups, self.k_vectors.shape[1]))
        np.add.at(reps, self.group_index, self.k_vectors)
        return reps / np.maximum(self.group_counts, 1)[:, None]


class AcAccumulator:
    """Running mean/stderr of empirical_autocorr histograms."""

    def __init__(self, bin_width: float, max_radius: float, window_volume: float):
        self.bin_width = float(bin_width)
        self.max_radius = float(max_radius)
        self.window_volume = float(window_volume)
        lo, edges, centres, nbins = _centered_bins(bin_width, max_radius)
        self.edges, self.centres, self.nbins = edges, centres, nbins
        self._sum = np.zeros(nbins, dtype=complex)
        self._sumsq = np.zeros(nbins)
        self._atom_sum = 0.0
        self._n = 0

    def add(self, hist: AcHistogram) -> None:
        self._sum += hist.bins
        self._sumsq += np.abs(hist.bins) ** 2
        self._atom_sum += hist.atom0
        self._n += 1

    def merge(self, other: "AcAccumulator") -> None:
        self._sum += other._sum
        self._sumsq += other._sumsq
        self._atom_sum += other._atom_sum
        self._n += other._n

    def finalize(self) -> AcHistogram:
        n = max(self._n, 1)
        mean = self._sum / n
        var = np.maximum(self._sumsq / n - np.abs(mean) ** 2, 0.0)
        stderr = np.sqrt(var / max(n - 1, 1))
        return AcHistogram(self.edges, self.centres, mean, stderr,
                           self._atom_sum / n, self._n, self.window_volume)


class RadialAccumulator:
    """Running mean/stderr of translation-corrected radial densities."""

    def __init__(self, r_edges, dim: int):
        self.r_edges = np.asarray(r_edges, dtype=float)
        self.r_centres = 0.5 * (self.r_edges[1:] + self.r_edges[:-1])
        self.dim = dim
        nb = self.r_edges.size - 1
        self._sum = np.zeros(nb)
        self._sumsq = np.zeros(nb)
        self._n = 0

    def add(self, density: np.ndarray) -> None:
        self._sum += density
        self._sumsq += density**2
        self._n += 1

    def merge(self, other: "RadialAccumulator") -> None:
        self._sum += other._sum
        self._sumsq += other._sumsq
        self._n += other._n

    def finalize(self) -> RadialPairEstimate:
        n = max(self._n, 1)
        mean = self._sum / n
        var = np.maximum(self._sumsq / n - mean**2, 0.0)
        stderr = np.sqrt(var / max(n - 1, 1))
        return RadialPairEstimate(self.r_edges, self.r_centres, mean, stderr, self._n)


# ---------------------------------------------------------------------------
# readouts
# ---------------------------------------------------------------------------


def bragg_weight(emp: EmpiricalSpectrum, k0, atom_tol: float):
    """Estimated peak weight at k0: realisation mean of I(k0)/vol, with stderr."""
    k0v = np.atleast_1d(np.asarray(k0, dtype=float))
    if emp.atom_k_vectors.size:
        dist = np.linalg.norm(emp.atom_k_vectors - k0v, axis=1)
        i = int(np.argmin(dist))
        if dist[i] <= atom_tol:
            return float(emp.atom_weights[i]), float(emp.atom_stderr[i])
    raise ValueError(f"k0={k0} is farther than atom_tol from every estimated atom position")


def ac_density_estimate(
    emp: EmpiricalSpectrum, k, pp_exclusion_radius: float,
    atom_positions: Optional[np.ndarray] = None,
):
    """Diffuse density readout at grid point k, guarding against peak leakage."""
    kv = np.atleast_1d(np.asarray(k, dtype=float))
    atoms = emp.atom_k_vectors if atom_positions is None else np.atleast_2d(atom_positions)
    if atoms.size and np.min(np.linalg.norm(atoms - kv, axis=1)) < pp_exclusion_radius:
        raise ValueError("k lies inside a peak exclusion zone")
    dist = np.linalg.norm(emp.k_vectors - kv, axis=1)
    i = int(np.argmin(dist))
    if dist[i] > 1e-9 + 1e-9 * np.linalg.norm(kv):
        raise ValueError("k is not on the evaluated grid")
    return float(emp.intensity_mean[i]), float(emp.intensity_stderr[i])


def bartlett(model: SpectralModel, rho: float) -> SpectralModel:
    """Covariance spectrum: the reference model with rho^2 removed from the 0 peak."""
    pos, wts = model.atoms(1e-9)
    w0 = float(wts[0]) if pos.shape[0] else 0.0
    if w0 < rho**2 - 1e-12 * max(1.0, rho**2):
        raise ValueError("model 0-atom weight is below rho^2; inconsistent inputs")
    drop = abs(w0 - rho**2) <= 1e-12 * max(1.0, rho**2)

    def atom_fn(cutoff: float):
        p, w = model.atoms(cutoff)
        if p.shape[0]:
            at0 = np.linalg.norm(p, axis=1) <= 1e-9
            w = w.copy()
            w[at0] -= rho**2
            if drop:
                p, w = p[~at0], w[~at0]
        return p, w

    return SpectralModel(model.dim, atom_fn, model.density_fn, model.singular_fn,
                         label=f"bartlett({model.label})", ac_exact=model.ac_exact,
                         deterministic_comb=model.deterministic_comb)


def scan_unexplained(emp: EmpiricalSpectrum, model: SpectralModel, atom_tol: float,
                     factor: float = 5.0) -> np.ndarray:
    """Candidate scalars whose peak-style estimate exceeds the diffuse level
    by more than ``factor`` times its stderr without a model atom nearby.

    The diffuse floor at a candidate is the model density divided by the
    window volume (a peak of weight w contributes w + density/vol to the
    I(k)/vol readout, so the excess isolates genuine point masses).
    """
    span = float(np.max(np.abs(emp.atom_k_scalars))) if emp.atom_k_scalars.size else 0.0
    known, _ = model.atoms(span + 1.0)
    sing = model.singular_points(span + 1.0)
    if sing.shape[0]:
        known = np.concatenate([known, sing], axis=0) if known.shape[0] else sing
    flagged = []
    for s, kv, w, se in zip(emp.atom_k_scalars, emp.atom_k_vectors, emp.atom_weights, emp.atom_stderr):
        if known.shape[0] and np.min(np.linalg.norm(known - kv, axis=1)) <= atom_tol:
            continue
        floor = float(model.ac_density(kv[None, :])[0]) / emp.window_volume
        if w - floor > factor * max(se, 1e-300):
            flagged.append(s)
    return np.asarray(flagged)


# ---------------------------------------------------------------------------
# comparison report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckEntry:
    name: str
    value: float
    bound: Optional[float]
    passed: Optional[bool]

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "bound": self.bound, "passed": self.passed}


@dataclass
class ComparisonReport:
    entries: "list[CheckEntry]" = field(default_factory=list)

    def add(self, name: str, value: float, bound: Optional[float] = None) -> None:
        passed = None if bound is None else bool(value <= bound)
        self.entries.append(CheckEntry(name, float(value), bound, passed))

    def add_bool(self, name: str, ok: bool) -> None:
        self.entries.append(CheckEntry(name, float(not ok), 0.5, bool(ok)))

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries if e.passed is not None)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [e.to_dict() for e in self.entries]}

    def __str__(self) -> str:
        lines = []
        for e in self.entries:
            status = "----" if e.passed is None else ("PASS" if e.passed else "FAIL")
            bound = "" if e.bound is None else f" (bound {e.bound:g})"
            lines.append(f"[{status}] {e.name}: {e.value:.6g}{bound}")
        return "\n".join(lines)


def compare(emp: EmpiricalSpectrum, model: SpectralModel, tolerances: dict) -> ComparisonReport:
    """Per-atom and density errors of an averaged spectrum against a model.

    Recognised tolerance keys: ``atom_rel`` (max relative peak-weight error),
    ``density_mean_rel``, ``density_max_rel`` (mean/max relative density
    error over the grid), ``density_z_max`` (max standardised residual).
    Entries without a matching key are reported unchecked.
    """
    rep = ComparisonReport()
    if emp.atom_k_vectors.size:
        mpos, mwts = model.atoms(float(np.max(np.abs(emp.atom_k_scalars))) + 1.0)
        rels, zs = [], []
        for kv, w, se in zip(emp.atom_k_vectors, emp.atom_weights, emp.atom_stderr):
            if mpos.shape[0] == 0:
                continue
            dist = np.linalg.norm(mpos - kv, axis=1)
            j = int(np.argmin(dist))
            if dist[j] > 1e-6:
                continue
            rels.append(abs(w - mwts[j]) / abs(mwts[j]))
            if se > 0:
                zs.append(abs(w - mwts[j]) / se)
        if rels:
            rep.add("atom_rel_max", max(rels), tolerances.get("atom_rel"))
        if zs:
            rep.add("atom_z_max", max(zs), tolerances.get("atom_z_max"))
    if emp.k_vectors.size:
        ref = model.ac_density(emp.k_vectors)
        est = emp.intensity_mean
        ok = ref > 0
        rel = np.abs(est[ok] - ref[ok]) / ref[ok]
        if rel.size:
            rep.add("density_mean_rel", float(rel.mean()), tolerances.get("density_mean_rel"))
            rep.add("density_max_rel", float(rel.max()), tolerances.get("density_max_rel"))
            l1 = float(np.sum(np.abs(est[ok] - ref[ok])) / np.sum(ref[ok]))
            rep.add("density_l1_rel", l1, tolerances.get("density_l1_rel"))
        se = emp.intensity_stderr
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.abs(est - ref) / se
        z = z[np.isfinite(z)]
        if z.size:
            rep.add("density_z_max", float(z.max()), tolerances.get("density_z_max"))
    return rep


# ---------------------------------------------------------------------------
# serialisation
# ---------------------------------------------------------------------------


def spectrum_to_csv(emp: EmpiricalSpectrum) -> str:
    lines = ["k,mean,stderr"]
    for k, m, s in zip(emp.k_scalars, emp.intensity_mean, emp.intensity_stderr):
        lines.append(f"{k:.17g},{m:.17g},{s:.17g}")
    return "\n".join(lines) + "\n"


def autocorr_to_csv(hist: AcHistogram) -> str:
    lines = ["z,re,im,stderr"]
    for z, v, s in zip(hist.bin_centres, hist.bins, hist.bin_stderr):
        lines.append(f"{z:.17g},{v.real:.17g},{v.imag:.17g},{s:.17g}")
    return "\n".join(lines) + "\n"
