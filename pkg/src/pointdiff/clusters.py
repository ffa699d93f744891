"""Compound (cluster) processes: decorate centre points with i.i.d. finite measures.

Each cluster law carries its exact first and second Fourier moments, so the
reference spectrum of a decorated process is exact; the samplers are checked
against those moments by tests rather than the other way round.  Signed
clusters are allowed on random centre processes; complex weights only on
deterministic combs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .measures import AveragingWindow, FiniteCluster, SpectralModel, WeightedPointSet

__all__ = [
    "ClusterLaw",
    "DeterministicCluster",
    "RandomWeight",
    "bernoulli_weight",
    "GaussianDisplacement",
    "UniformDisplacement",
    "NeymanScott",
    "SignedBernoulli",
    "sample_cluster",
    "sample_compound",
    "compound_model",
    "compound_autocorr_atoms",
]


def _as_k(k, dim):
    kk = np.asarray(k, dtype=float)
    if kk.ndim == 0:
        kk = kk.reshape(1, 1)
    elif kk.ndim == 1:
        kk = kk[:, None] if dim == 1 else kk[None, :]
    return kk


class ClusterLaw:
    """Law of a finite random measure with closed-form Fourier moments."""

    dim: int = 1

    def mean_ft(self, k) -> np.ndarray:
        """Expected cluster transform at k."""
        raise NotImplementedError

    def second_ft(self, k) -> np.ndarray:
        """Expected squared modulus of the cluster transform at k."""
        raise NotImplementedError

    def total_mean_mass(self) -> complex:
        return complex(self.mean_ft(np.zeros((1, self.dim)))[0])

    def sample(self, rng: np.random.Generator) -> FiniteCluster:
        raise NotImplementedError

    @property
    def is_real(self) -> bool:
        return True

    def mean_atoms(self) -> Optional[FiniteCluster]:
        """Atomic representation of the expected cluster, when purely atomic."""
        return None

    def second_atoms(self) -> Optional[FiniteCluster]:
        """Atomic representation of the expected pair measure, when purely atomic."""
        return None

    def offset_margin(self) -> float:
        """Window dilation needed so decorated points rarely leave the target."""
        return 0.0

    def sample_bulk(self, rng: np.random.Generator, n: int):
        """n independent draws: (sizes, stacked offsets, stacked weights)."""
        sizes = np.empty(n, dtype=np.int64)
        offs, wts = [], []
        for i in range(n):
            cl = self.sample(rng)
            sizes[i] = cl.size
            if cl.size:
                offs.append(cl.offsets)
                wts.append(cl.weights)
        if offs:
            return sizes, np.concatenate(offs, axis=0), np.concatenate(wts)
        return sizes, np.zeros((0, self.dim)), np.zeros(0, dtype=complex)


@dataclass(frozen=True)
class DeterministicCluster(ClusterLaw):
    """Every centre receives the same fixed finite measure."""

    cluster: FiniteCluster

    @property
    def dim(self) -> int:
        return self.cluster.offsets.shape[1]

    def _ft(self, k) -> np.ndarray:
        kk = _as_k(k, self.dim)
        return np.exp(-2j * math.pi * kk @ self.cluster.offsets.T) @ self.cluster.weights

    def mean_ft(self, k):
        return self._ft(k)

    def second_ft(self, k):
        return np.abs(self._ft(k)) ** 2

    def sample(self, rng):
        return self.cluster

    @property
    def is_real(self) -> bool:
        return bool(np.all(np.abs(self.cluster.weights.imag) == 0.0))

    def mean_atoms(self):
        return self.cluster

    def second_atoms(self):
        return _convolve_reflected(self.cluster, self.cluster)

    def offset_margin(self) -> float:
        if self.cluster.size == 0:
            return 0.0
        return float(np.max(np.abs(self.cluster.offsets)))

    def sample_bulk(self, rng, n):
        m = self.cluster.size
        sizes = np.full(n, m, dtype=np.int64)
        return sizes, np.tile(self.cluster.offsets, (n, 1)), np.tile(self.cluster.weights, n)


@dataclass(frozen=True)
class RandomWeight(ClusterLaw):
    """A single point at the origin with a random (possibly complex) weight.

    The weight law is a finite table of (value, probability); the moments are
    computed exactly from the table.
    """

    values: tuple
    probs: tuple
    dim: int = 1

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.size != len(self.values) or p.size == 0:
            raise ValueError("values and probs must be nonempty and equal length")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("probs must be nonnegative and sum to 1")

    def _moments(self):
        v = np.asarray(self.values, dtype=complex)
        p = np.asarray(self.probs, dtype=float)
        return complex(np.dot(p, v)), float(np.dot(p, np.abs(v) ** 2))

    def mean_ft(self, k):
        kk = _as_k(k, self.dim)
        mean, _ = self._moments()
        return np.full(kk.shape[0], mean, dtype=complex)

    def second_ft(self, k):
        kk = _as_k(k, self.dim)
        _, second = self._moments()
        return np.full(kk.shape[0], second)

    def sample(self, rng):
        v = np.asarray(self.values, dtype=complex)
        weight = v[rng.choice(v.size, p=np.asarray(self.probs, dtype=float))]
        if weight == 0:
            return FiniteCluster(np.zeros((0, self.dim)), np.zeros(0))
        return FiniteCluster(np.zeros((1, self.dim)), np.array([weight]))

    @property
    def is_real(self) -> bool:
        return bool(np.all(np.abs(np.asarray(self.values, dtype=complex).imag) == 0.0))

    def mean_atoms(self):
        mean, _ = self._moments()
        return FiniteCluster(np.zeros((1, self.dim)), np.array([mean]))

    def second_atoms(self):
        _, second = self._moments()
        return FiniteCluster(np.zeros((1, self.dim)), np.array([second]))

    def sample_bulk(self, rng, n):
        v = np.asarray(self.values, dtype=complex)
        drawn = v[rng.choice(v.size, size=n, p=np.asarray(self.probs, dtype=float))]
        nz = drawn != 0
        sizes = nz.astype(np.int64)
        return sizes, np.zeros((int(nz.sum()), self.dim)), drawn[nz]


def bernoulli_weight(p: float, dim: int = 1) -> RandomWeight:
    """Occupation model: keep the point with probability p, else drop it."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    return RandomWeight(values=(1.0, 0.0), probs=(p, 1.0 - p), dim=dim)


@dataclass(frozen=True)
class SignedBernoulli(ClusterLaw):
    """A unit charge at the origin with sign +1 (probability p) or -1."""

    p: float = 0.5
    dim: int = 1

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")

    def mean_ft(self, k):
        kk = _as_k(k, self.dim)
        return np.full(kk.shape[0], 2.0 * self.p - 1.0, dtype=complex)

    def second_ft(self, k):
        kk = _as_k(k, self.dim)
        return np.ones(kk.shape[0])

    def sample(self, rng):
        sign = 1.0 if rng.uniform() < self.p else -1.0
        return FiniteCluster(np.zeros((1, self.dim)), np.array([sign]))

    def mean_atoms(self):
        return FiniteCluster(np.zeros((1, self.dim)), np.array([2.0 * self.p - 1.0]))

    def second_atoms(self):
        return FiniteCluster(np.zeros((1, self.dim)), np.array([1.0]))

    def sample_bulk(self, rng, n):
        signs = np.where(rng.uniform(size=n) < self.p, 1.0, -1.0)
        return np.ones(n, dtype=np.int64), np.zeros((n, self.dim)), signs.astype(complex)


class _Displacement:
    """Common machinery for one random point displaced from the centre."""

    def displacement_ft(self, k) -> np.ndarray:
        raise NotImplementedError

    def sample_offsets(self, rng, n: int) -> np.ndarray:
        raise NotImplementedError

    def mean_ft(self, k):
        return self.displacement_ft(k).astype(complex)

    def second_ft(self, k):
        kk = _as_k(k, self.dim)
        return np.ones(kk.shape[0])

    def sample(self, rng):
        return FiniteCluster(self.sample_offsets(rng, 1), np.ones(1))

    def sample_bulk(self, rng, n):
        return np.ones(n, dtype=np.int64), self.sample_offsets(rng, n), np.ones(n, dtype=complex)


@dataclass(frozen=True)
class GaussianDisplacement(_Displacement, ClusterLaw):
    """Each point is shifted by an isotropic Gaussian of scale sigma."""

    sigma: float
    dim: int = 1

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")

    def displacement_ft(self, k):
        kk = _as_k(k, self.dim)
        k2 = np.einsum("ij,ij->i", kk, kk)
        return np.exp(-2.0 * math.pi**2 * self.sigma**2 * k2)

    def sample_offsets(self, rng, n):
        return rng.normal(0.0, self.sigma, size=(n, self.dim))

    def offset_margin(self) -> float:
        return 8.0 * self.sigma


@dataclass(frozen=True)
class UniformDisplacement(_Displacement, ClusterLaw):
    """Each point is shifted uniformly in the centred box of half-width a."""

    a: float
    dim: int = 1

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError("a must be positive")

    def displacement_ft(self, k):
        kk = _as_k(k, self.dim)
        x = 2.0 * math.pi * self.a * kk
        sinc = np.divide(np.sin(x), x, where=x != 0, out=np.ones_like(x))
        return np.prod(sinc, axis=1)

    def sample_offsets(self, rng, n):
        return rng.uniform(-self.a, self.a, size=(n, self.dim))

    def offset_margin(self) -> float:
        return self.a


@dataclass(frozen=True)
class NeymanScott(ClusterLaw):
    """A random number of points, each displaced independently from the centre.

    The count law is an explicit table on {0, ..., len(count_probs) - 1}; the
    displacement law supplies the transform.  Moments are exact from the
    table.
    """

    count_probs: tuple
    displacement: _Displacement

    def __post_init__(self):
        p = np.asarray(self.count_probs, dtype=float)
        if p.size == 0 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("count_probs must be a probability table")

    @property
    def dim(self) -> int:
        return self.displacement.dim

    def _count_moments(self):
        p = np.asarray(self.count_probs, dtype=float)
        kvals = np.arange(p.size)
        m = float(np.dot(p, kvals))
        ek2 = float(np.dot(p, kvals**2))
        return m, ek2

    def mean_ft(self, k):
        m, _ = self._count_moments()
        return m * self.displacement.displacement_ft(k).astype(complex)

    def second_ft(self, k):
        m, ek2 = self._count_moments()
        return m + (ek2 - m) * np.abs(self.displacement.displacement_ft(k)) ** 2

    def sample(self, rng):
        p = np.asarray(self.count_probs, dtype=float)
        n = int(rng.choice(p.size, p=p))
        return FiniteCluster(self.displacement.sample_offsets(rng, n), np.ones(n))

    def offset_margin(self) -> float:
        return self.displacement.offset_margin()

    def sample_bulk(self, rng, n):
        p = np.asarray(self.count_probs, dtype=float)
        sizes = rng.choice(p.size, size=n, p=p).astype(np.int64)
        total = int(sizes.sum())
        return sizes, self.displacement.sample_offsets(rng, total), np.ones(total, dtype=complex)


def sample_cluster(law: ClusterLaw, rng: np.random.Generator) -> FiniteCluster:
    """One draw from the cluster law."""
    return law.sample(rng)


def sample_compound(
    centres: WeightedPointSet,
    law: ClusterLaw,
    rng: np.random.Generator,
    out_window: Optional[AveragingWindow] = None,
) -> WeightedPointSet:
    """Decorate every centre with an independent cluster draw.

    Clusters are drawn in canonical (lexicographic) centre order, so the
    result is a deterministic function of the rng stream no matter how the
    centres were produced.  Zero-weight points are dropped.  If no output
    window is given, a cube just containing all decorated points is fitted
    (cluster offsets may leave the centre window).
    """
    if np.any(centres.weights != 1.0):
        raise ValueError("centre weights must all be 1")
    if law.dim != centres.dim:
        raise ValueError("cluster dimension mismatch")
    order = np.lexsort(centres.points.T[::-1])
    sizes, offsets, wts = law.sample_bulk(rng, centres.count)
    pts = np.repeat(centres.points[order], sizes, axis=0) + offsets
    keep = wts != 0.0
    pts, wts = pts[keep], wts[keep]
    if out_window is None:
        span = float(np.max(np.abs(pts))) if pts.size else centres.window.scale
        out_window = AveragingWindow("cube", max(span * (1.0 + 1e-12) + 1e-12, centres.window.scale), centres.dim)
    else:
        inside = out_window.contains(pts) if pts.shape[0] else np.zeros(0, dtype=bool)
        pts, wts = pts[inside], wts[inside]
    return WeightedPointSet(centres.dim, pts, wts, out_window)


def compound_model(centre_model: SpectralModel, rho: float, law: ClusterLaw) -> SpectralModel:
    """Exact spectrum of the decorated process.

    Peak weights pick up |mean cluster transform|^2; the diffuse part gains
    rho times the cluster variance spectrum.  Complex cluster laws are only
    meaningful over a deterministic comb; they are rejected for random
    centre processes.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    if not law.is_real and not centre_model.deterministic_comb:
        raise ValueError("complex cluster weights require a deterministic comb centre")
    if law.dim != centre_model.dim:
        raise ValueError("cluster dimension mismatch")

    def atom_fn(cutoff: float):
        pos, wts = centre_model.atoms(cutoff)
        if pos.shape[0] == 0:
            return pos, wts
        return pos, np.abs(law.mean_ft(pos)) ** 2 * wts

    def density_fn(k: np.ndarray) -> np.ndarray:
        m1 = np.abs(law.mean_ft(k)) ** 2
        return m1 * centre_model.ac_density(k) + rho * (law.second_ft(k) - m1)

    return SpectralModel(
        centre_model.dim, atom_fn, density_fn, centre_model.singular_fn,
        label=f"{centre_model.label} + cluster", ac_exact=centre_model.ac_exact,
        deterministic_comb=False,
    )


def _convolve_reflected(a: FiniteCluster, b: FiniteCluster) -> FiniteCluster:
    """Atoms of a * reflected-conjugate(b), merged by position."""
    pos: dict = {}
    for oa, wa in zip(a.offsets, a.weights):
        for ob, wb in zip(b.offsets, b.weights):
            key = tuple(np.round(oa - ob, 12))
            pos[key] = pos.get(key, 0.0) + wa * np.conj(wb)
    offs = np.array(sorted(pos), dtype=float)
    wts = np.array([pos[tuple(o)] for o in offs])
    return FiniteCluster(offs, wts)


def compound_autocorr_atoms(
    centre_ac_atoms: Sequence, law: ClusterLaw
) -> "list[tuple[np.ndarray, complex]]":
    """Direct-space counterpart of ``compound_model`` for purely atomic inputs.

    ``centre_ac_atoms`` lists (z, mass) of the centre autocorrelation; its
    mass at z = 0 is the centre density.  The result is the exact finite
    convolution: mean-cluster pair measure convolved with the centre atoms,
    plus density times the cluster variance pair measure at the origin.
    """
    mean_cl = law.mean_atoms()
    second_cl = law.second_atoms()
    if mean_cl is None or second_cl is None:
        raise ValueError("cluster law does not have purely atomic moments")
    atoms = [(np.atleast_1d(np.asarray(z, dtype=float)), complex(m)) for z, m in centre_ac_atoms]
    rho = sum(m.real for z, m in atoms if np.allclose(z, 0.0))
    mean_pair = _convolve_reflected(mean_cl, mean_cl)
    out: dict = {}

    def add(pos, mass):
        key = tuple(np.round(pos, 12))
        out[key] = out.get(key, 0.0) + mass

    for z, eta in atoms:
        for off, w in zip(mean_pair.offsets, mean_pair.weights):
            add(z + off, eta * w)
    for off, w in zip(second_cl.offsets, second_cl.weights):
        add(off, rho * w)
    for off, w in zip(mean_pair.offsets, mean_pair.weights):
        add(off, -rho * w)
    return [(np.array(key), mass) for key, mass in sorted(out.items()) if abs(mass) > 1e-14]
