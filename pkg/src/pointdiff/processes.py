"""Centre processes in d dimensions and their reference spectra.

Homogeneous Poisson, deterministic cubic lattices, hard-core thinning of a
Poisson field (Matern II), and a golden-ratio cut-and-project particle gas.
Sampling is pure per realisation given an rng stream; realisations can run
in parallel on independent streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy import integrate, special
from scipy.spatial import cKDTree

from .measures import AveragingWindow, SpectralModel, WeightedPointSet

__all__ = [
    "CentreProcess",
    "PoissonProcess",
    "LatticeProcess",
    "MaternProcess",
    "FibonacciGasProcess",
    "sample_centre",
    "analytic_centre_model",
    "GOLDEN_RATIO",
]

GOLDEN_RATIO = (1.0 + math.sqrt(5.0)) / 2.0
_GOLDEN_CONJ = (1.0 - math.sqrt(5.0)) / 2.0
_SQRT5 = math.sqrt(5.0)


def _uniform_in_window(w: AveragingWindow, n: int, rng: np.random.Generator) -> np.ndarray:
    if w.kind == "cube":
        return rng.uniform(-w.scale, w.scale, size=(n, w.dim))
    g = rng.standard_normal((n, w.dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = w.scale * rng.uniform(size=(n, 1)) ** (1.0 / w.dim)
    return g * r


def _ball_indicator_ft(dim: int, radius: float, knorm: np.ndarray) -> np.ndarray:
    """Fourier transform of the indicator of a centred ball of given radius."""
    out = np.empty_like(knorm, dtype=float)
    zero = knorm == 0.0
    out[zero] = AveragingWindow("ball", radius, dim).volume()
    kn = knorm[~zero]
    out[~zero] = (radius / kn) ** (dim / 2.0) * special.jv(dim / 2.0, 2.0 * math.pi * kn * radius)
    return out


class CentreProcess:
    dim: int

    def intensity(self) -> float:
        raise NotImplementedError

    def sample(self, w: AveragingWindow, rng: np.random.Generator) -> WeightedPointSet:
        raise NotImplementedError

    def model(self, k_cutoff: float) -> SpectralModel:
        raise NotImplementedError


@dataclass(frozen=True)
class PoissonProcess(CentreProcess):
    """Homogeneous Poisson field with point density rho."""

    rho: float
    dim: int

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError("rho must be positive")

    def intensity(self) -> float:
        return self.rho

    def sample(self, w, rng):
        n = rng.poisson(self.rho * w.volume())
        pts = _uniform_in_window(w, n, rng)
        keep = w.contains(pts)
        return WeightedPointSet(self.dim, pts[keep], np.ones(int(keep.sum())), w)

    def model(self, k_cutoff: float = np.inf) -> SpectralModel:
        rho = self.rho
        return SpectralModel.from_finite_atoms(
            self.dim, [np.zeros(self.dim)], [rho**2],
            lambda k: np.full(k.shape[0], rho), label=f"poisson(rho={rho:g}, d={self.dim})",
        )


@dataclass(frozen=True)
class LatticeProcess(CentreProcess):
    """Cubic lattice comb b*Z^d, point density b**-d."""

    b: float
    dim: int

    def __post_init__(self):
        if self.b <= 0:
            raise ValueError("b must be positive")

    def intensity(self) -> float:
        return self.b ** (-self.dim)

    def sample(self, w, rng):
        n_max = int(math.ceil(w.scale / self.b))
        axis = self.b * np.arange(-n_max, n_max + 1)
        grids = np.meshgrid(*([axis] * self.dim), indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        keep = w.contains(pts)
        return WeightedPointSet(self.dim, pts[keep], np.ones(int(keep.sum())), w)

    def model(self, k_cutoff: float) -> SpectralModel:
        spacing = 1.0 / self.b
        weight = self.intensity() ** 2
        dim = self.dim

        def atom_fn(cutoff: float):
            n_max = int(math.floor(cutoff / spacing))
            axis = spacing * np.arange(-n_max, n_max + 1)
            grids = np.meshgrid(*([axis] * dim), indexing="ij")
            pos = np.stack([g.ravel() for g in grids], axis=1)
            keep = np.linalg.norm(pos, axis=1) <= cutoff
            pos = pos[keep]
            return pos, np.full(pos.shape[0], weight)

        return SpectralModel(
            dim, atom_fn, lambda k: np.zeros(k.shape[0]),
            label=f"lattice(b={self.b:g}, d={dim})", deterministic_comb=True,
        )


@dataclass(frozen=True)
class MaternProcess(CentreProcess):
    """Hard-core thinning (smallest mark wins within distance R) of a Poisson field."""

    rho: float
    R: float
    dim: int

    def __post_init__(self):
        if self.rho <= 0 or self.R <= 0:
            raise ValueError("rho and R must be positive")
        if self.dim < 2:
            raise ValueError("hard-core thinning model is used in dimension >= 2")

    def intensity(self) -> float:
        vol_ball = AveragingWindow("ball", self.R, self.dim).volume()
        return -math.expm1(-self.rho * vol_ball) / vol_ball

    def sample(self, w, rng):
        # Simulate the parent field on the R-dilated window so that thinning
        # near the boundary sees its full neighbourhood, then restrict.
        parent_w = w.dilate(self.R)
        n = rng.poisson(self.rho * parent_w.volume())
        pts = _uniform_in_window(parent_w, n, rng)
        marks = rng.uniform(size=n)
        alive = np.ones(n, dtype=bool)
        if n > 1:
            pairs = cKDTree(pts).query_pairs(self.R, output_type="ndarray")
            if pairs.size:
                i, j = pairs[:, 0], pairs[:, 1]
                loser = np.where(marks[i] < marks[j], j, i)
                alive[loser] = False
        keep = alive & w.contains(pts)
        return WeightedPointSet(self.dim, pts[keep], np.ones(int(keep.sum())), w)

    def model(self, k_cutoff: float = np.inf) -> SpectralModel:
        # Exact atom and level; the diffuse part uses only the hard-core
        # segment of the pair correlation (zero below R), so it is marked
        # non-exact: the smooth transition on [R, 2R] has no closed form here.
        rho_eff = self.intensity()
        dim, R = self.dim, self.R

        def density_fn(k: np.ndarray) -> np.ndarray:
            kn = np.linalg.norm(k, axis=1)
            return rho_eff - rho_eff**2 * _ball_indicator_ft(dim, R, kn)

        return SpectralModel.from_finite_atoms(
            dim, [np.zeros(dim)], [rho_eff**2], density_fn,
            label=f"matern(rho={self.rho:g}, R={R:g}, d={dim}; ac approximate)",
            ac_exact=False,
        )


@dataclass(frozen=True)
class FibonacciGasProcess(CentreProcess):
    """Occupation gas on the golden-ratio cut-and-project point set.

    The host set is {m + n*tau : m + n*tau' in W} with W the internal-space
    interval [center - halfwidth, center + halfwidth]; each host point is
    kept independently with probability f(internal coordinate).  Profiles
    "const" and "tent" have closed-form window transforms; any other callable
    profile falls back to high-order quadrature.
    """

    window_center: float
    window_halfwidth: float
    profile: Union[str, Callable[[np.ndarray], np.ndarray]] = "const"
    profile_value: float = 1.0
    internal_cutoff: float = 30.0
    dim: int = 1

    def __post_init__(self):
        if self.window_halfwidth <= 0:
            raise ValueError("window halfwidth must be positive")
        if self.dim != 1:
            raise ValueError("the cut-and-project gas is one-dimensional")
        if isinstance(self.profile, str) and self.profile not in ("const", "tent"):
            raise ValueError("profile must be 'const', 'tent', or a callable")
        if isinstance(self.profile, str) and self.profile == "const":
            if not 0.0 <= self.profile_value <= 1.0:
                raise ValueError("profile values must lie in [0, 1]")

    # -- internal-space profile -------------------------------------------
    def profile_eval(self, y) -> np.ndarray:
        yy = np.asarray(y, dtype=float)
        c, hw = self.window_center, self.window_halfwidth
        if callable(self.profile):
            return np.clip(np.asarray(self.profile(yy), dtype=float), 0.0, 1.0)
        if self.profile == "const":
            return np.full_like(yy, self.profile_value, dtype=float)
        return np.clip(1.0 - np.abs(yy - c) / hw, 0.0, 1.0)

    def profile_window_ft(self, kappa) -> np.ndarray:
        """integral over W of f(y) exp(-2*pi*i*kappa*y) dy."""
        kk = np.atleast_1d(np.asarray(kappa, dtype=float))
        c, hw = self.window_center, self.window_halfwidth
        phase = np.exp(-2j * math.pi * kk * c)
        x = math.pi * kk * hw
        if callable(self.profile):
            nodes, weights = np.polynomial.legendre.leggauss(800)
            y = c + hw * nodes
            vals = self.profile_eval(y) * hw
            return np.exp(-2j * math.pi * np.outer(kk, y)) @ (vals * weights)
        if self.profile == "const":
            out = np.where(x == 0.0, 2.0 * hw, 2.0 * hw * np.divide(np.sin(2 * x), 2 * x, where=x != 0, out=np.ones_like(x)))
            return self.profile_value * phase * out
        sinc = np.divide(np.sin(x), x, where=x != 0, out=np.ones_like(x))
        return phase * hw * sinc**2

    def mean_profile(self) -> float:
        return float(self.profile_window_ft(0.0)[0].real) / (2.0 * self.window_halfwidth)

    def mean_variance(self) -> float:
        """Window average of f(1-f): the diffuse level per host point."""
        c, hw = self.window_center, self.window_halfwidth
        if isinstance(self.profile, str) and self.profile == "const":
            return self.profile_value * (1.0 - self.profile_value)
        if isinstance(self.profile, str) and self.profile == "tent":
            return 1.0 / 6.0
        val, _ = integrate.quad(lambda y: float(self.profile_eval(y) * (1.0 - self.profile_eval(y))), c - hw, c + hw)
        return val / (2.0 * hw)

    def host_density(self) -> float:
        return 2.0 * self.window_halfwidth / _SQRT5

    def intensity(self) -> float:
        return self.host_density() * self.mean_profile()

    # -- point-set machinery ----------------------------------------------
    def enumerate_host(self, w: AveragingWindow) -> "tuple[np.ndarray, np.ndarray]":
        """Host points in w with their internal coordinates."""
        if w.dim != 1:
            raise ValueError("window must be one-dimensional")
        s = w.scale
        c, hw = self.window_center, self.window_halfwidth
        lo_n = int(math.floor((-s - (c + hw)) / _SQRT5)) - 1
        hi_n = int(math.ceil((s - (c - hw)) / _SQRT5)) + 1
        xs, ys = [], []
        for n in range(lo_n, hi_n + 1):
            m_lo = math.ceil(c - hw - n * _GOLDEN_CONJ)
            m_hi = math.floor(c + hw - n * _GOLDEN_CONJ)
            for m in range(m_lo, m_hi + 1):
                y = m + n * _GOLDEN_CONJ
                if not (c - hw <= y <= c + hw):
                    continue
                x = m + n * GOLDEN_RATIO
                if -s < x < s:
                    xs.append(x)
                    ys.append(y)
        order = np.argsort(xs)
        return np.asarray(xs)[order], np.asarray(ys)[order]

    def sample(self, w, rng):
        xs, ys = self.enumerate_host(w)
        keep = rng.uniform(size=xs.size) < self.profile_eval(ys)
        return WeightedPointSet(1, xs[keep], np.ones(int(keep.sum())), w)

    def module_points(self, k_cutoff: float) -> "tuple[np.ndarray, np.ndarray]":
        """Candidate peak positions (k, internal k*) with |k| <= cutoff."""
        icut = self.internal_cutoff
        ks, kstars = [], []
        p_max = int(math.ceil(k_cutoff + icut)) + 1
        for p in range(-p_max, p_max + 1):
            q_lo = int(math.ceil(p * GOLDEN_RATIO - _SQRT5 * icut))
            q_hi = int(math.floor(p * GOLDEN_RATIO + _SQRT5 * icut))
            for q in range(q_lo, q_hi + 1):
                k = (q - p * _GOLDEN_CONJ) / _SQRT5
                if abs(k) > k_cutoff:
                    continue
                ks.append(k)
                kstars.append((p * GOLDEN_RATIO - q) / _SQRT5)
        order = np.argsort(ks)
        return np.asarray(ks)[order], np.asarray(kstars)[order]

    def model(self, k_cutoff: float) -> SpectralModel:
        # Peak weights are |window transform of f at -k*|^2 up to one overall
        # constant, fixed by requiring the k = 0 weight to equal the squared
        # mean mass density.
        dens = self.host_density()
        f0 = abs(self.profile_window_ft(0.0)[0])
        scale = (dens * self.mean_profile()) ** 2 / f0**2 if f0 > 0 else 0.0
        level = dens * self.mean_variance()
        ks, kstars = self.module_points(k_cutoff)
        weights = scale * np.abs(self.profile_window_ft(-kstars)) ** 2
        is_det = isinstance(self.profile, str) and self.profile == "const" and self.profile_value == 1.0

        def atom_fn(cutoff: float):
            keep = np.abs(ks) <= cutoff
            return ks[keep][:, None], weights[keep]

        return SpectralModel(
            1, atom_fn, lambda k: np.full(k.shape[0], level),
            label="fibonacci-gas", deterministic_comb=is_det,
        )


def sample_centre(p: CentreProcess, w: AveragingWindow, rng: np.random.Generator) -> WeightedPointSet:
    if w.dim != p.dim:
        raise ValueError("window dimension mismatch")
    return p.sample(w, rng)


def analytic_centre_model(p: CentreProcess, k_cutoff: float) -> SpectralModel:
    return p.model(k_cutoff)
