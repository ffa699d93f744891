"""Stationary renewal processes on the line and their exact spectra.

The sampler starts from the equilibrium delay (density 1 - F, proper because
the gap law has mean 1), so realisations are exactly stationary without any
burn-in.  The reference spectrum has a unit atom at 0 (a full dual-lattice
comb for lattice-supported gap laws) plus the density 1 - h.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .charfun import FiniteAtoms, Gamma, Exponential, InterArrivalLaw, h, renewal_kernel_atom
from .measures import AveragingWindow, SpectralModel, WeightedPointSet

__all__ = [
    "simulate_renewal",
    "analytic_renewal_model",
    "analytic_renewal_ac_density",
    "AcDensityValue",
]


def simulate_renewal(law: InterArrivalLaw, length: float, rng: np.random.Generator) -> WeightedPointSet:
    """One stationary realisation on a centred interval of the given length.

    All weights are 1.  Gap laws with an atom at 0 are outside the renewal
    setting (handle coincident points through the cluster machinery instead);
    the law types here all have strictly positive support, which is checked
    at construction.
    """
    if length <= 0:
        raise ValueError("length must be positive")
    positions = [float(law.sample_equilibrium_delay(rng, 1)[0])]
    block = max(64, int(length + 6.0 * math.sqrt(length) + 50))
    while positions[-1] <= length:
        gaps = law.sample(rng, block)
        new = positions[-1] + np.cumsum(gaps)
        positions.extend(new.tolist())
    pts = np.asarray(positions)
    pts = pts[pts < length] - length / 2.0  # centre the observation interval
    window = AveragingWindow("cube", length / 2.0, 1)
    inside = window.contains(pts[:, None])
    pts = pts[inside]
    return WeightedPointSet(1, pts, np.ones(pts.size), window)


def analytic_renewal_model(law: InterArrivalLaw) -> SpectralModel:
    """Exact diffraction of the stationary renewal process with this gap law."""

    def density_fn(k: np.ndarray) -> np.ndarray:
        vals = 1.0 - h(law, k[:, 0])
        return np.where(np.isnan(vals), 0.0, vals)

    b = law.lattice_base()
    if b is None:
        return SpectralModel.from_finite_atoms(
            1, [[0.0]], [1.0], density_fn, singular=[[0.0]],
            label=f"renewal({type(law).__name__})",
        )

    spacing = 1.0 / b

    def atom_fn(cutoff: float):
        n = int(math.floor(cutoff / spacing))
        pos = spacing * np.arange(-n, n + 1)
        return pos[:, None], np.ones(pos.size)

    def singular_fn(cutoff: float):
        pos, _ = atom_fn(cutoff)
        return pos

    return SpectralModel(
        1, atom_fn, density_fn, singular_fn,
        label=f"renewal({type(law).__name__}, lattice base {b:g})",
    )


class AcDensityValue(NamedTuple):
    value: float
    atomic: bool


def analytic_renewal_ac_density(law: InterArrivalLaw, x: float) -> AcDensityValue:
    """Two-point density of the renewal autocorrelation at x != 0.

    For atomic gap laws the autocorrelation off 0 is purely atomic, so the
    returned value is the kernel mass at |x| (flagged ``atomic=True``) rather
    than a density.
    """
    if x == 0:
        raise ValueError("x must be nonzero (the atom at 0 is the density)")
    ax = abs(x)
    if isinstance(law, FiniteAtoms):
        return AcDensityValue(renewal_kernel_atom(law, ax), True)
    if isinstance(law, Exponential):
        return AcDensityValue(1.0, False)
    if isinstance(law, Gamma):
        from .charfun import g_alpha

        return AcDensityValue(g_alpha(law.alpha, ax), False)
    raise TypeError(f"no closed-form autocorrelation for {type(law).__name__}")
