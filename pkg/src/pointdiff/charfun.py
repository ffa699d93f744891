"""Inter-arrival laws on the half-line and the analytic Fourier toolbox.

Everything here is deterministic: characteristic functions with the
``exp(-2*pi*i*k*x)`` convention, the renewal kernel ``nu`` and its transform,
the gamma-family pair-density series, the Riesz kernel Fourier pair, and the
lattice theta-sum identity check.  All laws are normalised to mean 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy import special

__all__ = [
    "InterArrivalLaw",
    "Exponential",
    "Gamma",
    "FiniteAtoms",
    "TwoAtom",
    "Deterministic",
    "charfun",
    "lattice_classification",
    "h",
    "nu_hat",
    "nu_partial",
    "g_alpha",
    "riesz_fourier",
    "gaussian_psf_check",
    "shelling_numbers",
]

_TWO_PI = 2.0 * math.pi
_LATTICE_TOL = 1e-9


def _as_k(k):
    arr = np.asarray(k, dtype=float)
    return arr, arr.ndim == 0


class InterArrivalLaw:
    """Base class; concrete laws implement sampling and the closed forms."""

    def charfun(self, k):
        raise NotImplementedError

    def variance(self) -> float:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def sample_size_biased(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def sample_equilibrium_delay(self, rng: np.random.Generator, size: int = 1) -> np.ndarray:
        # The stationary delay has density 1 - F(x) (a probability density
        # because the mean is 1); it equals U * X~ with X~ size-biased.
        return rng.uniform(size=size) * self.sample_size_biased(rng, size)

    def lattice_base(self) -> Optional[float]:
        """Largest b with supp(law) inside b*Z, or None."""
        return None

    def cdf(self, x) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class Exponential(InterArrivalLaw):
    """Unit-mean exponential gaps: the interaction-free process."""

    def charfun(self, k):
        kk, scalar = _as_k(k)
        val = 1.0 / (1.0 + 2j * math.pi * kk)
        return complex(val) if scalar else val

    def variance(self) -> float:
        return 1.0

    def sample(self, rng, size):
        return rng.exponential(1.0, size)

    def sample_size_biased(self, rng, size):
        return rng.gamma(2.0, 1.0, size)

    def cdf(self, x):
        xx = np.asarray(x, dtype=float)
        return np.where(xx > 0, -np.expm1(-np.maximum(xx, 0.0)), 0.0)


@dataclass(frozen=True)
class Gamma(InterArrivalLaw):
    """Gamma gaps with shape ``alpha`` and mean 1 (rate alpha).

    alpha < 1 is effectively attractive, alpha > 1 repulsive; alpha = 1 is
    the exponential law.
    """

    alpha: float

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ValueError("alpha must be positive and finite")

    def charfun(self, k):
        # Principal branch; the base 1 + 2*pi*i*k/alpha has real part 1, so
        # the branch cut is never crossed and the result is continuous in k.
        kk, scalar = _as_k(k)
        val = np.power(1.0 + 2j * math.pi * kk / self.alpha, -self.alpha)
        return complex(val) if scalar else val

    def variance(self) -> float:
        return 1.0 / self.alpha

    def sample(self, rng, size):
        return rng.gamma(self.alpha, 1.0 / self.alpha, size)

    def sample_size_biased(self, rng, size):
        return rng.gamma(self.alpha + 1.0, 1.0 / self.alpha, size)

    def cdf(self, x):
        xx = np.asarray(x, dtype=float)
        return special.gammainc(self.alpha, self.alpha * np.maximum(xx, 0.0))


@dataclass(frozen=True)
class FiniteAtoms(InterArrivalLaw):
    """Purely atomic gap law: atoms a_i > 0 with probabilities p_i, mean 1.

    Atoms may be given as ``Fraction`` for exact lattice classification.
    """

    atoms: tuple
    probs: tuple

    def __post_init__(self):
        if len(self.atoms) != len(self.probs) or not self.atoms:
            raise ValueError("atoms and probs must be nonempty and equal length")
        a = np.array([float(x) for x in self.atoms])
        p = np.array([float(x) for x in self.probs])
        if np.any(a <= 0):
            raise ValueError("all atoms must be strictly positive")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("probs must be nonnegative and sum to 1")
        if abs(float(np.dot(a, p)) - 1.0) > 1e-12:
            raise ValueError("atom law must have mean 1 (sum p_i * a_i = 1)")

    def _arrays(self):
        return (
            np.array([float(x) for x in self.atoms]),
            np.array([float(x) for x in self.probs]),
        )

    def charfun(self, k):
        a, p = self._arrays()
        kk, scalar = _as_k(k)
        val = np.exp(-2j * math.pi * np.multiply.outer(kk, a)) @ p
        return complex(val) if scalar else val

    def variance(self) -> float:
        a, p = self._arrays()
        return float(np.dot(p, a * a)) - 1.0

    def sample(self, rng, size):
        a, p = self._arrays()
        return rng.choice(a, size=size, p=p)

    def sample_size_biased(self, rng, size):
        a, p = self._arrays()
        return rng.choice(a, size=size, p=p * a)  # sum p_i a_i = 1

    def lattice_base(self) -> Optional[float]:
        return _atom_lattice_base(self.atoms)

    def cdf(self, x):
        a, p = self._arrays()
        xx = np.asarray(x, dtype=float)
        return (np.greater_equal.outer(xx, a) * p).sum(axis=-1)


class TwoAtom(FiniteAtoms):
    """Two-atom law: the binary random-tiling gap distribution."""

    def __init__(self, a, b, p):
        pf = float(p)
        if not 0.0 < pf < 1.0:
            raise ValueError("p must lie strictly between 0 and 1")
        object.__setattr__(self, "atoms", (a, b))
        object.__setattr__(self, "probs", (p, 1 - p if isinstance(p, Fraction) else 1.0 - pf))
        FiniteAtoms.__post_init__(self)


class Deterministic(FiniteAtoms):
    """The unit-lattice gap law (a = 1 is forced by the mean-1 convention)."""

    def __init__(self, a=1.0):
        if abs(float(a) - 1.0) > 1e-12:
            raise ValueError("deterministic gap must be 1 (mean-1 convention)")
        object.__setattr__(self, "atoms", (a,))
        object.__setattr__(self, "probs", (1.0,))
        FiniteAtoms.__post_init__(self)


def _atom_lattice_base(atoms: Sequence) -> Optional[float]:
    """gcd-style lattice base of a finite positive support, None if incommensurate.

    Exact rational arithmetic when every atom is a Fraction (or int); floats
    go through a continued-fraction commensurability test with tolerance 1e-9
    and return None on ambiguity.
    """
    if all(isinstance(a, (Fraction, int)) for a in atoms):
        fracs = [Fraction(a) for a in atoms]
        g = fracs[0]
        for f in fracs[1:]:
            g = Fraction(math.gcd(g.numerator * f.denominator, f.numerator * g.denominator),
                         g.denominator * f.denominator)
        return float(g)
    vals = [float(a) for a in atoms]
    base = vals[0]
    denoms = []
    for v in vals:
        # small-denominator rationals only: a ratio that needs q > 1e4 to be
        # approximated within 1e-9 is treated as incommensurate (ambiguous)
        frac = Fraction(v / base).limit_denominator(10**4)
        if abs(v / base - float(frac)) > _LATTICE_TOL:
            return None
        denoms.append(frac)
    lcm_q = 1
    for f in denoms:
        lcm_q = lcm_q * f.denominator // math.gcd(lcm_q, f.denominator)
    g_p = 0
    for f in denoms:
        g_p = math.gcd(g_p, f.numerator * (lcm_q // f.denominator))
    b = base * g_p / lcm_q
    if any(abs(v / b - round(v / b)) > _LATTICE_TOL * max(1.0, abs(v / b)) for v in vals):
        return None
    return b


def charfun(law: InterArrivalLaw, k):
    """Characteristic function of the gap law at wavenumber(s) k."""
    return law.charfun(k)


def lattice_classification(law: InterArrivalLaw) -> Optional[float]:
    """Maximal b with supp(law) inside b*Z; None for non-lattice laws."""
    return law.lattice_base()


def _singular_mask(law: InterArrivalLaw, k: np.ndarray) -> np.ndarray:
    """Where charfun(law, k) = 1 exactly: k = 0, plus (1/b)*Z for lattice laws."""
    mask = np.abs(k) < _LATTICE_TOL
    b = law.lattice_base()
    if b is not None:
        kb = k * b
        mask |= np.abs(kb - np.round(kb)) <= _LATTICE_TOL * np.maximum(1.0, np.abs(kb))
    return mask


def h(law: InterArrivalLaw, k):
    """Deviation of the diffraction density from the flat background.

    The a.c. diffraction density of the renewal process is 1 - h.  Undefined
    (NaN) exactly where charfun = 1: at k = 0, and on (1/b)*Z for a
    lattice-supported law.
    """
    kk, scalar = _as_k(k)
    kk = np.atleast_1d(kk)
    rho = np.atleast_1d(law.charfun(kk))
    denom = np.abs(1.0 - rho) ** 2
    bad = _singular_mask(law, kk) | (denom == 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 2.0 * (np.abs(rho) ** 2 - rho.real) / denom
    out[bad] = np.nan
    return float(out[0]) if scalar else out


def nu_hat(law: InterArrivalLaw, k):
    """Transform of the renewal kernel: charfun / (1 - charfun); NaN where singular."""
    kk, scalar = _as_k(k)
    kk = np.atleast_1d(kk)
    rho = np.atleast_1d(law.charfun(kk))
    bad = _singular_mask(law, kk) | (rho == 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = rho / (1.0 - rho)
    out[bad] = np.nan
    return complex(out[0]) if scalar else out


def _atom_convolution_masses(law: FiniteAtoms, n: int, x_max: float) -> "dict[float, float]":
    """Atoms of sum_{m<=n} law^{*m} below x_max, by exact iterated convolution."""
    a, p = law._arrays()
    current = {0.0: 1.0}  # law^{*0}
    total: dict[float, float] = {}
    for _ in range(n):
        nxt: dict[float, float] = {}
        for pos, mass in current.items():
            for ai, pi in zip(a, p):
                q = pos + ai
                if q > x_max + 1e-9:
                    continue
                nxt[q] = nxt.get(q, 0.0) + mass * pi
        # merge float-identical positions defensively
        current = {}
        for q in sorted(nxt):
            if current and abs(q - next(reversed(current))) < 1e-12:
                last = next(reversed(current))
                current[last] += nxt[q]
            else:
                current[q] = nxt[q]
        for q, mass in current.items():
            total[q] = total.get(q, 0.0) + mass
        if not current:
            break
    return total


def renewal_kernel_atom(law: FiniteAtoms, z: float, tol: float = 1e-9) -> float:
    """Mass of the renewal kernel nu = sum_m law^{*m} at the single point z > 0."""
    if not isinstance(law, FiniteAtoms):
        raise TypeError("renewal kernel atoms exist only for atomic laws")
    if z <= 0:
        raise ValueError("z must be positive")
    a, _ = law._arrays()
    n = int(z / a.min()) + 1
    masses = _atom_convolution_masses(law, n, z + 1.0)
    return sum(m for q, m in masses.items() if abs(q - z) <= tol)


def nu_partial(law: InterArrivalLaw, n: int, grid: np.ndarray) -> np.ndarray:
    """Cumulative mass on [0, x] of nu_n = sum_{m<=n} law^{*m} at the grid points.

    Brute-force oracle: atom laws use exact convolution of atom lists;
    absolutely continuous laws use midpoint mass binning (bin masses from the
    CDF, so integrable endpoint singularities are handled exactly) followed
    by discrete self-convolution.  Raises if the grid is coarser than
    x_max / 1e3.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size < 2 or np.any(np.diff(g) <= 0):
        raise ValueError("grid must be a 1-d increasing array")
    x_max = float(g[-1])
    if float(np.max(np.diff(g))) > x_max / 1e3:
        raise ValueError("grid too coarse: step must be <= x_max / 1e3")

    if isinstance(law, FiniteAtoms):
        masses = _atom_convolution_masses(law, n, x_max)
        pos = np.array(sorted(masses))
        cum = np.cumsum([masses[q] for q in sorted(masses)])
        idx = np.searchsorted(pos, g + 1e-12, side="right")
        return np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)

    m = max(2 * g.size, 2001)
    step = x_max / m
    xs = step * np.arange(m + 1)
    cdf = law.cdf(xs)
    mass = np.diff(cdf)  # exact bin masses (handles endpoint singularities)
    # Midpoint Stieltjes iteration for the cumulative convolutions:
    #   F_(m+1)(x_i) = sum_j F_m(x_i - c_j) mass_j,  c_j the bin centres,
    # with F_m at the half-shifted grid obtained by linear interpolation.
    # Each step is O(step^2) accurate and free of index drift.
    current = cdf.copy()
    total = cdf.copy()
    half = xs - 0.5 * step
    for _ in range(1, n):
        f_half = np.interp(half, xs, current, left=0.0)
        current = np.convolve(f_half, mass)[: m + 1]
        total += current
    return np.interp(g, xs, total)


def g_alpha(alpha: float, x: float, truncation_tol: float = 1e-12) -> float:
    """Pair-density series of the gamma-family renewal kernel at x > 0.

    Summed in log space until ten consecutive terms fall below
    truncation_tol times the running sum (hard cap 1e5 terms); tends to 1 as
    x grows, for any fixed alpha.
    """
    if x <= 0:
        raise ValueError("x must be positive")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    log_ax = math.log(alpha * x)
    s = 0.0
    small = 0
    for n in range(1, 100_001):
        term = math.exp((n * alpha - 1.0) * log_ax - special.gammaln(n * alpha))
        s += term
        if term < truncation_tol * max(s, 1e-300):
            small += 1
            if small >= 10:
                break
        else:
            small = 0
    return alpha * math.exp(-alpha * x) * s


def riesz_fourier(d: int, alpha: float, k) -> float:
    """Fourier transform of the kernel |x|^(alpha - d) at k != 0.

    Valid for 0 < alpha < d; the value is homogeneous of degree -alpha in k.
    The d = 3, alpha = 2 case is the Brownian Green-function pair used by the
    branching model.
    """
    if not 0.0 < alpha < d:
        raise ValueError("alpha must lie strictly between 0 and d")
    kn = float(np.linalg.norm(np.atleast_1d(np.asarray(k, dtype=float))))
    if kn == 0.0:
        raise ValueError("k must be nonzero")
    const = (math.gamma(alpha / 2.0) / math.pi ** (alpha / 2.0)) / (
        math.gamma((d - alpha) / 2.0) / math.pi ** ((d - alpha) / 2.0)
    )
    return const * kn ** (-alpha)


def _lattice_gaussian_sum(spacing: float, dim: int, r_max: float) -> float:
    """Sum of exp(-pi |x|^2) over the cubic lattice spacing*Z^d, |x| <= r_max."""
    n_max = int(math.floor(r_max / spacing))
    axis = spacing * np.arange(-n_max, n_max + 1)
    if dim == 1:
        r2 = axis**2
    else:
        grids = np.meshgrid(*([axis] * dim), indexing="ij")
        r2 = np.zeros_like(grids[0])
        for gaxis in grids:
            r2 = r2 + gaxis**2
    r2 = r2.ravel()
    r2 = r2[r2 <= r_max**2 + 1e-12]
    return float(np.sum(np.exp(-math.pi * r2)))


def shelling_numbers(dim: int, spacing: float, r_max: float) -> "list[tuple[float, int]]":
    """Counts of lattice points of spacing*Z^dim on centred spheres, by radius."""
    n_max = int(math.floor(r_max / spacing))
    axis = np.arange(-n_max, n_max + 1)
    grids = np.meshgrid(*([axis] * dim), indexing="ij")
    sq = np.zeros_like(grids[0])
    for gaxis in grids:
        sq = sq + gaxis**2
    sq = sq.ravel()
    counts: dict[int, int] = {}
    for m in sq:
        counts[int(m)] = counts.get(int(m), 0) + 1
    out = []
    for m in sorted(counts):
        r = spacing * math.sqrt(m)
        if r <= r_max + 1e-12:
            out.append((r, counts[m]))
    return out


def gaussian_psf_check(d: int, b: float, r_max: float = 6.0) -> float:
    """Discrepancy of the lattice summation identity for the self-dual Gaussian.

    Compares the exp(-pi |x|^2) sum over b*Z^d with 1/b^d times the sum over
    the dual lattice (1/b)*Z^d, both truncated at radius r_max; for d = 2 the
    direct sum is regrouped radially by shelling numbers, exercising the
    radial form of the identity.  Returns |LHS - RHS|.
    """
    if b <= 0:
        raise ValueError("b must be positive")
    if math.exp(-math.pi * r_max**2) * (2 * r_max / min(b, 1.0 / b) + 1) ** d > 1e-12:
        raise ValueError("r_max too small for 1e-12 Gaussian tail truncation")
    if d == 2:
        lhs = sum(cnt * math.exp(-math.pi * r * r) for r, cnt in shelling_numbers(2, b, r_max))
    else:
        lhs = _lattice_gaussian_sum(b, d, r_max)
    rhs = b ** (-d) * _lattice_gaussian_sum(1.0 / b, d, r_max)
    return abs(lhs - rhs)
