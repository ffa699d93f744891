"""Core data model shared by the simulators and estimators.

A realisation is a finite set of weighted points inside an averaging window;
a reference spectrum is a pure-point atom list plus an absolutely continuous
density.  All types are immutable after construction and safe to share
between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, TextIO, Union

import numpy as np

__all__ = [
    "AveragingWindow",
    "WeightedPointSet",
    "FiniteCluster",
    "SpectralModel",
    "window_volume",
    "restrict",
    "spectral_eval",
    "write_point_set",
    "read_point_set",
]


def _unit_ball_volume(dim: int) -> float:
    return math.pi ** (dim / 2.0) / math.gamma(dim / 2.0 + 1.0)


@dataclass(frozen=True)
class AveragingWindow:
    """Centred open ball or cube used for volume averaging.

    ``scale`` is the radius (ball) or half-width (cube).  Nested families of
    either kind with growing scale have vanishing surface-to-volume ratio,
    which is what legitimises the volume-averaged estimators downstream.
    """

    kind: str
    scale: float
    dim: int

    def __post_init__(self):
        if self.kind not in ("ball", "cube"):
            raise ValueError(f"unknown window kind {self.kind!r}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError("window scale must be positive and finite")
        if self.dim < 1:
            raise ValueError("window dim must be >= 1")

    def volume(self) -> float:
        if self.kind == "cube":
            return (2.0 * self.scale) ** self.dim
        return _unit_ball_volume(self.dim) * self.scale**self.dim

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Boolean mask of points strictly inside the (open) window."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.dim:
            raise ValueError(f"points have dim {pts.shape[1]}, window has dim {self.dim}")
        if self.kind == "cube":
            return np.all(np.abs(pts) < self.scale, axis=1)
        return np.einsum("ij,ij->i", pts, pts) < self.scale**2

    def boundary_layer_volume(self, thickness: float) -> float:
        """Volume of the boundary layer thickened by ``thickness`` on both sides."""
        if thickness < 0:
            raise ValueError("thickness must be >= 0")
        outer = AveragingWindow(self.kind, self.scale + thickness, self.dim).volume()
        inner_scale = self.scale - thickness
        inner = 0.0 if inner_scale <= 0 else AveragingWindow(self.kind, inner_scale, self.dim).volume()
        return outer - inner

    def dilate(self, margin: float) -> "AveragingWindow":
        return AveragingWindow(self.kind, self.scale + margin, self.dim)

    def erode(self, margin: float) -> "AveragingWindow":
        if margin >= self.scale:
            raise ValueError("erosion margin exceeds window scale")
        return AveragingWindow(self.kind, self.scale - margin, self.dim)


def window_volume(w: AveragingWindow) -> float:
    """Closed-form volume of the window."""
    return w.volume()


def _as_points(points, dim: int) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return np.zeros((0, dim))
    if pts.ndim == 1:
        pts = pts[:, None] if dim == 1 else pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != dim:
        raise ValueError(f"expected points of shape (n, {dim})")
    return pts


@dataclass(frozen=True)
class WeightedPointSet:
    """A finite realisation: points with complex weights inside a window."""

    dim: int
    points: np.ndarray
    weights: np.ndarray
    window: AveragingWindow

    def __post_init__(self):
        pts = _as_points(self.points, self.dim)
        w = np.asarray(self.weights, dtype=complex).ravel()
        if w.shape[0] != pts.shape[0]:
            raise ValueError("points and weights length mismatch")
        if self.window.dim != self.dim:
            raise ValueError("window dimension mismatch")
        if not np.all(np.isfinite(pts)) or not np.all(np.isfinite(w)):
            raise ValueError("points and weights must be finite")
        if pts.shape[0] and not np.all(self.window.contains(pts)):
            raise ValueError("all points must lie strictly inside the window")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def count(self) -> int:
        return self.points.shape[0]

    def density(self) -> float:
        """Point count per unit volume (ignores weights)."""
        return self.count / self.window.volume()


def restrict(ps: WeightedPointSet, w: AveragingWindow) -> WeightedPointSet:
    """Keep exactly the points strictly inside ``w``; weights unchanged."""
    if w.dim != ps.dim:
        raise ValueError("window dimension mismatch")
    keep = w.contains(ps.points) if ps.count else np.zeros(0, dtype=bool)
    return WeightedPointSet(ps.dim, ps.points[keep], ps.weights[keep], w)


@dataclass(frozen=True)
class FiniteCluster:
    """A finite (possibly signed or complex) measure given by offsets and weights."""

    offsets: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        off = np.asarray(self.offsets, dtype=float)
        if off.size == 0:
            off = off.reshape(0, off.shape[1] if off.ndim == 2 else 1)
        elif off.ndim == 1:
            off = off[:, None]
        w = np.asarray(self.weights, dtype=complex).ravel()
        if w.shape[0] != off.shape[0]:
            raise ValueError("offsets and weights length mismatch")
        if not np.all(np.isfinite(off)) or not np.all(np.isfinite(w)):
            raise ValueError("offsets and weights must be finite")
        off.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "offsets", off)
        object.__setattr__(self, "weights", w)

    @property
    def size(self) -> int:
        return self.offsets.shape[0]

    def total_variation(self) -> float:
        return float(np.sum(np.abs(self.weights)))

    def total_mass(self) -> complex:
        return complex(np.sum(self.weights))


AtomFn = Callable[[float], "tuple[np.ndarray, np.ndarray]"]
DensityFn = Callable[[np.ndarray], np.ndarray]
SingularFn = Callable[[float], np.ndarray]


def _empty_singular(cutoff: float) -> np.ndarray:
    return np.zeros((0, 1))


@dataclass(frozen=True)
class SpectralModel:
    """Reference spectrum: pure-point atoms plus an a.c. density.

    Atoms and singular wavevectors may form infinite (lattice-like) families,
    so both are exposed through enumerators that take a cutoff radius.  The
    pure-point/density split cannot carry a singular continuous part; none of
    the models built here has one.  ``ac_exact`` is False when the density is
    only approximate (currently the hard-core thinning model, whose smooth
    pair-correlation segment has no closed form here).
    """

    dim: int
    atom_fn: AtomFn
    density_fn: DensityFn
    singular_fn: SingularFn = _empty_singular
    label: str = ""
    ac_exact: bool = True
    deterministic_comb: bool = False

    @staticmethod
    def from_finite_atoms(
        dim: int,
        atoms: Sequence,
        weights: Sequence[float],
        density_fn: DensityFn,
        singular: Sequence = (),
        label: str = "",
        ac_exact: bool = True,
        deterministic_comb: bool = False,
    ) -> "SpectralModel":
        pos = _as_points(np.asarray(atoms, dtype=float), dim)
        wts = np.asarray(weights, dtype=float).ravel()
        sing = _as_points(np.asarray(singular, dtype=float), dim) if len(singular) else np.zeros((0, dim))

        def atom_fn(cutoff: float):
            keep = np.linalg.norm(pos, axis=1) <= cutoff
            return pos[keep], wts[keep]

        def singular_fn(cutoff: float):
            keep = np.linalg.norm(sing, axis=1) <= cutoff
            return sing[keep]

        return SpectralModel(dim, atom_fn, density_fn, singular_fn, label, ac_exact, deterministic_comb)

    def atoms(self, cutoff: float) -> "tuple[np.ndarray, np.ndarray]":
        """All atoms ``(positions, weights)`` with |k| <= cutoff."""
        pos, wts = self.atom_fn(cutoff)
        pos = _as_points(pos, self.dim)
        wts = np.asarray(wts, dtype=float).ravel()
        keep = wts != 0.0
        return pos[keep], wts[keep]

    def ac_density(self, k) -> np.ndarray:
        """Absolutely continuous density at wavevectors ``k`` (rows)."""
        kk = _as_points(k, self.dim)
        return np.asarray(self.density_fn(kk), dtype=float).ravel()

    def singular_points(self, cutoff: float) -> np.ndarray:
        return _as_points(self.singular_fn(cutoff), self.dim)


def spectral_eval(model: SpectralModel, k, atom_tol: float):
    """Evaluate a model at one wavevector.

    Returns ``(pp_weight, ac_value)`` where ``pp_weight`` is the weight of the
    unique atom within ``atom_tol`` of ``k`` (0 if none) and ``ac_value`` is
    the a.c. density, or ``None`` when ``k`` is within ``atom_tol`` of a
    recorded singular wavevector.  Raises if two distinct atoms fall inside
    the tolerance (model resolution too coarse for this query).
    """
    if atom_tol <= 0:
        raise ValueError("atom_tol must be positive")
    kv = _as_points(k, model.dim)[0]
    knorm = float(np.linalg.norm(kv))
    pos, wts = model.atoms(knorm + atom_tol + 1.0)
    pp_weight = 0.0
    if pos.shape[0]:
        dist = np.linalg.norm(pos - kv, axis=1)
        hits = np.flatnonzero(dist <= atom_tol)
        if hits.size > 1:
            raise ValueError("two distinct atoms within atom_tol of k")
        if hits.size == 1:
            pp_weight = float(wts[hits[0]])
    sing = model.singular_points(knorm + atom_tol + 1.0)
    if sing.shape[0] and np.min(np.linalg.norm(sing - kv, axis=1)) <= atom_tol:
        return pp_weight, None
    return pp_weight, float(model.ac_density(kv[None, :])[0])


# ---------------------------------------------------------------------------
# Line-oriented text serialisation
#
#   dim=<d> count=<n>
#   x1 ... xd re(w) im(w)
#
# Floats are written with 17 significant digits, so a round trip is exact.
# ---------------------------------------------------------------------------


def write_point_set(ps: WeightedPointSet, dest: Union[str, TextIO]) -> None:
    close = False
    if isinstance(dest, str):
        dest = open(dest, "w")
        close = True
    try:
        dest.write(f"dim={ps.dim} count={ps.count}\n")
        for row, w in zip(ps.points, ps.weights):
            cols = [f"{v:.17g}" for v in row] + [f"{w.real:.17g}", f"{w.imag:.17g}"]
            dest.write(" ".join(cols) + "\n")
    finally:
        if close:
            dest.close()


def read_point_set(src: Union[str, TextIO], window: Optional[AveragingWindow] = None) -> WeightedPointSet:
    """Parse the text format; fit a cube window around the points if none given."""
    close = False
    if isinstance(src, str):
        src = open(src, "r")
        close = True
    try:
        header = src.readline().split()
        try:
            dim = int(header[0].split("=")[1])
            count = int(header[1].split("=")[1])
        except (IndexError, ValueError) as exc:
            raise ValueError("malformed point-set header") from exc
        pts = np.zeros((count, dim))
        wts = np.zeros(count, dtype=complex)
        for i in range(count):
            vals = [float(tok) for tok in src.readline().split()]
            if len(vals) != dim + 2:
                raise ValueError(f"malformed point line {i + 1}")
            pts[i] = vals[:dim]
            wts[i] = complex(vals[dim], vals[dim + 1])
    finally:
        if close:
            src.close()
    if window is None:
        span = float(np.max(np.abs(pts))) if count else 1.0
        window = AveragingWindow("cube", max(span, 1e-300) * (1.0 + 1e-9) + 1e-12, dim)
    return WeightedPointSet(dim, pts, wts, window)
