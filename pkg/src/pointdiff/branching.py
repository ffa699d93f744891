"""Critical binary branching Brownian motion started from a Poisson field.

Particles diffuse with per-coordinate variance 2t, live an Exp(V) lifetime,
and then either vanish or split in two on a fair coin, so the expected count
is conserved.  The simulation runs on a torus whose half-width exceeds the
observation window by a diffusive safety margin; output is the configuration
at time T restricted to the inner window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .measures import AveragingWindow, SpectralModel, WeightedPointSet

__all__ = ["BranchingConfig", "simulate_cbbm", "f_t", "f_infinity", "analytic_cbbm_model"]

_EXPLOSION_FACTOR = 100.0


@dataclass(frozen=True)
class BranchingConfig:
    rho: float
    V: float
    dim: int
    T: float
    box_halfwidth: float
    inner_halfwidth: float

    def __post_init__(self):
        if self.rho <= 0 or self.V < 0 or self.T < 0:
            raise ValueError("rho must be positive; V and T nonnegative")
        if self.dim < 3:
            raise ValueError("equilibria require dimension >= 3")
        if self.inner_halfwidth <= 0 or self.box_halfwidth <= 0:
            raise ValueError("window half-widths must be positive")
        margin = 3.0 * math.sqrt(4.0 * self.T)
        if self.inner_halfwidth + margin > self.box_halfwidth:
            raise ValueError(
                f"diffusive safety margin violated: inner + {margin:.3g} > box"
            )

    def box_window(self) -> AveragingWindow:
        return AveragingWindow("cube", self.box_halfwidth, self.dim)

    def inner_window(self) -> AveragingWindow:
        return AveragingWindow("cube", self.inner_halfwidth, self.dim)


def _wrap(x: np.ndarray, half: float) -> np.ndarray:
    return np.mod(x + half, 2.0 * half) - half


def simulate_cbbm(cfg: BranchingConfig, rng: np.random.Generator, return_box_count: bool = False):
    """One configuration at time T, restricted to the inner window.

    Implementation is vectorised by rounds: at each round every live
    particle draws its next lifetime; those outliving the horizon diffuse to
    time T and are emitted, the rest diffuse to their event time and either
    drop out or split.  A guard aborts if the population exceeds 100x its
    initial mean (astronomically unlikely for a critical system at this
    scale).
    """
    s = cfg.box_halfwidth
    n0 = rng.poisson(cfg.rho * (2.0 * s) ** cfg.dim)
    pos = rng.uniform(-s, s, size=(n0, cfg.dim))
    t = np.zeros(n0)
    done = []
    cap = _EXPLOSION_FACTOR * max(cfg.rho * (2.0 * s) ** cfg.dim, 1.0)
    while pos.shape[0]:
        if pos.shape[0] > cap:
            raise RuntimeError("population explosion guard tripped")
        if cfg.V == 0.0:
            life = np.full(pos.shape[0], np.inf)
        else:
            life = rng.exponential(1.0 / cfg.V, size=pos.shape[0])
        t_event = t + life
        finished = t_event >= cfg.T
        dt_out = cfg.T - t[finished]
        if np.any(finished):
            out = pos[finished] + rng.normal(size=(int(finished.sum()), cfg.dim)) * np.sqrt(2.0 * dt_out)[:, None]
            done.append(out)
        active = ~finished
        pos = pos[active]
        t = t_event[active]
        if pos.shape[0]:
            pos = pos + rng.normal(size=pos.shape) * np.sqrt(2.0 * life[active])[:, None]
            split = rng.uniform(size=pos.shape[0]) < 0.5
            pos = np.concatenate([pos[split], pos[split]], axis=0)
            t = np.concatenate([t[split], t[split]])
    final = np.concatenate(done, axis=0) if done else np.zeros((0, cfg.dim))
    final = _wrap(final, s)
    inner = cfg.inner_window()
    keep = inner.contains(final) if final.shape[0] else np.zeros(0, dtype=bool)
    ps = WeightedPointSet(cfg.dim, final[keep], np.ones(int(keep.sum())), inner)
    if return_box_count:
        return ps, final.shape[0]
    return ps


def f_t(V: float, dim: int, t: float, r: float) -> float:
    """Palm pair-density excess after evolving for time t, at distance r > 0.

    Adaptive quadrature (relative tolerance 1e-8) of the heat-kernel time
    integral; increases monotonically in t towards ``f_infinity``.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0 or V == 0:
        return 0.0

    def integrand(u: float) -> float:
        return (4.0 * math.pi * u) ** (-dim / 2.0) * math.exp(-r * r / (4.0 * u))

    # split at the scale of the integrand's rise (u ~ r^2) so the adaptive
    # rule cannot miss the concentrated part when t is very large
    breaks = sorted({min(2.0 * t, b) for b in (0.25 * r * r, 4.0 * r * r + 1.0, 2.0 * t)})
    val = 0.0
    lo = 0.0
    for hi in breaks:
        if hi > lo:
            part, _ = integrate.quad(integrand, lo, hi, epsrel=1e-8, epsabs=0.0, limit=200)
            val += part
            lo = hi
    return 0.5 * V * val


def f_infinity(V: float, dim: int, r: float) -> float:
    """Equilibrium pair-density excess: V/2 times the Brownian Green function."""
    if dim < 3:
        raise ValueError("the equilibrium kernel requires dimension >= 3")
    if r <= 0:
        raise ValueError("r must be positive")
    return 0.5 * V * math.gamma((dim - 2) / 2.0) / (4.0 * math.pi ** (dim / 2.0)) * r ** (2 - dim)


def analytic_cbbm_model(rho: float, V: float, dim: int, alpha: float = 2.0) -> SpectralModel:
    """Equilibrium spectrum for branching alpha-stable motion, alpha in (0, 2].

    alpha = 2 is the Brownian case; equilibria exist only for dim > alpha.
    The diffuse part is rho * (1 + (V/2) / ((2 pi)^alpha |k|^alpha)), which
    diverges at k = 0 (recorded as a singular wavevector).
    """
    if not 0.0 < alpha <= 2.0:
        raise ValueError("alpha must lie in (0, 2]")
    if dim <= alpha:
        raise ValueError("equilibria require dim > alpha")
    if rho <= 0 or V < 0:
        raise ValueError("rho must be positive and V nonnegative")

    def density_fn(k: np.ndarray) -> np.ndarray:
        kn = np.linalg.norm(k, axis=1)
        with np.errstate(divide="ignore"):
            excess = 0.5 * V / ((2.0 * math.pi) ** alpha * kn**alpha)
        return rho * (1.0 + np.where(kn == 0.0, np.inf if V else 0.0, excess))

    singular = [np.zeros(dim)] if V > 0 else []
    return SpectralModel.from_finite_atoms(
        dim, [np.zeros(dim)], [rho**2], density_fn, singular=singular,
        label=f"branching(rho={rho:g}, V={V:g}, d={dim}, alpha={alpha:g})",
    )
