"""Deterministic identity suites behind the `selftest` CLI subcommand.

Every check is exact up to floating point (tolerance 1e-10 unless the
identity itself is a truncated sum at 1e-12); no Monte Carlo involved.
"""

from __future__ import annotations

import math

import numpy as np

from .branching import analytic_cbbm_model
from .charfun import Gamma, gaussian_psf_check, riesz_fourier
from .clusters import DeterministicCluster, compound_model
from .measures import AveragingWindow, FiniteCluster, WeightedPointSet
from .processes import LatticeProcess, PoissonProcess
from .renewal import analytic_renewal_model
from .rng import stream
from .spectral import bartlett, empirical_autocorr, periodogram

__all__ = ["run_suite", "SUITES"]

_TOL = 1e-10


def _models_for_identities():
    return [
        PoissonProcess(1.0, 1).model(5.0),
        PoissonProcess(2.0, 1).model(5.0),
        LatticeProcess(1.0, 1).model(5.0),
        analytic_renewal_model(Gamma(2.0)),
        analytic_cbbm_model(1.0, 2.0, 3),
    ]


def _model_rho(model) -> float:
    # all identity-suite models encode the density through the 0-atom weight
    _, wts = model.atoms(1e-9)
    return math.sqrt(float(wts[0]))


def suite_psf() -> "list[tuple[str, float, bool]]":
    checks = []
    for d, b in ((1, 1.0), (1, 2.0), (2, 1.0), (3, 1.0)):
        disc = gaussian_psf_check(d, b, r_max=6.0)
        checks.append((f"theta-sum identity d={d} b={b:g}", disc, disc < 1e-12))
    return checks


def suite_riesz() -> "list[tuple[str, float, bool]]":
    rng = stream(2024, 0, "riesz-selftest")
    checks = []
    for i in range(20):
        d = int(rng.integers(1, 4))
        alpha = float(rng.uniform(0.05, 0.95)) * d
        k = rng.standard_normal(d) * float(rng.uniform(0.2, 3.0))
        c = float(rng.uniform(0.3, 4.0))
        lhs = riesz_fourier(d, alpha, c * k)
        rhs = c ** (-alpha) * riesz_fourier(d, alpha, k)
        err = abs(lhs - rhs) / abs(rhs)
        checks.append((f"power-kernel homogeneity #{i} (d={d}, a={alpha:.3f})", err, err < _TOL))
    const = abs(riesz_fourier(3, 2.0, [1.0, 0, 0]) - 1.0 / math.pi)
    checks.append(("power-kernel d=3 alpha=2 constant", const, const < _TOL))
    return checks


def suite_identities() -> "list[tuple[str, float, bool]]":
    checks = []
    kgrid = np.linspace(0.11, 4.73, 37)[:, None]

    unit_cluster = DeterministicCluster(FiniteCluster(np.zeros((1, 1)), np.ones(1)))
    for model in _models_for_identities():
        if model.dim != 1:
            continue
        rho = _model_rho(model)
        wrapped = compound_model(model, rho, unit_cluster)
        p0, w0 = model.atoms(5.0)
        p1, w1 = wrapped.atoms(5.0)
        err = float(np.max(np.abs(w0 - w1))) if w0.size else 0.0
        err = max(err, float(np.max(np.abs(model.ac_density(kgrid) - wrapped.ac_density(kgrid)))))
        checks.append((f"unit-cluster identity [{model.label}]", err, err < _TOL))

    for model in _models_for_identities():
        if model.dim != 1:
            continue
        rho = _model_rho(model)
        bart = bartlett(model, rho)
        p0, w0 = model.atoms(5.0)
        p1, w1 = bart.atoms(5.0)
        at0 = np.linalg.norm(p0, axis=1) <= 1e-9
        expect0 = float(w0[at0][0]) - rho**2
        if abs(expect0) <= 1e-12:
            err = 0.0 if not np.any(np.linalg.norm(p1, axis=1) <= 1e-9) else 1.0
        else:
            j = np.linalg.norm(p1, axis=1) <= 1e-9
            err = abs(float(w1[j][0]) - expect0)
        checks.append((f"covariance-spectrum 0-atom [{model.label}]", err, err < _TOL))

    rng = stream(2024, 1, "identities-selftest")
    for trial in range(3):
        n = int(rng.integers(2, 21))
        win = AveragingWindow("cube", 3.0, 1)
        pts = rng.uniform(-2.9, 2.9, size=n)
        wts = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        ps = WeightedPointSet(1, pts, wts, win)
        ks = rng.uniform(-4, 4, size=25)
        direct = periodogram(ps, ks[:, None])
        # brute force: transform of the exact pair-difference measure
        brute = np.zeros(25)
        for i, k in enumerate(ks):
            acc = 0.0 + 0.0j
            for a in range(n):
                for b in range(n):
                    acc += wts[a] * np.conj(wts[b]) * np.exp(-2j * math.pi * k * (pts[a] - pts[b]))
            brute[i] = acc.real / win.volume()
        err = float(np.max(np.abs(direct - brute)))
        checks.append((f"periodogram = pair-measure transform #{trial} (n={n})", err, err < _TOL))

    # exact surface-term bias of the naive pair histogram on a 100-point comb
    L = 100.0
    pts = np.arange(100) - 49.5
    ps = WeightedPointSet(1, pts, np.ones(100), AveragingWindow("cube", 50.0, 1))
    hist = empirical_autocorr(ps, 0.1, max_radius=20.0)
    err = 0.0
    for z in range(-19, 20):
        idx = int(np.argmin(np.abs(hist.bin_centres - z)))
        mass = hist.bins[idx].real * 0.1
        expect = 0.0 if z == 0 else (100.0 - abs(z)) / L
        err = max(err, abs(mass - expect))
    checks.append(("comb pair-histogram surface bias exact", err, err < _TOL))
    return checks


SUITES = {
    "psf": suite_psf,
    "riesz": suite_riesz,
    "identities": suite_identities,
}


def run_suite(name: str) -> "tuple[bool, list[tuple[str, float, bool]]]":
    if name not in SUITES:
        raise KeyError(f"unknown selftest suite {name!r}; choose from {sorted(SUITES)}")
    checks = SUITES[name]()
    return all(ok for _, _, ok in checks), checks
