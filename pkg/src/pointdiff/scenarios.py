"""Built-in scenario configs.

Each entry is a complete config document for the scenario runner; `pointdiff
run <name>` resolves names here, and the acceptance suite runs the same
configs.  Tolerances are fixed here, not tuned at run time.
"""

from __future__ import annotations

import copy
import math

_TAU = (1.0 + math.sqrt(5.0)) / 2.0

SCENARIOS: "dict[str, dict]" = {}


def _register(cfg: dict) -> None:
    SCENARIOS[cfg["name"]] = cfg


def get(name: str) -> dict:
    if name not in SCENARIOS:
        raise KeyError(f"unknown scenario {name!r}")
    return copy.deepcopy(SCENARIOS[name])


def names() -> "list[str]":
    return sorted(SCENARIOS)


_register({
    "name": "gamma_sweep",
    "description": "Gamma-gap renewal family: diffuse spectrum vs the exact curve for four shapes",
    "window": {"kind": "cube", "halfwidth": 5000.0, "dim": 1},
    "process": {"kind": "renewal", "law": {"kind": "gamma", "alpha": 1.0}},
    "estimator": {"mode": "spectral", "k_min": 0.1, "k_max": 4.0, "k_step": 0.05},
    "tolerances": {"atom_rel": 0.05, "density_mean_rel": 0.05},
    "realisations": 200,
    "sweep": [
        {"label": "alpha_0.7", "process": {"kind": "renewal", "law": {"kind": "gamma", "alpha": 0.7}}},
        {"label": "alpha_1.0", "process": {"kind": "renewal", "law": {"kind": "gamma", "alpha": 1.0}}},
        {"label": "alpha_2.0", "process": {"kind": "renewal", "law": {"kind": "gamma", "alpha": 2.0}}},
        {"label": "alpha_8.0", "process": {"kind": "renewal", "law": {"kind": "gamma", "alpha": 8.0}}},
    ],
})

_register({
    "name": "poisson_d1",
    "description": "Homogeneous Poisson, d=1, rho=1: peak rho^2 at 0, flat level rho",
    "window": {"kind": "cube", "halfwidth": 5000.0, "dim": 1},
    "process": {"kind": "poisson", "rho": 1.0, "dim": 1},
    "estimator": {"mode": "spectral", "k_min": 0.2, "k_max": 3.0, "k_step": 0.05},
    "tolerances": {"atom_rel": 0.05, "density_level_rel": 0.03},
    "realisations": 200,
})

_register({
    "name": "poisson_d1_rho2",
    "description": "Homogeneous Poisson, d=1, rho=2",
    "window": {"kind": "cube", "halfwidth": 5000.0, "dim": 1},
    "process": {"kind": "poisson", "rho": 2.0, "dim": 1},
    "estimator": {"mode": "spectral", "k_min": 0.2, "k_max": 3.0, "k_step": 0.05},
    "tolerances": {"atom_rel": 0.05, "density_level_rel": 0.03},
    "realisations": 200,
})

_register({
    "name": "poisson_d2",
    "description": "Homogeneous Poisson, d=2, rho=1, cube half-width 50",
    "window": {"kind": "cube", "halfwidth": 50.0, "dim": 2},
    "process": {"kind": "poisson", "rho": 1.0, "dim": 2},
    "estimator": {"mode": "spectral", "k_min": 0.2, "k_max": 3.0, "k_step": 0.1,
                  "freq_avg_bandwidth": 0.06, "freq_avg_count": 7},
    "tolerances": {"atom_rel": 0.05, "density_level_rel": 0.05},
    "realisations": 200,
})

_register({
    "name": "slivnyak_palm",
    "description": "Palm average of the Poisson process: unit self-mass plus a flat level",
    "window": {"kind": "cube", "halfwidth": 5000.0, "dim": 1},
    "process": {"kind": "poisson", "rho": 1.0, "dim": 1},
    "estimator": {"mode": "palm", "bin_width": 0.1, "max_radius": 10.0},
    "tolerances": {"flat_rel": 0.03, "atom0_rel": 0.03},
    "realisations": 200,
})

_register({
    "name": "lambda_gas",
    "description": "Integer comb with Bernoulli(1/2) occupation: p^2 peaks plus p(1-p) diffuse",
    "window": {"kind": "cube", "halfwidth": 5000.0, "dim": 1},
    "process": {"kind": "lattice", "b": 1.0, "dim": 1},
    "cluster": {"kind": "bernoulli_weight", "p": 0.5},
    "estimator": {"mode": "spectral", "k_min": 0.1, "k_max": 3.0, "k_step": 0.05},
    "tolerances": {"atom_rel": 0.05, "density_level_rel": 0.03},
    "realisations": 200,
})

_register({
    "name": "random_tiling_rational",
    "description": "Two-gap renewal with commensurate gaps 2/3 and 4/3: dual comb plus periodic diffuse part",
    "window": {"kind": "cube", "halfwidth": 5000.0, "dim": 1},
    "process": {"kind": "renewal", "law": {"kind": "two_atom", "a": "2/3", "b": "4/3", "p": "1/2"}},
    "estimator": {"mode": "spectral", "k_min": 0.1, "k_max": 4.05, "k_step": 0.05,
                  "atom_candidates": "all_grid"},
    "tolerances": {"atom_rel": 0.05, "unexplained_max": 0.0,
                   "periodicity_period": 1.5, "periodicity_z_max": 3.5},
    "realisations": 200,
})

_register({
    "name": "random_tiling_irrational",
    "description": "Two-gap renewal with golden-ratio gap ratio: only the central peak survives",
    "window": {"kind": "cube", "halfwidth": 5000.0, "dim": 1},
    "process": {"kind": "renewal",
                "law": {"kind": "two_atom", "a": 2.0 / _TAU**2, "b": 2.0 / _TAU, "p": 0.5}},
    "estimator": {"mode": "spectral", "k_min": 0.1, "k_max": 4.05, "k_step": 0.05,
                  "atom_candidates": "all_grid", "needle_check": True},
    "tolerances": {"atom_rel": 0.05, "unexplained_max": 0.0},
    "realisations": 200,
})

_register({
    "name": "neyman_scott",
    "description": "Poisson centres with uniform {0..3}-size Gaussian clusters",
    "window": {"kind": "cube", "halfwidth": 5000.0, "dim": 1},
    "process": {"kind": "poisson", "rho": 1.0, "dim": 1},
    "cluster": {"kind": "neyman_scott", "count_probs": [0.25, 0.25, 0.25, 0.25],
                "displacement": {"kind": "gaussian_displacement", "sigma": 0.2}},
    "estimator": {"mode": "spectral", "k_min": 0.2, "k_max": 3.0, "k_step": 0.05},
    "tolerances": {"atom_rel": 0.05, "density_mean_rel": 0.05},
    "realisations": 200,
})

_register({
    "name": "displacement",
    "description": "Poisson with Gaussian displacement: spectrum is unchanged",
    "window": {"kind": "cube", "halfwidth": 5000.0, "dim": 1},
    "process": {"kind": "poisson", "rho": 1.0, "dim": 1},
    "cluster": {"kind": "gaussian_displacement", "sigma": 0.3},
    "estimator": {"mode": "spectral", "k_min": 0.2, "k_max": 3.0, "k_step": 0.05},
    "tolerances": {"atom_rel": 0.05, "density_mean_rel": 0.05},
    "realisations": 200,
})

_register({
    "name": "signed_poisson",
    "description": "Poisson with fair random signs: flat spectrum, no central peak",
    "window": {"kind": "cube", "halfwidth": 5000.0, "dim": 1},
    "process": {"kind": "poisson", "rho": 1.0, "dim": 1},
    "cluster": {"kind": "signed_bernoulli", "p": 0.5},
    "estimator": {"mode": "spectral", "k_min": 0.2, "k_max": 3.0, "k_step": 0.05,
                  "extra_atom_candidates": [0.0]},
    "tolerances": {"density_level_rel": 0.03, "zero_atom_z": 3.0},
    "realisations": 200,
})

_register({
    "name": "matern",
    "description": "Hard-core thinned Poisson, d=2: min distance, effective density, flat tail",
    "window": {"kind": "cube", "halfwidth": 20.0, "dim": 2},
    "process": {"kind": "matern", "rho": 1.0, "R": 0.5, "dim": 2},
    "estimator": {"mode": "radial", "r_min": 1.0, "r_max": 2.0, "r_step": 0.1,
                  "track_min_dist": True},
    "tolerances": {"min_dist_violations": 0.0, "density_rel": 0.03, "flat_rel": 0.05},
    "realisations": 100,
})

_register({
    "name": "fibonacci_gas",
    "description": "Golden-ratio cut-and-project gas with tent profile: peaks plus flat diffuse part",
    "window": {"kind": "cube", "halfwidth": 5000.0, "dim": 1},
    "process": {"kind": "fibonacci_gas", "window_center": 0.0,
                "window_halfwidth": _TAU / 2.0, "profile": "tent"},
    "estimator": {"mode": "spectral", "k_min": 0.2, "k_max": 3.0, "k_step": 0.05,
                  "atom_weight_floor": 1e-4,
                  "deterministic_bragg": {"halfwidth": 5.0e4, "top": 5, "k_cutoff": 6.0}},
    "tolerances": {"density_level_rel": 0.05, "bragg_det_rel": 0.02},
    "realisations": 100,
})

_register({
    "name": "branching_bm",
    "description": "Critical branching Brownian motion, d=3: pair excess vs the finite-horizon kernel",
    "window": {"kind": "cube", "halfwidth": 4.0, "dim": 3},
    "process": {"kind": "branching_bm", "rho": 1.0, "V": 2.0, "dim": 3, "T": 4.0,
                "box_halfwidth": 16.0, "inner_halfwidth": 4.0},
    "estimator": {"mode": "radial", "r_min": 0.2, "r_max": 2.0, "r_step": 0.2},
    "tolerances": {"excess_mean_rel": 0.15, "count_z": 3.0},
    "realisations": 800,
})

_register({
    "name": "lattice_psf",
    "description": "Integer comb through the full pipeline: unit peaks at integer wavenumbers",
    "window": {"kind": "cube", "halfwidth": 5000.0, "dim": 1},
    "process": {"kind": "lattice", "b": 1.0, "dim": 1},
    "estimator": {"mode": "spectral", "k_min": 0.2, "k_max": 2.2, "k_step": 0.05},
    "tolerances": {"atom_rel": 0.03},
    "realisations": 50,
})
