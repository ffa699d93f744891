"""Scenario engine: parse a config, simulate realisations in parallel,
estimate, compare against the reference model, and emit artifacts.

A scenario config is a single JSON document with sections ``process``,
``cluster`` (optional), ``window``, ``estimator`` and ``tolerances``.
Physical parameters have no defaults; numerical knobs do.  Realisation i of
a run with seed s draws all its randomness from counter-based streams keyed
by (s, i, purpose), and partial results are folded in realisation order, so
outputs are byte-identical for a fixed (config, seed, realisations) no
matter how many workers are used.
"""

from __future__ import annotations

import functools
import json
import math
import os
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from . import __version__ as _pkg_version
from .branching import BranchingConfig, f_t, simulate_cbbm
from .charfun import Deterministic, Exponential, FiniteAtoms, Gamma, InterArrivalLaw, TwoAtom, charfun
from .clusters import (
    ClusterLaw,
    DeterministicCluster,
    GaussianDisplacement,
    NeymanScott,
    RandomWeight,
    SignedBernoulli,
    UniformDisplacement,
    bernoulli_weight,
    compound_model,
    sample_compound,
)
from .measures import AveragingWindow, FiniteCluster, SpectralModel, WeightedPointSet, restrict
from .processes import FibonacciGasProcess, LatticeProcess, MaternProcess, PoissonProcess
from .renewal import analytic_renewal_model, simulate_renewal
from .rng import stream
from .spectral import (
    AcAccumulator,
    AcHistogram,
    ComparisonReport,
    EmpiricalSpectrum,
    RadialPairEstimate,
    RadialAccumulator,
    SpectrumAccumulator,
    autocorr_to_csv,
    compare,
    empirical_autocorr,
    pair_correlation_radial,
    palm_first_moment,
    periodogram,
    scan_unexplained,
    spectrum_to_csv,
)

__all__ = ["ConfigError", "ScenarioResult", "run_scenario", "run_scenario_to_dir"]


class ConfigError(ValueError):
    """Invalid scenario config; the message names the offending field path."""


def _req(section: dict, key: str, path: str):
    if key not in section:
        raise ConfigError(f"missing required field {path}.{key}")
    return section[key]


def _number(section: dict, key: str, path: str) -> float:
    val = _req(section, key, path)
    if isinstance(val, str):
        try:
            val = float(Fraction(val))
        except ValueError as exc:
            raise ConfigError(f"{path}.{key} is not a number: {val!r}") from exc
    if not isinstance(val, (int, float)):
        raise ConfigError(f"{path}.{key} is not a number")
    return float(val)


def _maybe_fraction(value):
    if isinstance(value, str):
        return Fraction(value)
    return value


# ---------------------------------------------------------------------------
# config -> objects
# ---------------------------------------------------------------------------


def build_law(cfg: dict, path: str = "process.law") -> InterArrivalLaw:
    kind = _req(cfg, "kind", path)
    try:
        if kind == "exponential":
            return Exponential()
        if kind == "gamma":
            return Gamma(_number(cfg, "alpha", path))
        if kind == "deterministic":
            return Deterministic()
        if kind == "two_atom":
            return TwoAtom(
                _maybe_fraction(_req(cfg, "a", path)),
                _maybe_fraction(_req(cfg, "b", path)),
                _maybe_fraction(_req(cfg, "p", path)),
            )
        if kind == "finite_atoms":
            return FiniteAtoms(
                tuple(_maybe_fraction(a) for a in _req(cfg, "atoms", path)),
                tuple(_maybe_fraction(p) for p in _req(cfg, "probs", path)),
            )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    raise ConfigError(f"unknown inter-arrival law kind {kind!r} at {path}.kind")


def build_window(cfg: dict, path: str = "window") -> AveragingWindow:
    try:
        return AveragingWindow(
            _req(cfg, "kind", path), _number(cfg, "halfwidth", path), int(_req(cfg, "dim", path))
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def build_cluster(cfg: dict, dim: int, path: str = "cluster") -> ClusterLaw:
    kind = _req(cfg, "kind", path)
    try:
        if kind == "deterministic":
            offsets = np.asarray(_req(cfg, "offsets", path), dtype=float)
            weights = np.asarray(_req(cfg, "weights", path))
            if weights.ndim == 2 and weights.shape[1] == 2:
                weights = weights[:, 0] + 1j * weights[:, 1]
            return DeterministicCluster(FiniteCluster(offsets, weights))
        if kind == "bernoulli_weight":
            return bernoulli_weight(_number(cfg, "p", path), dim)
        if kind == "random_weight":
            values = []
            for v in _req(cfg, "values", path):
                values.append(complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v))
            return RandomWeight(tuple(values), tuple(float(p) for p in _req(cfg, "probs", path)), dim)
        if kind == "gaussian_displacement":
            return GaussianDisplacement(_number(cfg, "sigma", path), dim)
        if kind == "uniform_displacement":
            return UniformDisplacement(_number(cfg, "a", path), dim)
        if kind == "neyman_scott":
            disp = build_cluster(_req(cfg, "displacement", path), dim, path + ".displacement")
            if not isinstance(disp, (GaussianDisplacement, UniformDisplacement)):
                raise ConfigError(f"{path}.displacement must be a displacement law")
            return NeymanScott(tuple(float(p) for p in _req(cfg, "count_probs", path)), disp)
        if kind == "signed_bernoulli":
            return SignedBernoulli(_number(cfg, "p", path), dim)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    raise ConfigError(f"unknown cluster kind {kind!r} at {path}.kind")


@dataclass
class _Plan:
    """Everything a worker needs to produce one realisation's summaries."""

    mode: str
    window: AveragingWindow
    draw: Callable[[int, int], "tuple[WeightedPointSet, dict]"]
    model: Optional[SpectralModel] = None
    eval_vectors: Optional[np.ndarray] = None
    spectrum_proto: Optional[SpectrumAccumulator] = None
    ac_bin_width: Optional[float] = None
    ac_max_radius: Optional[float] = None
    palm_bin_width: Optional[float] = None
    palm_max_radius: Optional[float] = None
    r_edges: Optional[np.ndarray] = None
    track_min_dist: bool = False
    group_base: Optional[np.ndarray] = None
    group_delta: float = 0.0
    group_q: int = 1


def _build_process(proc_cfg: dict):
    kind = _req(proc_cfg, "kind", "process")
    try:
        if kind == "renewal":
            return ("renewal", build_law(_req(proc_cfg, "law", "process"), "process.law"))
        if kind == "poisson":
            return ("centre", PoissonProcess(_number(proc_cfg, "rho", "process"), int(_req(proc_cfg, "dim", "process"))))
        if kind == "lattice":
            return ("centre", LatticeProcess(_number(proc_cfg, "b", "process"), int(_req(proc_cfg, "dim", "process"))))
        if kind == "matern":
            return ("centre", MaternProcess(
                _number(proc_cfg, "rho", "process"), _number(proc_cfg, "R", "process"),
                int(_req(proc_cfg, "dim", "process"))))
        if kind == "fibonacci_gas":
            return ("centre", FibonacciGasProcess(
                _number(proc_cfg, "window_center", "process"),
                _number(proc_cfg, "window_halfwidth", "process"),
                _req(proc_cfg, "profile", "process"),
                float(proc_cfg.get("profile_value", 1.0)),
                float(proc_cfg.get("internal_cutoff", 30.0)),
            ))
        if kind == "branching_bm":
            return ("branching", BranchingConfig(
                _number(proc_cfg, "rho", "process"), _number(proc_cfg, "V", "process"),
                int(_req(proc_cfg, "dim", "process")), _number(proc_cfg, "T", "process"),
                _number(proc_cfg, "box_halfwidth", "process"),
                _number(proc_cfg, "inner_halfwidth", "process")))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"process: {exc}") from exc
    raise ConfigError(f"unknown process kind {kind!r} at process.kind")


def _axis_vectors(scalars: np.ndarray, dim: int, axis: int) -> np.ndarray:
    out = np.zeros((np.asarray(scalars).size, dim))
    out[:, axis] = scalars
    return out


def _atom_exclusion_radii(atom_weights, window_scale, mean_level, leak_frac, base, half_bw):
    """Per-peak exclusion radius: main-lobe width plus a leakage-bound term.

    The averaged periodogram near a peak of weight w behaves like
    w / (pi^2 L dk^2); the radius keeps that leakage below leak_frac times
    the expected diffuse level.
    """
    L = 2.0 * window_scale
    radii = []
    for w in atom_weights:
        leak = math.sqrt(max(w, 0.0) / (math.pi**2 * L * leak_frac * max(mean_level, 1e-12)))
        radii.append(max(base, leak) + half_bw)
    return np.asarray(radii)


def build_plan(config: dict) -> _Plan:
    proc_kind, proc = _build_process(_req(config, "process", "<root>"))
    window = build_window(_req(config, "window", "<root>"))
    est = _req(config, "estimator", "<root>")
    mode = est.get("mode", "spectral")

    cluster_cfg = config.get("cluster")
    law: Optional[ClusterLaw] = None
    if cluster_cfg is not None:
        law = build_cluster(cluster_cfg, window.dim)

    if proc_kind == "branching":
        if proc.dim != window.dim or abs(proc.inner_halfwidth - window.scale) > 1e-12:
            raise ConfigError("window must match process.inner_halfwidth for branching runs")

        def draw_branching(seed: int, idx: int):
            rng = stream(seed, idx, "branching")
            ps, box_count = simulate_cbbm(proc, rng, return_box_count=True)
            return ps, {"box_count": box_count}

        return _Plan(mode="radial", window=window, draw=draw_branching, r_edges=_r_edges(est))

    if proc_kind == "renewal":
        margin = law.offset_margin() if law is not None else 0.0

        def draw_centre(seed: int, idx: int) -> WeightedPointSet:
            rng = stream(seed, idx, "process")
            return simulate_renewal(proc, 2.0 * (window.scale + margin), rng)

        centre_model = analytic_renewal_model(proc)
        intensity = 1.0
    else:
        margin = law.offset_margin() if law is not None else 0.0
        sim_window = window.dilate(margin) if margin > 0 else window

        def draw_centre(seed: int, idx: int) -> WeightedPointSet:
            rng = stream(seed, idx, "process")
            return proc.sample(sim_window, rng)

        k_cutoff = float(est.get("k_max", 0.0)) + 2.0
        centre_model = proc.model(k_cutoff)
        intensity = proc.intensity()

    if law is None:
        model = centre_model

        def draw(seed: int, idx: int):
            ps = draw_centre(seed, idx)
            if ps.window.scale != window.scale:
                ps = restrict(ps, window)
            return ps, {}
    else:
        model = compound_model(centre_model, intensity, law)

        def draw(seed: int, idx: int):
            centres = draw_centre(seed, idx)
            decorated = sample_compound(centres, law, stream(seed, idx, "cluster"))
            return restrict(decorated, window), {}

    if mode == "palm":
        return _Plan(mode="palm", window=window, draw=draw, model=model,
                     palm_bin_width=_number(est, "bin_width", "estimator"),
                     palm_max_radius=_number(est, "max_radius", "estimator"))

    if mode == "radial":
        return _Plan(mode="radial", window=window, draw=draw, model=model,
                     r_edges=_r_edges(est), track_min_dist=bool(est.get("track_min_dist", False)))

    # spectral mode
    k_min = _number(est, "k_min", "estimator")
    k_max = _number(est, "k_max", "estimator")
    k_step = _number(est, "k_step", "estimator")
    axis = int(est.get("axis", 0))
    q = int(est.get("freq_avg_count", 9))
    bw = float(est.get("freq_avg_bandwidth", 0.02))
    leak_frac = float(est.get("leak_frac", 0.02))
    atom_floor = float(est.get("atom_weight_floor", 1e-8))
    base_excl = float(est.get("pp_exclusion_radius", 3.0 / window.scale))

    grid = np.arange(k_min, k_max + 0.5 * k_step, k_step)
    apos, awts = model.atoms(k_max + 1.0)
    sing = model.singular_points(k_max + 1.0)
    anorm = apos[:, axis] if apos.shape[0] else np.zeros(0)

    mean_level = float(np.mean(model.ac_density(_axis_vectors(grid, window.dim, axis)))) if grid.size else 0.0
    if mean_level <= 1e-12:
        grid = grid[:0]  # pure-point model: nothing diffuse to estimate
    keep_atom = awts >= atom_floor
    excl_centres = np.concatenate([anorm[keep_atom], sing[:, axis] if sing.shape[0] else np.zeros(0)])
    excl_weights = np.concatenate([awts[keep_atom], np.ones(sing.shape[0])])
    radii = _atom_exclusion_radii(excl_weights, window.scale, mean_level, leak_frac,
                                  base_excl, 0.5 * bw)
    admissible = np.ones(grid.size, dtype=bool)
    for c, r in zip(excl_centres, radii):
        admissible &= np.abs(grid - c) > r
    grid = grid[admissible]

    offsets = np.linspace(-0.5 * bw, 0.5 * bw, q) if q > 1 else np.zeros(1)
    eval_scalars = (grid[:, None] + offsets[None, :]).ravel() if grid.size else np.zeros(0)
    group_index = np.repeat(np.arange(grid.size), offsets.size)
    group_delta = bw / (q - 1) if q > 1 else 0.0

    atom_candidates = est.get("atom_candidates", "model")
    model_atom_scalars = anorm[keep_atom & (np.abs(anorm) <= k_max + 1e-9)]
    if atom_candidates == "model":
        atom_scalars = model_atom_scalars
    elif atom_candidates == "all_grid":
        # every grid point doubles as a peak candidate (spurious-peak scan)
        full_grid = np.arange(k_min, k_max + 0.5 * k_step, k_step)
        atom_scalars = np.unique(np.concatenate([full_grid, model_atom_scalars]))
    else:
        atom_scalars = np.asarray(atom_candidates, dtype=float)
    extra = np.asarray(est.get("extra_atom_candidates", []), dtype=float)
    if extra.size:
        atom_scalars = np.unique(np.concatenate([atom_scalars, extra]))

    proto = SpectrumAccumulator(
        grid, _axis_vectors(eval_scalars, window.dim, axis), group_index, grid.size,
        atom_scalars, _axis_vectors(atom_scalars, window.dim, axis), window.volume(),
    )
    plan = _Plan(mode="spectral", window=window, draw=draw, model=model,
                 spectrum_proto=proto, eval_vectors=proto.eval_vectors)
    if window.dim == 1 and grid.size:
        plan.group_base = grid - 0.5 * bw if q > 1 else grid
        plan.group_delta = group_delta
        plan.group_q = int(offsets.size)
    ac_cfg = est.get("autocorr")
    if ac_cfg:
        plan.ac_bin_width = _number(ac_cfg, "bin_width", "estimator.autocorr")
        plan.ac_max_radius = _number(ac_cfg, "max_radius", "estimator.autocorr")
    return plan


def _r_edges(est: dict) -> np.ndarray:
    r_min = _number(est, "r_min", "estimator")
    r_max = _number(est, "r_max", "estimator")
    r_step = _number(est, "r_step", "estimator")
    n = int(round((r_max - r_min) / r_step))
    return r_min + r_step * np.arange(n + 1)


# ---------------------------------------------------------------------------
# per-realisation worker
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=8)
def _cached_plan(config_json: str) -> _Plan:
    return build_plan(json.loads(config_json))


def _run_one(config_json: str, seed: int, idx: int) -> dict:
    plan = _cached_plan(config_json)
    ps, extras = plan.draw(seed, idx)
    out: dict = dict(extras)
    if plan.mode == "spectral":
        out["intensity"] = _eval_intensity(plan, ps)
        if plan.ac_bin_width is not None:
            hist = empirical_autocorr(ps, plan.ac_bin_width, plan.ac_max_radius)
            out["ac_bins"] = hist.bins
            out["ac_atom0"] = hist.atom0
    elif plan.mode == "palm":
        hist = palm_first_moment([ps], plan.palm_bin_width, plan.palm_max_radius)
        out["palm_bins"] = hist.bins
    elif plan.mode == "radial":
        out["radial"] = pair_correlation_radial(ps, plan.r_edges)
        out["count"] = ps.count
        if plan.track_min_dist:
            out["min_dist"] = _min_pairwise_distance(ps.points)
    return out


def _eval_intensity(plan: _Plan, ps: WeightedPointSet) -> np.ndarray:
    """I(k) at the plan's evaluation vectors; grouped fast path for d = 1."""
    if plan.group_base is None or ps.dim != 1:
        return periodogram(ps, plan.eval_vectors)
    from ._kernels import dft_1d, dft_grouped_1d

    vol = ps.window.volume()
    n_eval = plan.eval_vectors.shape[0]
    if ps.count == 0:
        return np.zeros(n_eval)
    x = ps.points[:, 0]
    s_grid = dft_grouped_1d(x, ps.weights, plan.group_base, plan.group_delta, plan.group_q)
    atoms = plan.spectrum_proto.atom_scalars
    s_atoms = dft_1d(x, ps.weights, atoms) if atoms.size else np.zeros(0, dtype=complex)
    return np.abs(np.concatenate([s_grid, s_atoms])) ** 2 / vol


def _min_pairwise_distance(pts: np.ndarray) -> float:
    if pts.shape[0] < 2:
        return math.inf
    from scipy.spatial import cKDTree

    d, _ = cKDTree(pts).query(pts, k=2)
    return float(np.min(d[:, 1]))


# ---------------------------------------------------------------------------
# scenario driver
# ---------------------------------------------------------------------------


@dataclass
class ScenarioResult:
    name: str
    config: dict
    seed: int
    realisations: int
    threads: int
    report: ComparisonReport
    spectrum: Optional[EmpiricalSpectrum] = None
    autocorr: Optional[AcHistogram] = None
    radial: Optional[RadialPairEstimate] = None
    extras: dict = field(default_factory=dict)
    children: "list[ScenarioResult]" = field(default_factory=list)

    def to_report_dict(self) -> dict:
        doc = {
            "name": self.name,
            "seed": self.seed,
            "realisations": self.realisations,
            "threads": self.threads,
            "version": _git_describe(),
            "config": self.config,
            "report": self.report.to_dict(),
            "extras": _jsonable(self.extras),
        }
        if self.spectrum is not None:
            doc["atoms"] = [
                {"k": float(k), "weight": float(w), "stderr": float(s)}
                for k, w, s in zip(self.spectrum.atom_k_scalars, self.spectrum.atom_weights,
                                   self.spectrum.atom_stderr)
            ]
        if self.children:
            doc["children"] = [c.to_report_dict() for c in self.children]
        return doc


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


@functools.lru_cache(maxsize=1)
def _git_describe() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=5,
            cwd=os.path.dirname(os.path.abspath(__file__)),
        )
        if out.returncode == 0:
            return out.stdout.strip()
    except Exception:
        pass
    return f"pointdiff-{_pkg_version}"


def _parallel_payloads(config_json: str, seed: int, realisations: int, threads: int):
    """Per-realisation summaries, always yielded in index order."""
    if threads <= 1:
        for idx in range(realisations):
            yield _run_one(config_json, seed, idx)
        return
    import multiprocessing

    ctx = multiprocessing.get_context("fork")
    chunk = max(1, realisations // (threads * 8))
    with ProcessPoolExecutor(max_workers=threads, mp_context=ctx) as pool:
        yield from pool.map(_run_one, [config_json] * realisations,
                            [seed] * realisations, range(realisations), chunksize=chunk)


def run_scenario(config: dict, seed: int, realisations: Optional[int] = None,
                 threads: int = 1) -> ScenarioResult:
    """Run one scenario (or a sweep of sub-scenarios) and build its report."""
    name = config.get("name", "scenario")
    if "sweep" in config:
        children = []
        for entry in config["sweep"]:
            sub = {k: v for k, v in config.items() if k not in ("sweep", "name")}
            for key, val in entry.items():
                if key != "label":
                    sub[key] = val
            sub["name"] = entry.get("label", "case")
            children.append(run_scenario(sub, seed, realisations, threads))
        report = ComparisonReport()
        for child in children:
            for e in child.report.entries:
                report.entries.append(type(e)(f"{child.name}.{e.name}", e.value, e.bound, e.passed))
        result = ScenarioResult(name, config, seed, realisations or 0, threads, report)
        result.children = children
        result.extras["runtime_s"] = sum(c.extras.get("runtime_s", 0.0) for c in children)
        return result

    t0 = time.monotonic()
    plan = build_plan(config)  # validates the config before any work
    n_real = int(realisations if realisations is not None else config.get("realisations", 100))
    if n_real < 1:
        raise ConfigError("realisations must be >= 1")
    _cached_plan.cache_clear()
    config_json = json.dumps(config, sort_keys=True)

    tolerances = config.get("tolerances", {})
    result = ScenarioResult(name, config, seed, n_real, threads, ComparisonReport())

    if plan.mode == "spectral":
        acc = plan.spectrum_proto
        ac_acc = (AcAccumulator(plan.ac_bin_width, plan.ac_max_radius, plan.window.volume())
                  if plan.ac_bin_width is not None else None)
        for payload in _parallel_payloads(config_json, seed, n_real, threads):
            acc.add(payload["intensity"])
            if ac_acc is not None:
                ac_acc.add(AcHistogram(ac_acc.edges, ac_acc.centres, payload["ac_bins"],
                                       np.zeros(ac_acc.nbins), payload["ac_atom0"], 1,
                                       plan.window.volume()))
        emp = acc.finalize()
        result.spectrum = emp
        if ac_acc is not None:
            result.autocorr = ac_acc.finalize()
        result.report = compare(emp, plan.model, tolerances)
        _spectral_extra_checks(result, plan, tolerances, config)
    elif plan.mode == "palm":
        palm_acc = AcAccumulator(plan.palm_bin_width, plan.palm_max_radius, float("nan"))
        for payload in _parallel_payloads(config_json, seed, n_real, threads):
            palm_acc.add(AcHistogram(palm_acc.edges, palm_acc.centres, payload["palm_bins"],
                                     np.zeros(palm_acc.nbins), 1.0, 1, float("nan")))
        hist = palm_acc.finalize()
        result.autocorr = hist
        _palm_checks(result, hist, tolerances, config)
    elif plan.mode == "radial":
        rad = RadialAccumulator(plan.r_edges, plan.window.dim)
        counts, box_counts, min_dists = [], [], []
        for payload in _parallel_payloads(config_json, seed, n_real, threads):
            rad.add(payload["radial"])
            counts.append(payload["count"])
            if "box_count" in payload:
                box_counts.append(payload["box_count"])
            if "min_dist" in payload:
                min_dists.append(payload["min_dist"])
        est = rad.finalize()
        result.radial = est
        result.extras["mean_count"] = float(np.mean(counts))
        if box_counts:
            result.extras["box_counts"] = box_counts
        if min_dists:
            result.extras["min_dists"] = min_dists
        _radial_checks(result, est, plan, tolerances, config)

    result.extras["runtime_s"] = time.monotonic() - t0
    return result


def _spectral_extra_checks(result: ScenarioResult, plan: _Plan, tol: dict, config: dict) -> None:
    emp = result.spectrum
    model = plan.model
    rep = result.report
    if "density_level_rel" in tol and emp.k_scalars.size:
        ref = model.ac_density(emp.k_vectors)
        level = float(np.mean(ref))
        rep.add("density_level_rel", abs(float(np.mean(emp.intensity_mean)) - level) / level,
                tol["density_level_rel"])
    if "zero_atom_z" in tol and emp.atom_k_scalars.size:
        # peak-consistent-with-zero test: excess of the I(0)/vol readout over
        # the empirical diffuse floor, in stderr units
        i = int(np.argmin(np.abs(emp.atom_k_scalars)))
        se = max(float(emp.atom_stderr[i]), 1e-300)
        floor = float(np.mean(emp.intensity_mean)) / emp.window_volume if emp.k_scalars.size else 0.0
        rep.add("zero_atom_z", (float(emp.atom_weights[i]) - floor) / se, tol["zero_atom_z"])
    if "unexplained_max" in tol:
        flagged = scan_unexplained(emp, model, atom_tol=1e-6)
        rep.add("unexplained_atoms", float(flagged.size), tol["unexplained_max"])
        result.extras["unexplained_k"] = flagged
    if "periodicity_z_max" in tol:
        period = float(tol.get("periodicity_period", 0.0))
        if period <= 0:
            raise ConfigError("tolerances.periodicity_period required with periodicity_z_max")
        zs = []
        ks = emp.k_scalars
        for i, k in enumerate(ks):
            j = np.flatnonzero(np.abs(ks - (k + period)) < 1e-9)
            if j.size:
                j = int(j[0])
                se = math.hypot(emp.intensity_stderr[i], emp.intensity_stderr[j])
                if se > 0:
                    zs.append(abs(emp.intensity_mean[i] - emp.intensity_mean[j]) / se)
        if zs:
            rep.add("periodicity_z_max", max(zs), tol["periodicity_z_max"])
    det_cfg = config.get("estimator", {}).get("deterministic_bragg")
    if det_cfg:
        _deterministic_bragg_check(result, plan, model, det_cfg, tol, config)
    if config.get("estimator", {}).get("needle_check"):
        _needle_check(result, config)


def _deterministic_bragg_check(result: ScenarioResult, plan: _Plan, model: SpectralModel,
                               det_cfg: dict, tol: dict, config: dict) -> None:
    """Check the strongest predicted peak weights against a single long
    deterministic enumeration of the profile-weighted host comb (no MC)."""
    proc_cfg = config["process"]
    if proc_cfg.get("kind") != "fibonacci_gas":
        raise ConfigError("estimator.deterministic_bragg requires a fibonacci_gas process")
    _, gas = _build_process(proc_cfg)
    halfwidth = float(det_cfg.get("halfwidth", 5e4))
    top = int(det_cfg.get("top", 5))
    win = AveragingWindow("cube", halfwidth, 1)
    xs, ys = gas.enumerate_host(win)
    comb = WeightedPointSet(1, xs, gas.profile_eval(ys), win)
    pos, wts = model.atoms(float(det_cfg.get("k_cutoff", 6.0)))
    order = np.lexsort((np.abs(pos[:, 0]), -wts))
    sel = order[:top]
    intens = periodogram(comb, pos[sel])
    est = intens / win.volume()
    rel = np.abs(est - wts[sel]) / wts[sel]
    result.extras["bragg_det"] = {
        "k": pos[sel, 0], "predicted": wts[sel], "estimated": est,
    }
    result.report.add("bragg_det_max_rel", float(np.max(rel)), tol.get("bragg_det_rel"))


def _needle_check(result: ScenarioResult, config: dict) -> None:
    """Non-blocking diagnostic: local maxima of the diffuse estimate should sit
    near wavenumbers where |charfun| approaches 1 (sharp needles)."""
    law = build_law(config["process"]["law"])
    emp = result.spectrum
    ks, vals = emp.k_scalars, emp.intensity_mean
    if ks.size < 5:
        return
    cf = np.abs(charfun(law, ks))
    near_one = ks[cf >= 1.0 - 1e-2]
    peaks = [ks[i] for i in range(1, ks.size - 1)
             if vals[i] > vals[i - 1] and vals[i] > vals[i + 1]]
    hits = [p for p in peaks if near_one.size and np.min(np.abs(near_one - p)) <= 0.05]
    result.extras["needle_candidates"] = near_one
    result.extras["needle_peaks_matched"] = hits
    result.report.add("needle_peaks_found", float(len(hits)), None)


def _palm_checks(result: ScenarioResult, hist: AcHistogram, tol: dict, config: dict) -> None:
    rho = float(config["process"]["rho"])
    rep = result.report
    dev = np.abs(hist.bins.real - rho) / rho
    if "flat_rel" in tol:
        rep.add("palm_flat_max_rel", float(dev.max()), tol["flat_rel"])
    if "atom0_rel" in tol:
        rep.add("palm_atom0_rel", abs(hist.atom0 - 1.0), tol["atom0_rel"])


def _shell_averaged(fn, r_edges: np.ndarray, dim: int) -> np.ndarray:
    """Shell-volume-weighted bin averages of a radial function (matches what
    the radial pair estimator measures, removing binning bias)."""
    nodes, weights = np.polynomial.legendre.leggauss(8)
    out = np.zeros(r_edges.size - 1)
    for i, (a, b) in enumerate(zip(r_edges[:-1], r_edges[1:])):
        r = 0.5 * (a + b) + 0.5 * (b - a) * nodes
        w = weights * r ** (dim - 1)
        out[i] = float(np.sum(w * np.array([fn(ri) for ri in r])) / np.sum(w))
    return out


def _radial_checks(result: ScenarioResult, est: RadialPairEstimate, plan: _Plan,
                   tol: dict, config: dict) -> None:
    rep = result.report
    proc = config["process"]
    if proc["kind"] == "matern":
        target = MaternProcess(float(proc["rho"]), float(proc["R"]), int(proc["dim"]))
        rho_eff = target.intensity()
        result.extras["rho_eff"] = rho_eff
        if "min_dist_violations" in tol:
            viol = sum(1 for d in result.extras.get("min_dists", []) if d < target.R - 1e-12)
            rep.add("min_dist_violations", float(viol), tol["min_dist_violations"])
        if "density_rel" in tol:
            dens = result.extras["mean_count"] / plan.window.volume()
            rep.add("density_rel", abs(dens - rho_eff) / rho_eff, tol["density_rel"])
        if "flat_rel" in tol:
            dev = np.abs(est.density - rho_eff**2) / rho_eff**2
            rep.add("pair_flat_max_rel", float(dev.max()), tol["flat_rel"])
    elif proc["kind"] == "branching_bm":
        rho, V, dim, T = (float(proc["rho"]), float(proc["V"]), int(proc["dim"]), float(proc["T"]))
        target = rho * _shell_averaged(lambda r: f_t(V, dim, T, r), est.r_edges, dim)
        # Subtract the squared pooled empirical density instead of rho^2: the
        # realisation-to-realisation density fluctuation of the clustered
        # field is common to the pair counts and to rho_hat^2, so it cancels
        # to first order and only local pair noise remains.
        rho_hat = result.extras["mean_count"] / plan.window.volume()
        result.extras["rho_hat"] = rho_hat
        excess = est.density - rho_hat**2
        rel = np.abs(excess - target) / np.abs(target)
        if "excess_mean_rel" in tol:
            rep.add("excess_mean_rel", float(rel.mean()), tol["excess_mean_rel"])
        result.extras["excess"] = excess
        result.extras["excess_target"] = target
        if "count_z" in tol:
            box_counts = np.asarray(result.extras["box_counts"], dtype=float)
            expect = rho * (2.0 * float(proc["box_halfwidth"])) ** dim
            se = box_counts.std(ddof=1) / math.sqrt(box_counts.size)
            rep.add("count_conservation_z", abs(box_counts.mean() - expect) / se, tol["count_z"])


# ---------------------------------------------------------------------------
# artifacts
# ---------------------------------------------------------------------------


def _write_artifacts(result: ScenarioResult, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    for child in result.children:
        _write_artifacts(child, os.path.join(out_dir, child.name))
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        json.dump(result.to_report_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    if result.spectrum is not None:
        with open(os.path.join(out_dir, "spectrum.csv"), "w") as fh:
            fh.write(spectrum_to_csv(result.spectrum))
    if result.autocorr is not None:
        with open(os.path.join(out_dir, "autocorr.csv"), "w") as fh:
            fh.write(autocorr_to_csv(result.autocorr))
    if result.radial is not None:
        lines = ["z,re,im,stderr"]
        for r, v, s in zip(result.radial.r_centres, result.radial.density, result.radial.stderr):
            lines.append(f"{r:.17g},{v:.17g},0,{s:.17g}")
        with open(os.path.join(out_dir, "autocorr.csv"), "w") as fh:
            fh.write("\n".join(lines) + "\n")


def run_scenario_to_dir(config: dict, seed: int, realisations: Optional[int],
                        threads: int, out_dir: str) -> ScenarioResult:
    result = run_scenario(config, seed, realisations, threads)
    _write_artifacts(result, out_dir)
    return result
