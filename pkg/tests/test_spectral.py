import math

import numpy as np
import pytest

from pointdiff import (
    AveragingWindow,
    Gamma,
    LatticeProcess,
    PoissonProcess,
    WeightedPointSet,
    analytic_renewal_model,
    bartlett,
    compare,
    empirical_autocorr,
    pair_correlation_radial,
    palm_first_moment,
    periodogram,
    simulate_renewal,
)
from pointdiff.rng import stream
from pointdiff.spectral import (
    AcAccumulator,
    autocorr_to_csv,
    scan_unexplained,
    spectrum_to_csv,
)


def _comb(n=100, halfwidth=50.0):
    pts = np.arange(n) - (n - 1) / 2.0
    return WeightedPointSet(1, pts, np.ones(n), AveragingWindow("cube", halfwidth, 1))


# ---------------------------------------------------------------------------
# periodogram
# ---------------------------------------------------------------------------


def test_periodogram_trivia():
    w = AveragingWindow("cube", 10.0, 1)
    empty = WeightedPointSet(1, [], [], w)
    assert np.all(periodogram(empty, np.array([[0.0], [0.5]])) == 0.0)
    single = WeightedPointSet(1, [1.0], [1.0], w)
    vals = periodogram(single, np.array([[0.0], [0.3], [2.2]]))
    assert np.allclose(vals, 1.0 / w.volume())


def test_periodogram_comb_at_zero_grows_like_volume():
    ps = _comb(100, 50.0)
    val = periodogram(ps, np.array([[0.0]]))[0]
    assert val == pytest.approx(100.0)  # N^2 / L


def test_periodogram_positive_and_symmetric():
    rng = stream(51, 0, "spec")
    w = AveragingWindow("cube", 20.0, 1)
    pts = rng.uniform(-19, 19, 64)
    ps = WeightedPointSet(1, pts, np.ones(64), w)
    k = np.linspace(-3, 3, 41)[:, None]
    vals = periodogram(ps, k)
    assert np.all(vals >= 0)
    assert np.allclose(vals, vals[::-1], rtol=1e-10)


def test_periodogram_matches_pair_transform_brute_force():
    rng = stream(51, 1, "spec")
    w = AveragingWindow("cube", 5.0, 1)
    n = 14
    pts = rng.uniform(-4.9, 4.9, n)
    wts = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    ps = WeightedPointSet(1, pts, wts, w)
    ks = rng.uniform(-4, 4, 17)
    direct = periodogram(ps, ks[:, None])
    brute = np.zeros(17)
    for i, k in enumerate(ks):
        acc = 0j
        for a in range(n):
            for b in range(n):
                acc += wts[a] * np.conj(wts[b]) * np.exp(-2j * math.pi * k * (pts[a] - pts[b]))
        brute[i] = acc.real / w.volume()
    assert np.max(np.abs(direct - brute)) < 1e-10


def test_periodogram_d2_matches_brute_force():
    rng = stream(51, 2, "spec")
    w = AveragingWindow("cube", 5.0, 2)
    pts = rng.uniform(-4.9, 4.9, size=(9, 2))
    ps = WeightedPointSet(2, pts, np.ones(9), w)
    ks = rng.uniform(-2, 2, size=(7, 2))
    direct = periodogram(ps, ks)
    for i, k in enumerate(ks):
        s = np.exp(-2j * math.pi * pts @ k).sum()
        assert direct[i] == pytest.approx(abs(s) ** 2 / w.volume(), rel=1e-10)


# ---------------------------------------------------------------------------
# autocorrelation histogram
# ---------------------------------------------------------------------------


def test_autocorr_single_point():
    w = AveragingWindow("cube", 10.0, 1)
    ps = WeightedPointSet(1, [0.3], [1.0], w)
    hist = empirical_autocorr(ps, 0.1, max_radius=5.0)
    assert np.all(hist.bins == 0)
    assert hist.atom0 == pytest.approx(1.0 / w.volume())


def test_autocorr_comb_edge_bias_exact():
    # surface term of the naive estimator: bin mass 1 - |z| / L, exactly
    ps = _comb(100, 50.0)
    hist = empirical_autocorr(ps, 0.1, max_radius=30.0)
    for z in range(-29, 30):
        idx = int(np.argmin(np.abs(hist.bin_centres - z)))
        expect = 0.0 if z == 0 else (100 - abs(z)) / 100.0
        assert hist.bins[idx].real * 0.1 == pytest.approx(expect, abs=1e-12)
    assert hist.atom0 == pytest.approx(1.0)


def test_autocorr_hermitian_for_complex_weights():
    rng = stream(52, 0, "spec")
    w = AveragingWindow("cube", 30.0, 1)
    pts = rng.uniform(-29, 29, 200)
    wts = rng.standard_normal(200) + 1j * rng.standard_normal(200)
    ps = WeightedPointSet(1, pts, wts, w)
    hist = empirical_autocorr(ps, 0.25, max_radius=10.0)
    flipped = hist.bins[::-1]
    assert np.allclose(hist.bins, np.conj(flipped), atol=1e-12)


def test_autocorr_poisson_level():
    rng = stream(52, 1, "spec")
    acc = AcAccumulator(0.1, 20.0, 2.0 * 5000.0)
    proc = PoissonProcess(1.0, 1)
    w = AveragingWindow("cube", 5000.0, 1)
    for i in range(60):
        ps = proc.sample(w, stream(52, i, "pois"))
        acc.add(empirical_autocorr(ps, 0.1, max_radius=20.0))
    hist = acc.finalize()
    off = np.abs(hist.bin_centres) > 0.5
    assert abs(hist.bins.real[off].mean() - 1.0) < 0.01
    assert abs(hist.atom0 - 1.0) < 0.01


def test_autocorr_guard_requires_cutoff():
    rng = stream(52, 2, "spec")
    n = 200_000
    w = AveragingWindow("cube", 1e6, 1)
    ps = WeightedPointSet(1, rng.uniform(-9e5, 9e5, n), np.ones(n), w)
    with pytest.raises(ValueError):
        empirical_autocorr(ps, 0.1)


# ---------------------------------------------------------------------------
# palm average
# ---------------------------------------------------------------------------


def test_palm_poisson_flat_and_consistent():
    proc = PoissonProcess(1.0, 1)
    w = AveragingWindow("cube", 2000.0, 1)
    reals = [proc.sample(w, stream(53, i, "palm")) for i in range(30)]
    hist = palm_first_moment(reals, 0.2, 10.0)
    assert hist.atom0 == pytest.approx(1.0)
    assert abs(hist.bins.real.mean() - 1.0) < 0.02
    assert np.max(np.abs(hist.bins.real - 1.0)) < 0.15


def test_palm_renewal_matches_kernel_density():
    # Palm average of the gamma renewal process = the two-sided pair density
    from pointdiff.charfun import g_alpha

    reals = [simulate_renewal(Gamma(2.0), 2000.0, stream(54, i, "palm")) for i in range(40)]
    hist = palm_first_moment(reals, 0.2, 6.0)
    sel = np.abs(hist.bin_centres) > 0.3
    expect = np.array([g_alpha(2.0, abs(z)) for z in hist.bin_centres[sel]])
    err = np.abs(hist.bins.real[sel] - expect)
    assert err.mean() < 0.02


def test_palm_identity_with_autocorr():
    # density times the Palm estimate equals the naive pair histogram up to
    # the O(max_radius / L) surface term
    proc = PoissonProcess(1.0, 1)
    w = AveragingWindow("cube", 3000.0, 1)
    palm_acc = []
    ac = AcAccumulator(0.25, 8.0, w.volume())
    for i in range(40):
        ps = proc.sample(w, stream(55, i, "palm"))
        palm_acc.append(palm_first_moment([ps], 0.25, 8.0).bins.real)
        ac.add(empirical_autocorr(ps, 0.25, max_radius=8.0))
    palm_mean = np.mean(palm_acc, axis=0)
    hist = ac.finalize()
    rho = 1.0
    assert np.max(np.abs(rho * palm_mean - hist.bins.real)) < 0.05


def test_palm_erosion_errors():
    w = AveragingWindow("cube", 5.0, 1)
    ps = WeightedPointSet(1, [4.9], [1.0], w)  # only point is outside the eroded window
    with pytest.raises(ValueError):
        palm_first_moment([ps], 0.1, 2.0)


# ---------------------------------------------------------------------------
# radial pair correlation
# ---------------------------------------------------------------------------


def test_radial_pair_correlation_poisson_unbiased():
    proc = PoissonProcess(1.0, 2)
    w = AveragingWindow("cube", 12.0, 2)
    edges = np.linspace(0.5, 4.0, 8)
    dens = np.mean([pair_correlation_radial(proc.sample(w, stream(56, i, "rad")), edges)
                    for i in range(60)], axis=0)
    assert np.max(np.abs(dens - 1.0)) < 0.05


def test_radial_pair_correlation_comb_counts():
    # two points at distance 1: ordered pair count 2, exact overlap weight
    w = AveragingWindow("cube", 5.0, 1)
    ps = WeightedPointSet(1, [-0.5, 0.5], [1.0, 1.0], w)
    edges = np.array([0.5, 1.5])
    val = pair_correlation_radial(ps, edges)[0]
    shell = 2.0 * (1.5 - 0.5)  # two-sided 1-d shell length
    assert val == pytest.approx(2.0 / (10.0 - 1.0) / shell)


# ---------------------------------------------------------------------------
# model readouts and the report
# ---------------------------------------------------------------------------


def test_bartlett_examples():
    poisson = PoissonProcess(2.0, 1).model(5.0)
    bart = bartlett(poisson, 2.0)
    pos, wts = bart.atoms(5.0)
    assert pos.shape[0] == 0  # exactly removed
    assert np.allclose(bart.ac_density(np.array([[0.4]])), 2.0)

    comb = LatticeProcess(1.0, 1).model(5.0)
    bart = bartlett(comb, 1.0)
    pos, wts = bart.atoms(2.5)
    assert np.allclose(sorted(pos[:, 0]), [-2, -1, 1, 2])  # 0-atom gone

    renewal = analytic_renewal_model(Gamma(2.0))
    bart = bartlett(renewal, 1.0)
    assert bart.atoms(5.0)[0].shape[0] == 0


def test_bartlett_inverse_identity():
    # adding rho^2 at 0 and removing it again is the identity
    base = analytic_renewal_model(Gamma(2.0))
    rho = 1.0
    bart = bartlett(base, rho)
    again = bartlett(base, rho)  # deterministic
    k = np.linspace(0.1, 3, 20)[:, None]
    assert np.allclose(bart.ac_density(k), again.ac_density(k))


def test_bartlett_rejects_small_atom():
    with pytest.raises(ValueError):
        bartlett(PoissonProcess(1.0, 1).model(5.0), 2.0)


def test_compare_model_with_itself_is_exact():
    model = PoissonProcess(1.0, 1).model(5.0)
    ks = np.linspace(0.2, 3.0, 15)
    from pointdiff.spectral import EmpiricalSpectrum

    emp = EmpiricalSpectrum(
        k_scalars=ks, k_vectors=ks[:, None],
        intensity_mean=model.ac_density(ks[:, None]),
        intensity_stderr=np.zeros(15),
        atom_k_scalars=np.array([0.0]), atom_k_vectors=np.array([[0.0]]),
        atom_weights=np.array([1.0]), atom_stderr=np.array([0.0]),
        realisation_count=1, window_volume=1e4,
    )
    rep = compare(emp, model, {"atom_rel": 1e-12, "density_mean_rel": 1e-12})
    assert rep.passed
    assert all(e.value == 0.0 for e in rep.entries if e.name.endswith("rel") or e.name.endswith("rel_max"))


def test_scan_unexplained_flags_planted_peak():
    model = PoissonProcess(1.0, 1).model(5.0)
    from pointdiff.spectral import EmpiricalSpectrum

    emp = EmpiricalSpectrum(
        k_scalars=np.array([0.5]), k_vectors=np.array([[0.5]]),
        intensity_mean=np.array([1.0]), intensity_stderr=np.array([0.01]),
        atom_k_scalars=np.array([0.0, 0.7]), atom_k_vectors=np.array([[0.0], [0.7]]),
        atom_weights=np.array([1.0, 0.5]), atom_stderr=np.array([0.01, 0.01]),
        realisation_count=10, window_volume=1e4,
    )
    flagged = scan_unexplained(emp, model, atom_tol=1e-6, factor=5.0)
    assert list(flagged) == [0.7]  # 0 is a model atom, 0.7 is not


def test_csv_serialisation_layout():
    from pointdiff.spectral import EmpiricalSpectrum

    emp = EmpiricalSpectrum(
        k_scalars=np.array([0.1, 0.2]), k_vectors=np.array([[0.1], [0.2]]),
        intensity_mean=np.array([1.0, 2.0]), intensity_stderr=np.array([0.1, 0.2]),
        atom_k_scalars=np.zeros(0), atom_k_vectors=np.zeros((0, 1)),
        atom_weights=np.zeros(0), atom_stderr=np.zeros(0),
        realisation_count=3, window_volume=10.0,
    )
    text = spectrum_to_csv(emp)
    lines = text.strip().split("\n")
    assert lines[0] == "k,mean,stderr"
    assert lines[1].split(",") == ["0.10000000000000001", "1", "0.10000000000000001"]

    ps = _comb(10, 5.0)
    hist = empirical_autocorr(ps, 0.5, max_radius=3.0)
    lines = autocorr_to_csv(hist).strip().split("\n")
    assert lines[0] == "z,re,im,stderr"
    assert len(lines) == hist.bins.size + 1


def test_bragg_weight_readout_and_errors():
    from pointdiff import bragg_weight
    from pointdiff.spectral import SpectrumAccumulator

    # integer comb: the estimated weight at k = 0 is exactly 1
    ps = _comb(100, 50.0)
    acc = SpectrumAccumulator(np.zeros(0), np.zeros((0, 1)), np.zeros(0, dtype=int), 0,
                              np.array([0.0, 1.0, 0.5]), np.array([[0.0], [1.0], [0.5]]),
                              ps.window.volume())
    for _ in range(3):
        acc.add(periodogram(ps, acc.eval_vectors))
    emp = acc.finalize()
    w, se = bragg_weight(emp, [0.0], 1e-6)
    assert w == pytest.approx(1.0)
    w1, _ = bragg_weight(emp, [1.0], 1e-6)
    assert w1 == pytest.approx(1.0)
    w_half, _ = bragg_weight(emp, [0.5], 1e-6)
    assert w_half < 1e-3  # no peak between integers
    with pytest.raises(ValueError):
        bragg_weight(emp, [0.31], 1e-6)  # not a tracked candidate


def test_ac_density_estimate_readout_and_exclusion():
    from pointdiff import ac_density_estimate
    from pointdiff.spectral import EmpiricalSpectrum

    ks = np.array([0.5, 1.0, 1.5])
    emp = EmpiricalSpectrum(
        k_scalars=ks, k_vectors=ks[:, None],
        intensity_mean=np.array([1.1, 0.9, 1.0]), intensity_stderr=np.full(3, 0.05),
        atom_k_scalars=np.array([0.0]), atom_k_vectors=np.array([[0.0]]),
        atom_weights=np.array([1.0]), atom_stderr=np.array([0.01]),
        realisation_count=4, window_volume=100.0,
    )
    val, se = ac_density_estimate(emp, [1.0], 0.3)
    assert val == 0.9 and se == 0.05
    with pytest.raises(ValueError):
        ac_density_estimate(emp, [0.1], 0.3)  # inside the peak exclusion zone
    with pytest.raises(ValueError):
        ac_density_estimate(emp, [0.77], 0.3)  # not on the grid
