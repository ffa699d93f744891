import math

import numpy as np
import pytest

from pointdiff import (
    Deterministic,
    Exponential,
    Gamma,
    TwoAtom,
    analytic_renewal_ac_density,
    analytic_renewal_model,
    simulate_renewal,
)
from pointdiff.rng import stream

LAWS = [Exponential(), Gamma(0.7), Gamma(2.0), TwoAtom(2 / 3, 4 / 3, 0.5), Deterministic()]


def test_deterministic_realisation_is_shifted_comb():
    # equilibrium delay of the unit comb is uniform on [0, 1): exactly
    # `length` points at U, U+1, ..., centred afterwards
    rng = stream(11, 0, "renewal")
    for _ in range(20):
        ps = simulate_renewal(Deterministic(), 10.0, rng)
        assert ps.count == 10
        x = np.sort(ps.points[:, 0])
        gaps = np.diff(x)
        assert np.allclose(gaps, 1.0, atol=1e-12)


def test_deterministic_phase_is_uniform():
    rng = stream(12, 0, "renewal")
    phases = []
    for _ in range(400):
        ps = simulate_renewal(Deterministic(), 10.0, rng)
        phases.append(np.min(np.sort(ps.points[:, 0]) + 5.0))
    phases = np.asarray(phases)
    # 3-sigma moment checks against U[0, 1)
    assert abs(phases.mean() - 0.5) < 3 * math.sqrt(1 / 12 / 400)
    assert abs(phases.var() - 1 / 12) < 3 * math.sqrt(1 / 180 / 400) + 0.01


def test_exponential_counts_are_poisson():
    rng = stream(13, 0, "renewal")
    L = 50.0
    counts = np.array([simulate_renewal(Exponential(), L, rng).count for _ in range(400)])
    se_mean = math.sqrt(L / 400)
    assert abs(counts.mean() - L) < 3 * se_mean
    # Poisson variance equals the mean; allow 3 sigma of the variance estimate
    var_se = L * math.sqrt(2 / 399) * 1.5
    assert abs(counts.var(ddof=1) - L) < 3 * var_se


@pytest.mark.parametrize("law", LAWS)
def test_unit_density_and_gaps(law):
    rng = stream(14, 0, "renewal")
    L = 200.0
    counts = []
    gap_means = []
    for _ in range(120):
        ps = simulate_renewal(law, L, rng)
        counts.append(ps.count)
        gap_means.append(np.diff(np.sort(ps.points[:, 0])).mean())
    dens = np.mean(counts) / L
    se = np.std(counts, ddof=1) / math.sqrt(len(counts)) / L
    assert abs(dens - 1.0) < 3 * max(se, 1e-4)
    assert abs(np.mean(gap_means) - 1.0) < 0.03


def test_all_points_inside_window():
    rng = stream(15, 0, "renewal")
    ps = simulate_renewal(Gamma(2.0), 100.0, rng)
    assert np.all(np.abs(ps.points[:, 0]) < 50.0)
    assert np.all(ps.weights == 1.0)


def test_analytic_model_exponential_is_flat():
    model = analytic_renewal_model(Exponential())
    pos, wts = model.atoms(10.0)
    assert pos.shape == (1, 1) and wts[0] == 1.0
    k = np.linspace(0.1, 5, 50)[:, None]
    assert np.allclose(model.ac_density(k), 1.0)


def test_analytic_model_gamma2_closed_form():
    model = analytic_renewal_model(Gamma(2.0))
    k = np.linspace(0.1, 4, 40)
    expect = (2 + (math.pi * k) ** 2) / (4 + (math.pi * k) ** 2)
    assert np.allclose(model.ac_density(k[:, None]), expect, rtol=1e-12)


def test_analytic_model_lattice_case():
    model = analytic_renewal_model(TwoAtom(2 / 3, 4 / 3, 0.5))
    pos, wts = model.atoms(4.0)
    assert np.allclose(sorted(pos[:, 0]), [-3.0, -1.5, 0.0, 1.5, 3.0])
    assert np.all(wts == 1.0)
    # diffuse part is periodic with period 1/b = 3/2
    k = np.linspace(0.1, 1.3, 25)
    assert np.allclose(model.ac_density(k[:, None]),
                       model.ac_density((k + 1.5)[:, None]), rtol=1e-9)
    # singular set = the dual lattice
    sing = model.singular_points(4.0)
    assert np.allclose(sorted(sing[:, 0]), [-3.0, -1.5, 0.0, 1.5, 3.0])


def test_ac_density_values():
    val = analytic_renewal_ac_density(Gamma(2.0), 0.5)
    assert not val.atomic
    assert val.value == pytest.approx(1 - math.exp(-2.0), rel=1e-10)
    val = analytic_renewal_ac_density(Exponential(), 2.3)
    assert val.value == 1.0 and not val.atomic
    val = analytic_renewal_ac_density(Deterministic(), 3.0)
    assert val.atomic
    assert val.value == pytest.approx(1.0)


def test_ac_density_tiling_atom_oracle():
    # brute-force oracle: enumerate gap sequences of the two-atom law that
    # sum to z and add their probabilities
    law = TwoAtom(0.5, 1.5, 0.5)
    z = 2.0
    # compositions of 2.0 from {0.5, 1.5}: (.5 x4), (.5,1.5), (1.5,.5), (.5x1.5 perms)
    from itertools import product

    total = 0.0
    for m in range(1, 5):
        for combo in product((0.5, 1.5), repeat=m):
            if abs(sum(combo) - z) < 1e-12:
                total += 0.5**m
    val = analytic_renewal_ac_density(law, z)
    assert val.atomic
    assert val.value == pytest.approx(total, rel=1e-12)


def test_ac_density_rejects_zero():
    with pytest.raises(ValueError):
        analytic_renewal_ac_density(Exponential(), 0.0)
