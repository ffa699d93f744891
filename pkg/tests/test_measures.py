import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pointdiff import (
    AveragingWindow,
    PoissonProcess,
    LatticeProcess,
    SpectralModel,
    WeightedPointSet,
    analytic_renewal_model,
    Gamma,
    read_point_set,
    restrict,
    spectral_eval,
    window_volume,
    write_point_set,
)


def test_window_volumes():
    assert window_volume(AveragingWindow("cube", 1.0, 1)) == 2.0
    assert window_volume(AveragingWindow("ball", 1.0, 3)) == pytest.approx(4 * math.pi / 3)
    assert window_volume(AveragingWindow("cube", 2.0, 2)) == 16.0


@given(scale=st.floats(0.01, 1e3), c=st.floats(0.01, 100.0),
       dim=st.integers(1, 4), kind=st.sampled_from(["cube", "ball"]))
def test_window_volume_scaling(scale, c, dim, kind):
    v1 = AveragingWindow(kind, scale, dim).volume()
    v2 = AveragingWindow(kind, c * scale, dim).volume()
    assert v2 == pytest.approx(c**dim * v1, rel=1e-12)


@pytest.mark.parametrize("kind", ["cube", "ball"])
def test_van_hove_ratio_vanishes(kind):
    # fixed thickening, growing scale: boundary layer volume / volume -> 0
    ratios = []
    for scale in (10.0, 100.0, 1000.0):
        w = AveragingWindow(kind, scale, 2)
        ratios.append(w.boundary_layer_volume(1.0) / w.volume())
    assert ratios[0] > ratios[1] > ratios[2]
    assert ratios[2] < 0.01


def test_window_membership_is_strict():
    w = AveragingWindow("cube", 1.0, 1)
    assert not w.contains(np.array([[1.0]]))[0]
    assert w.contains(np.array([[1.0 - 1e-12]]))[0]
    b = AveragingWindow("ball", 1.0, 2)
    assert not b.contains(np.array([[1.0, 0.0]]))[0]


def test_restrict_basic():
    w = AveragingWindow("cube", 5.0, 1)
    ps = WeightedPointSet(1, [0.5, 3.0], [1.0, 1.0], w)
    inner = AveragingWindow("cube", 1.0, 1)
    out = restrict(ps, inner)
    assert out.count == 1
    assert out.points[0, 0] == 0.5
    assert out.window is inner


def test_restrict_empty_and_identity():
    w = AveragingWindow("cube", 2.0, 1)
    empty = WeightedPointSet(1, [], [], w)
    assert restrict(empty, AveragingWindow("cube", 1.0, 1)).count == 0
    full = WeightedPointSet(1, [0.1, -0.5], [1.0, 2.0], w)
    again = restrict(full, w)
    assert np.array_equal(again.points, full.points)


def test_restrict_idempotent():
    w = AveragingWindow("cube", 5.0, 1)
    ps = WeightedPointSet(1, np.linspace(-4.9, 4.9, 17), np.ones(17), w)
    inner = AveragingWindow("cube", 2.0, 1)
    once = restrict(ps, inner)
    twice = restrict(once, inner)
    assert np.array_equal(once.points, twice.points)
    assert np.array_equal(once.weights, twice.weights)


def test_restrict_dim_mismatch():
    w1 = AveragingWindow("cube", 1.0, 1)
    ps = WeightedPointSet(1, [0.0], [1.0], w1)
    with pytest.raises(ValueError):
        restrict(ps, AveragingWindow("cube", 1.0, 2))


def test_point_set_invariants():
    w = AveragingWindow("cube", 1.0, 1)
    with pytest.raises(ValueError):
        WeightedPointSet(1, [2.0], [1.0], w)  # outside
    with pytest.raises(ValueError):
        WeightedPointSet(1, [0.0], [np.inf], w)  # non-finite weight


def test_spectral_eval_examples():
    poisson1 = PoissonProcess(1.0, 1).model(5.0)
    assert spectral_eval(poisson1, [0.0], 1e-6) == (1.0, 1.0)
    poisson2 = PoissonProcess(2.0, 1).model(5.0)
    pp, ac = spectral_eval(poisson2, [0.7], 1e-6)
    assert pp == 0.0 and ac == 2.0
    comb = LatticeProcess(1.0, 1).model(5.0)
    pp, ac = spectral_eval(comb, [1.0], 1e-6)
    assert pp == pytest.approx(1.0) and ac == 0.0


def test_spectral_eval_singular_and_collision():
    model = analytic_renewal_model(Gamma(2.0))
    pp, ac = spectral_eval(model, [0.0], 1e-6)
    assert pp == 1.0 and ac is None  # 0 is singular for the diffuse part
    two = SpectralModel.from_finite_atoms(
        1, [[0.0], [1e-9]], [1.0, 1.0], lambda k: np.zeros(k.shape[0]))
    with pytest.raises(ValueError):
        spectral_eval(two, [0.0], 1e-6)


@pytest.mark.parametrize("model_fn", [
    lambda: PoissonProcess(1.5, 1).model(5.0),
    lambda: analytic_renewal_model(Gamma(2.0)),
    lambda: analytic_renewal_model(Gamma(0.7)),
])
def test_model_density_even_and_nonnegative(model_fn):
    model = model_fn()
    k = np.linspace(-4.0, 4.0, 81)
    k = k[np.abs(k) > 1e-9][:, None]
    vals = model.ac_density(k)
    assert np.all(vals >= 0)
    assert np.allclose(vals, vals[::-1], atol=1e-12)


def test_model_atoms_symmetric():
    model = analytic_renewal_model(Gamma(2.0))
    pos, wts = model.atoms(5.0)
    flipped = {(float(-p[0]), float(w)) for p, w in zip(pos, wts)}
    direct = {(float(p[0]), float(w)) for p, w in zip(pos, wts)}
    assert flipped == direct


def test_point_set_roundtrip():
    w = AveragingWindow("cube", 10.0, 2)
    rng = np.random.default_rng(7)
    pts = rng.uniform(-9.9, 9.9, size=(23, 2))
    wts = rng.standard_normal(23) + 1j * rng.standard_normal(23)
    ps = WeightedPointSet(2, pts, wts, w)
    buf = io.StringIO()
    write_point_set(ps, buf)
    buf.seek(0)
    back = read_point_set(buf, w)
    assert back.dim == 2 and back.count == 23
    assert np.array_equal(back.points, ps.points)
    assert np.array_equal(back.weights, ps.weights)


def test_point_set_read_autofits_window():
    text = "dim=1 count=2\n0.5 1 0\n-3 0 1\n"
    ps = read_point_set(io.StringIO(text))
    assert ps.count == 2
    assert ps.window.contains(ps.points).all()
    assert ps.weights[1] == 1j


def test_point_set_read_malformed():
    with pytest.raises(ValueError):
        read_point_set(io.StringIO("bogus\n"))
    with pytest.raises(ValueError):
        read_point_set(io.StringIO("dim=1 count=1\n0.5 1\n"))
