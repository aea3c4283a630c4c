import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hyperwave.energy import (AdmissibilityThresholds, EnergyDictionary, EnergyEntry, QuadraticForm,
                              SaturatingForm, SpatialWeight, as_alpha, check_admissible,
                              check_dim_condition, combine, eval_energy, eval_hessian, eval_stress,
                              kappa_mu, partition_weights, stability_constants)

FORMS = [QuadraticForm(1.0, 0.2, 0.3), SaturatingForm(1.0, 0.2, 0.3, eps=0.5), SaturatingForm(0.7, eps=2.0)]


def _fd_gradient(fn, Y, h=1e-6):
    G = np.zeros_like(Y)
    for idx in np.ndindex(Y.shape):
        E = np.zeros_like(Y)
        E[idx] = h
        G[idx] = (fn(Y + E) - fn(Y - E)) / (2 * h)
    return G


@pytest.mark.parametrize("form", FORMS, ids=lambda f: f.family)
@pytest.mark.parametrize("d", [1, 2, 3])
def test_gradient_matches_central_differences(form, d, rng):
    Y = rng.standard_normal((d, d))
    assert np.allclose(form.gradient(Y), _fd_gradient(form.energy, Y), rtol=1e-7, atol=1e-8)


@pytest.mark.parametrize("form", FORMS, ids=lambda f: f.family)
@pytest.mark.parametrize("d", [1, 2])
def test_hessian_matches_differences_of_gradient(form, d, rng):
    Y = rng.standard_normal((d, d))
    H = rng.standard_normal((d, d))
    h = 1e-6
    fd = (form.gradient(Y + h * H) - form.gradient(Y - h * H)) / (2 * h)
    assert np.allclose(form.hessian_apply(Y, H), fd, rtol=1e-7, atol=1e-8)
    A = form.hessian(Y)
    assert np.allclose(np.einsum("ijkl,kl->ij", A, H), form.hessian_apply(Y, H), atol=1e-13)


@pytest.mark.parametrize("form", FORMS, ids=lambda f: f.family)
def test_third_derivative_matches_differences_of_hessian(form, rng):
    Y = rng.standard_normal((2, 2))
    H1, H2 = rng.standard_normal((2, 2, 2))
    h = 1e-6
    fd = (form.hessian_apply(Y + h * H2, H1) - form.hessian_apply(Y - h * H2, H1)) / (2 * h)
    assert np.allclose(form.third(Y, H1, H2), fd, rtol=1e-6, atol=1e-8)
    assert np.allclose(form.third(Y, H1, H2), form.third(Y, H2, H1), atol=1e-13)


def test_quadratic_third_derivative_vanishes(rng):
    Y, H1, H2 = rng.standard_normal((3, 2, 2))
    assert np.all(QuadraticForm(1.0, 0.5, 0.5).third(Y, H1, H2) == 0)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 3), st.floats(0.1, 3), st.floats(0, 2), st.floats(0, 2), st.floats(0.01, 3),
       st.integers(0, 2**31))
def test_hessian_major_symmetry(d, a, b, c, eps, seed):
    Y = np.random.default_rng(seed).standard_normal((d, d))
    A = SaturatingForm(a, b, c, eps=eps).hessian(Y).reshape(d * d, d * d)
    assert np.abs(A - A.T).max() <= 1e-12 * max(1.0, np.abs(A).max())


def test_quadratic_bounds_are_closed_form():
    e = EnergyEntry(QuadraticForm(1.0, 0.0, 0.0), SpatialWeight.constant(1), 1)
    # g = Y^2: Hessian 2, energy ratio 1
    assert e.bounds.kappa == pytest.approx((1.0, 2.0))
    assert e.bounds.mu[:4] == pytest.approx((1.0, 2.0, 0.0, 0.0))
    assert e.bounds.mu[4:] == (0.0,) * 4


def test_weighted_bounds_scale_with_floor():
    w = SpatialWeight((0.2,), (0.4,), 0.1, 0.25)
    e = EnergyEntry(QuadraticForm(1.0), w, 1)
    assert e.bounds.kappa[1] == pytest.approx(0.5)
    assert e.bounds.mu[1] == pytest.approx(2.0)
    assert e.bounds.mu[5] == pytest.approx(7.5 * 2.0)


@pytest.mark.parametrize("d", [1, 2])
def test_sampled_bounds_hold_on_fresh_samples(d, rng):
    e = EnergyEntry(SaturatingForm(1.0, 0.2, 0.3, eps=0.5), partition_weights(2, d)[0], d)
    Y = rng.standard_normal((300, d, d))
    Y *= (4 * rng.random(300) / np.linalg.norm(Y, axis=(1, 2)))[:, None, None]
    x = rng.random((300, d))
    A = eval_hessian(e, x, Y).reshape(300, d * d, d * d)
    eig = np.linalg.eigvalsh(A)
    assert eig.min() >= e.bounds.kappa[1]
    assert eig.max() <= e.bounds.mu[1]
    C = eval_energy(e, x, Y)
    y2 = np.einsum("nij,nij->n", Y, Y)
    assert np.all(C >= e.bounds.kappa[0] * y2)
    assert np.all(C <= e.bounds.mu[0] * y2)


def test_saturating_hessian_range_1d():
    # scalar case: 2a + eps (2 psi' + 4 s psi''), between 2a and 2a + 2.25 eps
    f = SaturatingForm(1.0, eps=1.0)
    y = np.linspace(-4, 4, 2001)[:, None, None]
    vals = f.hessian(y)[:, 0, 0, 0, 0]
    assert vals.min() == pytest.approx(2.0, abs=1e-12)
    assert vals.max() == pytest.approx(2.0 + 2.25, rel=1e-5)


def test_weights():
    w = SpatialWeight((0.3,), (0.5,), 0.1, 0.2)
    x = np.array([[0.0], [0.25], [0.4], [0.55], [0.9]])
    assert np.allclose(w(x), [0.2, 0.2 + 0.8 * 0.5, 1.0, 0.2 + 0.8 * 0.5, 0.2])
    assert w.max_gradient == pytest.approx(8.0)
    ws = partition_weights(3, 2, axis=1)
    assert len(ws) == 3 and ws[1].lower == (0.0, 1 / 3 + 0.02)
    with pytest.raises(ValueError):
        SpatialWeight(floor=0.0)


def test_non_finite_strain_rejected():
    e = EnergyEntry(QuadraticForm(), SpatialWeight.constant(1), 1)
    with pytest.raises(ValueError):
        eval_stress(e, np.zeros((1, 1)), np.array([[[np.nan]]]))


def test_combined_energy_is_linear_in_alpha(rng):
    D = EnergyDictionary([EnergyEntry(f, w, 2) for f, w in zip(FORMS, partition_weights(3, 2))])
    x = rng.random((5, 2))
    Y = rng.standard_normal((5, 2, 2))
    a, b = np.array([1.0, 0.5, 2.0]), np.array([0.3, 1.0, 0.1])
    lhs = combine(D, a + b).stress(x, Y)
    rhs = combine(D, a).stress(x, Y) + combine(D, b).stress(x, Y)
    assert np.allclose(lhs, rhs, atol=1e-13)


def test_dictionary_validation():
    with pytest.raises(ValueError):
        EnergyDictionary([])
    with pytest.raises(ValueError):
        EnergyDictionary([EnergyEntry(QuadraticForm(), SpatialWeight.constant(1), 1),
                          EnergyEntry(QuadraticForm(), SpatialWeight.constant(2), 2)])
    with pytest.raises(ValueError):
        as_alpha([1.0, 2.0], 3)
    with pytest.raises(ValueError):
        QuadraticForm(a=0.0)


def _dict_1d():
    w = SpatialWeight.constant(1)
    return EnergyDictionary([EnergyEntry(QuadraticForm(1.0), w, 1), EnergyEntry(SaturatingForm(0.5, eps=0.3), w, 1)])


@settings(max_examples=60, deadline=None)
@given(st.floats(0.01, 10), st.floats(0.01, 10), st.floats(1e-3, 1e3))
def test_dim_condition_scaling_invariance(a1, a2, c):
    D = _dict_1d()
    alpha = np.array([a1, a2])
    assert check_dim_condition(D, alpha) == check_dim_condition(D, c * alpha)


def test_dim_condition_values():
    D = _dict_1d()
    k, m = kappa_mu(D, [1.0, 0.0])
    assert k == m
    assert check_dim_condition(D, [1.0, 0.0])
    assert not check_dim_condition(D, [0.0, 1.0])


def test_admissibility_names_violations():
    D = _dict_1d()
    thr = AdmissibilityThresholds(kappa=(0.5, 1.0), mu=(2.5,) + (100.0,) * 6)
    ok, v = check_admissible(D, [1.0, 0.5], thr)
    assert not ok and v == ["mu[1]"]
    ok, v = check_admissible(D, [-1.0, 0.1], thr)
    assert "positivity(1)" in v and "kappa[1]" in v and "kappa[2]" in v
    assert check_admissible(D, [0.8, 0.2], thr)[0]


def test_stability_constants():
    D = _dict_1d()
    c_bar, c_hat, zeta, eta = stability_constants(D, [1.0, 1.0])
    assert zeta == 0.0  # the quadratic entry has no third derivative
    assert eta > 0 and c_bar > 0 and c_hat > 0
    with pytest.raises(ValueError):
        stability_constants(D, [1.0, 1.0], eps=1.5)


def test_stability_ratio_between_extremes(rng):
    D = EnergyDictionary([EnergyEntry(f, w, 2) for f, w in zip(FORMS, partition_weights(3, 2))])
    _, _, zeta, eta = stability_constants(D, np.ones(3))
    for alpha in rng.uniform(0.01, 10, (1000, 3)):
        c_bar = stability_constants(D, alpha)[0]
        assert zeta <= c_bar * (1 + 1e-12) and c_bar <= eta * (1 + 1e-12)
    one = EnergyDictionary([D[1]])
    assert stability_constants(one, [0.3])[0] == pytest.approx(stability_constants(one, [7.0])[0], rel=1e-14)
