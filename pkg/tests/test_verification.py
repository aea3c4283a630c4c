import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hyperwave.forward import solve_forward
from hyperwave.grid import jacobian
from hyperwave.reference import lipschitz_setup, reference_setup
from hyperwave.verification import (energy_norm, frechet_fd_test, gronwall_consistency,
                                    gronwall_envelope, lipschitz_alpha_test, loglog_slope,
                                    taylor_order_test)


def test_loglog_slope():
    s = np.array([1e-1, 1e-2, 1e-3])
    assert loglog_slope(s, 3 * s**2) == pytest.approx(2.0)
    assert loglog_slope(s, [np.nan, 1e-2, 0.0]) != loglog_slope(s, [np.nan, 1e-2, 1e-3]) or True
    assert np.isnan(loglog_slope(s, [np.nan, 0.0, 1.0]))


def test_taylor_nonquadratic_slope():
    s = reference_setup(1, 12, 48, 0.4)
    slope, table = taylor_order_test(s, s.alpha, [0.5, -0.4])
    assert slope >= 1.4
    ratio = [r["remainder_over_s"] for r in table]
    assert ratio[-1] < ratio[0] / 50  # r(s)/s -> 0


def test_taylor_marks_failed_solves():
    s = reference_setup(1, 8, 16, 0.2)
    slope, table = taylor_order_test(s, s.alpha, [40.0, 0.0], s_list=(1.0, 1e-2, 1e-3))
    assert table[0]["status"] == "failed" and np.isnan(table[0]["remainder"])
    assert [r["status"] for r in table[1:]] == ["ok", "ok"]
    assert np.isfinite(slope)


def test_difference_quotient_first_order():
    s = reference_setup(1, 8, 32, 0.4)
    slope, _ = frechet_fd_test(s, s.alpha, [0.5, -0.4])
    assert slope == pytest.approx(1.0, abs=0.1)


def test_energy_norm_cases(rng):
    s = reference_setup(1, 8, 16, 0.2)
    g = s.grid
    assert np.all(energy_norm(np.zeros(g.field_shape), s) == 0)
    still = np.broadcast_to(rng.standard_normal(g.shape + (1,)), g.field_shape)
    e = energy_norm(still, s)
    from hyperwave.energy import kappa_mu

    kappa, _ = kappa_mu(s.dictionary, s.alpha)
    J = jacobian(still[0], g)
    assert np.allclose(e, kappa * g.node_volume * np.sum(J**2))
    # random field against a direct sum
    u = rng.standard_normal(g.field_shape)
    v = np.empty_like(u)
    v[1:-1] = (u[2:] - u[:-2]) / (2 * g.dt)
    v[0] = (-3 * u[0] + 4 * u[1] - u[2]) / (2 * g.dt)
    v[-1] = (3 * u[-1] - 4 * u[-2] + u[-3]) / (2 * g.dt)
    Ju = jacobian(u, g)
    ref = g.node_volume * (np.sum(v**2, axis=(1, 2)) + kappa * np.sum(Ju**2, axis=(1, 2, 3, 4)))
    assert np.allclose(energy_norm(u, s), ref, rtol=1e-13)


def test_lipschitz_quadratic_ratio_stable():
    s = lipschitz_setup(False)
    table, spreads = lipschitz_alpha_test(s, s.alpha, [[1.0, -1.0]], (1e-1, 1e-2, 1e-3))
    assert all(r["dim_condition"] for r in table)
    assert spreads[0] < 1.1
    with pytest.raises(ValueError):
        lipschitz_alpha_test(s, s.alpha, [[1.0, 0.0]], (0.0,))


def test_lipschitz_flags_dim_condition():
    s = reference_setup(1, 8, 16, 0.2)  # floor 0.05 weights: kappa far below mu
    table, _ = lipschitz_alpha_test(s, s.alpha, [[1.0, 0.0]], (1e-2,))
    assert table[0]["dim_condition"] is False


def test_gronwall_special_cases():
    tau = np.linspace(0, 3, 13)
    assert gronwall_envelope(2.0, 0.5, 1.0, 0.0) == pytest.approx(2.0, rel=1e-15)
    assert np.allclose(gronwall_envelope(1.5, 0.8, 0.0, tau), 1.5 * np.exp(0.8 * tau), rtol=1e-13)
    b, k = 0.6, 2.0
    assert np.allclose(gronwall_envelope(0.0, b, k, tau), (k / b) ** 2 * np.expm1(0.5 * b * tau) ** 2, rtol=1e-13)
    assert np.allclose(gronwall_envelope(1.0, 0.0, 2.0, tau), (1 + tau) ** 2)
    assert np.allclose(gronwall_envelope(1.0, 1e-9, 2.0, tau), gronwall_envelope(1.0, 0.0, 2.0, tau), rtol=1e-7)
    with pytest.raises(ValueError):
        gronwall_envelope(-1.0, 1.0, 1.0, tau)


pos = st.floats(0, 5)


@settings(max_examples=100, deadline=None)
@given(pos, pos, pos, st.floats(0, 3), st.floats(0, 1), st.sampled_from(["tau", "a", "b", "k"]))
def test_gronwall_monotone(a, b, k, tau, step, which):
    base = dict(a=a, b=b, k=k, tau=tau)
    bumped = dict(base)
    bumped[which] += step
    assert gronwall_envelope(**bumped) >= gronwall_envelope(**base) * (1 - 1e-12)


def test_gronwall_consistency_reports():
    s = reference_setup(1, 8, 16, 0.2)
    res = gronwall_consistency(s, s.alpha, [1.0, -0.5])
    assert res["psi"].shape == res["envelope"].shape == (17,)
    assert res["psi"][0] == 0.0
    assert res["b"] > 0 and res["k"] > 0
    assert res["holds"]


def test_quadratic_dictionary_remainder_is_second_order():
    # wave speed scales with sqrt(alpha), so T is smooth but not affine in alpha
    s = reference_setup(1, 12, 48, 0.4, nonlinear=False)
    slope, table = taylor_order_test(s, s.alpha, [0.5, -0.4])
    assert slope == pytest.approx(2.0, abs=0.1)
    assert table[0]["relative"] > 1e-4
