"""Desk-scale acceptance criteria.

Each ``criterion_*`` function runs one check and returns a
:class:`CriterionResult` holding every measured number, the gate it is
compared against and the verdict.  :func:`run_acceptance` runs them all.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .energy import check_dim_condition, eval_energy, eval_hessian
from .forward import energy_budget, solve_forward
from .inversion import InversionConfig, add_noise, invert
from .reference import (ALPHA_START, ALPHA_TRUE, lipschitz_setup, reference_setup,
                        standing_wave_exact, standing_wave_setup, twin_setup)
from .verification import (adjoint_certificate, adjoint_refinement_study, frechet_fd_test,
                           gronwall_envelope, lipschitz_alpha_test, loglog_slope,
                           misfit_gradient_check, taylor_order_test)

__all__ = ["CriterionResult", "CRITERIA", "run_acceptance", "shipped_dictionaries"]


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    gates: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self):
        verdict = "PASS" if self.passed else "FAIL"
        summary = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        return f"[{verdict}] criterion {self.number} ({self.name}): {summary}"

    def to_dict(self):
        return {"number": self.number, "name": self.name, "passed": self.passed,
                "measured": self.measured, "gates": self.gates, "seconds": self.seconds}


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.3e}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _timed(fn):
    def wrapper(*args, **kw):
        t0 = time.perf_counter()
        res = fn(*args, **kw)
        res.seconds = time.perf_counter() - t0
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


TAYLOR_DIRECTION = np.array([0.5, -0.4])


@_timed
def criterion_adjoint_exactness(trials=20):
    """Discrete dot-product mismatch on d=1 (n=8, m=16) and d=2 (n=6, m=16)."""
    gate = 1e-10
    mism = {}
    for d, n in ((1, 8), (2, 6)):
        s = reference_setup(d, n, 16, 0.2)
        mism[f"mismatch_d{d}"] = adjoint_certificate(s, s.alpha, trials, seed=d)
    return CriterionResult(1, "adjoint exactness", all(v <= gate for v in mism.values()),
                           mism, {"max_mismatch": gate})


def _smooth_weight(t, x):
    return np.sin(2 * np.pi * x) * np.cos(3 * t)


@_timed
def criterion_adjoint_consistency(ns=(8, 16, 32)):
    """Continuous-route gradient against the discrete transpose under refinement."""
    slope, table = adjoint_refinement_study(
        lambda n: reference_setup(1, n, 4 * (n + 1), 0.5), _smooth_weight, ns)
    diffs = [r["relative_difference"] for r in table]
    monotone = all(b < a for a, b in zip(diffs, diffs[1:]))
    return CriterionResult(2, "adjoint consistency", monotone and slope >= 0.9,
                           {"relative_difference": diffs, "slope": slope, "monotone": monotone},
                           {"min_slope": 0.9}, {"refinement": table})


@_timed
def criterion_frechet_order():
    """Taylor remainder slope (saturating) and remainder size (quadratic)."""
    s_nl = reference_setup(nonlinear=True)
    slope, tab_nl = taylor_order_test(s_nl, s_nl.alpha, TAYLOR_DIRECTION)
    s_q = reference_setup(nonlinear=False)
    slope_q, tab_q = taylor_order_test(s_q, s_q.alpha, TAYLOR_DIRECTION)
    worst_q = max(r["relative"] for r in tab_q)
    passed = slope >= 1.4 and worst_q <= 1e-9
    return CriterionResult(3, "Frechet order", passed,
                           {"slope_nonquadratic": slope, "max_relative_remainder_quadratic": worst_q,
                            "slope_quadratic": slope_q},
                           {"min_slope": 1.4, "max_relative_remainder_quadratic": 1e-9},
                           {"taylor_nonquadratic": tab_nl, "taylor_quadratic": tab_q})


@_timed
def criterion_derivative_correctness():
    """Two-solve difference quotients and adjoint misfit gradients."""
    measured, tables = {}, {}
    ok = True
    for label, nonlinear, gate in (("quadratic", False, 1e-6), ("nonquadratic", True, 1e-4)):
        s = reference_setup(nonlinear=nonlinear)
        slope, tab = frechet_fd_test(s, s.alpha, TAYLOR_DIRECTION)
        u_meas, _ = solve_forward(s.with_alpha(s.alpha + np.array([0.1, -0.1])))
        err, gtab = misfit_gradient_check(s, s.alpha, u_meas)
        measured[f"fd_slope_{label}"] = slope
        measured[f"gradient_error_{label}"] = err
        tables[f"fd_{label}"] = tab
        tables[f"gradient_{label}"] = gtab
        ok &= slope >= 0.9 and err <= gate
    return CriterionResult(4, "derivative correctness", bool(ok), measured,
                           {"min_fd_slope": 0.9, "gradient_quadratic": 1e-6, "gradient_nonquadratic": 1e-4},
                           tables)


@_timed
def criterion_forward_convergence(cells=(16, 32, 64)):
    """Standing wave error order and energy drift at CFL 0.5."""
    rows = []
    for nc in cells:
        s = standing_wave_setup(nc)
        u, rep = solve_forward(s)
        err = float(np.abs(u - standing_wave_exact(s.grid)).max())
        E = energy_budget(u, s)
        drift = float(np.abs(E - E[0]).max() / E[0])
        rows.append({"cells": nc, "m": s.grid.m, "cfl": rep.cfl, "max_error": err, "energy_drift": drift})
    order = -loglog_slope([r["cells"] for r in rows], [r["max_error"] for r in rows])
    drift = max(r["energy_drift"] for r in rows)
    return CriterionResult(5, "forward convergence", order >= 1.9 and drift <= 0.01,
                           {"order": order, "max_energy_drift": drift},
                           {"min_order": 1.9, "max_energy_drift": 0.01}, {"standing_wave": rows})


@_timed
def criterion_stability_in_alpha():
    """Energy-norm Lipschitz ratios across eps in {1e-1, ..., 1e-4}."""
    directions = np.array([[1.0, -1.0], [0.3, 1.0]])
    measured, tables = {}, {}
    ok = True
    for label, nonlinear, gate in (("quadratic", False, 2.0), ("nonquadratic", True, 5.0)):
        s = lipschitz_setup(nonlinear)
        tab, spreads = lipschitz_alpha_test(s, s.alpha, directions)
        measured[f"spread_{label}"] = float(max(spreads))
        measured[f"dim_condition_{label}"] = all(r["dim_condition"] for r in tab)
        tables[f"lipschitz_{label}"] = tab
        ok &= measured[f"dim_condition_{label}"] and max(spreads) <= gate
    return CriterionResult(6, "stability in alpha", bool(ok), measured,
                           {"spread_quadratic": 2.0, "spread_nonquadratic": 5.0}, tables)


@_timed
def criterion_twin_experiment(seed=1):
    """Noiseless and 1 % noise recovery of ``(1.0, 1.5, 0.8)``."""
    s = twin_setup()
    u_true, _ = solve_forward(s)
    scale = np.abs(ALPHA_TRUE).max()
    a0, tr0 = invert(u_true, ALPHA_START, s, InversionConfig(max_iter=500))
    err0 = float(np.abs(a0 - ALPHA_TRUE).max() / scale)
    u_noisy, delta = add_noise(u_true, 0.01, s.grid, np.random.default_rng(seed))
    a1, tr1 = invert(u_noisy, ALPHA_START, s, InversionConfig(max_iter=500, noise_level=delta, tau_disc=1.5))
    err1 = float(np.abs(a1 - ALPHA_TRUE).max() / scale)
    passed = (err0 <= 1e-2 and len(tr0) <= 501 and tr1.status == "discrepancy" and err1 <= 0.1)
    return CriterionResult(7, "twin experiment", passed,
                           {"error_noiseless": err0, "iterations_noiseless": len(tr0) - 1,
                            "error_noisy": err1, "iterations_noisy": len(tr1) - 1,
                            "status_noisy": tr1.status},
                           {"error_noiseless": 1e-2, "max_iterations": 500, "error_noisy": 0.1},
                           {"trace_noiseless": tr0.to_dict(), "trace_noisy": tr1.to_dict()})


def shipped_dictionaries():
    """Every dictionary used by the reference problems."""
    return {
        "reference_d1_saturating": reference_setup(1, 8, 16, 0.2, True).dictionary,
        "reference_d1_quadratic": reference_setup(1, 8, 16, 0.2, False).dictionary,
        "reference_d2_saturating": reference_setup(2, 6, 16, 0.2, True).dictionary,
        "reference_d2_quadratic": reference_setup(2, 6, 16, 0.2, False).dictionary,
        "lipschitz_saturating": lipschitz_setup(True).dictionary,
        "lipschitz_quadratic": lipschitz_setup(False).dictionary,
        "twin": twin_setup().dictionary,
    }


def _sample_bound_violations(dictionary, rng, samples=200):
    """Worst relative violations of the energy and Hessian bounds at random ``(x, Y)``."""
    d = dictionary.d
    worst = {"symmetry": 0.0, "energy": 0.0, "hessian": 0.0}
    for entry in dictionary:
        b = entry.bounds
        x = rng.random((samples, d))
        Y = rng.standard_normal((samples, d, d))
        r = min(b.strain_radius, 4.0) * rng.random(samples) ** (1 / (d * d))
        Y *= (r / np.linalg.norm(Y, axis=(1, 2)))[:, None, None]
        A = eval_hessian(entry, x, Y).reshape(samples, d * d, d * d)
        scale = np.abs(A).max()
        worst["symmetry"] = max(worst["symmetry"], float(np.abs(A - A.transpose(0, 2, 1)).max() / scale))
        eig = np.linalg.eigvalsh(0.5 * (A + A.transpose(0, 2, 1)))
        hv = max(np.max(b.kappa[1] - eig[:, 0]), np.max(eig[:, -1] - b.mu[1]), 0.0)
        worst["hessian"] = max(worst["hessian"], float(hv / b.mu[1]))
        y2 = np.einsum("nij,nij->n", Y, Y)
        C = eval_energy(entry, x, Y)
        ev = max(np.max(b.kappa[0] * y2 - C), np.max(C - b.mu[0] * y2), 0.0)
        worst["energy"] = max(worst["energy"], float(ev / (b.mu[0] * y2.max())))
    return worst


@_timed
def criterion_structural(seed=0):
    """Hessian symmetry, sampled bounds, dimension-condition scaling, envelope cases."""
    rng = np.random.default_rng(seed)
    sym = energy = hess = 0.0
    scaling_ok = True
    for dictionary in shipped_dictionaries().values():
        w = _sample_bound_violations(dictionary, rng)
        sym, energy, hess = max(sym, w["symmetry"]), max(energy, w["energy"]), max(hess, w["hessian"])
        for _ in range(20):
            alpha = rng.uniform(0.1, 3.0, len(dictionary))
            base = check_dim_condition(dictionary, alpha)
            scaling_ok &= all(check_dim_condition(dictionary, c * alpha) == base
                              for c in (0.5, 2.0, 4.0, 0.125))
    tau = np.linspace(0.0, 2.0, 21)
    env_err = 0.0
    for a, b, k in ((1.3, 0.7, 0.4), (0.2, 2.5, 1.1), (2.0, 0.0, 0.3)):
        env_err = max(env_err, abs(gronwall_envelope(a, b, k, 0.0) - a) / a)
        ref = a * np.exp(b * tau)
        env_err = max(env_err, float(np.max(np.abs(gronwall_envelope(a, b, 0.0, tau) - ref) / ref)))
    passed = sym <= 1e-12 and energy <= 1e-12 and hess <= 1e-12 and scaling_ok and env_err <= 1e-12
    return CriterionResult(8, "structural checks", bool(passed),
                           {"hessian_asymmetry": sym, "energy_bound_violation": energy,
                            "hessian_bound_violation": hess, "dim_scaling_invariant": bool(scaling_ok),
                            "envelope_special_case_error": env_err},
                           {"hessian_asymmetry": 1e-12, "bound_violation": 1e-12, "envelope": 1e-12})


CRITERIA = {
    1: criterion_adjoint_exactness,
    2: criterion_adjoint_consistency,
    3: criterion_frechet_order,
    4: criterion_derivative_correctness,
    5: criterion_forward_convergence,
    6: criterion_stability_in_alpha,
    7: criterion_twin_experiment,
    8: criterion_structural,
}


def run_acceptance(numbers=None, echo=print):
    """Run the selected criteria (all by default), echoing one line each."""
    results = []
    for num in numbers or sorted(CRITERIA):
        res = CRITERIA[num]()
        if echo is not None:
            echo(res.line())
        results.append(res)
    return results
