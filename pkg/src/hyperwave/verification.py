"""Executable checks of the derivative, adjoint and stability properties.

Every routine returns plain numbers and tables (lists of dicts) so the
results can be asserted on in tests or written out by :mod:`hyperwave.io`.
"""

import numpy as np

from .adjoint import apply_adjoint_continuous, apply_adjoint_discrete
from .energy import as_alpha, check_dim_condition, kappa_mu
from .errors import SolverError
from .forward import solve_forward, velocity
from .grid import inner_product_L2, jacobian, quadrature_inner
from .inversion import misfit, misfit_gradient
from .sensitivity import build_linearization, solve_frechet, v_norm

__all__ = [
    "DEFAULT_S_LIST",
    "loglog_slope",
    "taylor_order_test",
    "frechet_fd_test",
    "adjoint_certificate",
    "adjoint_refinement_study",
    "lipschitz_alpha_test",
    "gronwall_envelope",
    "gronwall_consistency",
    "energy_norm",
    "misfit_gradient_check",
]

DEFAULT_S_LIST = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)


def loglog_slope(x, y):
    """Least-squares slope of ``log y`` against ``log x`` over positive finite pairs."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = np.isfinite(y) & (y > 0) & (x > 0)
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def _forward_or_none(setup, alpha):
    try:
        return solve_forward(setup.with_alpha(alpha))[0]
    except SolverError:
        return None


def taylor_order_test(setup, alpha, h, s_list=DEFAULT_S_LIST):
    """Taylor remainder ``r(s) = ||T(alpha + s h) - T(alpha) - s T'(alpha) h||``.

    Norm is ``L2(0, T; H^1)``.  Returns ``(slope, table)``; failed solves
    appear in the table with ``status="failed"`` and are left out of the fit.
    """
    alpha = as_alpha(alpha, len(setup.dictionary))
    h = np.asarray(h, dtype=float)
    u, _ = solve_forward(setup.with_alpha(alpha))
    v = solve_frechet(setup, alpha, h, u)
    unorm = v_norm(u, setup.grid)
    table = []
    for s in s_list:
        us = _forward_or_none(setup, alpha + s * h)
        if us is None:
            table.append({"s": s, "remainder": np.nan, "relative": np.nan,
                          "remainder_over_s": np.nan, "status": "failed"})
            continue
        r = v_norm(us - u - s * v, setup.grid)
        table.append({"s": s, "remainder": r, "relative": r / unorm,
                      "remainder_over_s": r / s, "status": "ok"})
    slope = loglog_slope([row["s"] for row in table], [row["remainder"] for row in table])
    return slope, table


def frechet_fd_test(setup, alpha, h, s_list=(1e-1, 1e-2, 1e-3, 1e-4)):
    """Error of the one-sided difference quotient against ``T'(alpha) h``.

    Returns ``(slope, table)`` with ``error(s) = ||(T(alpha+sh) - T(alpha))/s - v||``.
    """
    alpha = as_alpha(alpha, len(setup.dictionary))
    h = np.asarray(h, dtype=float)
    u, _ = solve_forward(setup.with_alpha(alpha))
    v = solve_frechet(setup, alpha, h, u)
    vn = v_norm(v, setup.grid)
    table = []
    for s in s_list:
        us, _ = solve_forward(setup.with_alpha(alpha + s * h))
        err = v_norm((us - u) / s - v, setup.grid)
        table.append({"s": s, "error": err, "relative": err / vn})
    return loglog_slope(s_list, [r["error"] for r in table]), table


def adjoint_certificate(setup, alpha, trials=20, method="discrete", seed=0, u=None):
    """Max over random ``(h, w)`` of the normalized dot-product mismatch

    ``|<T'h, w> - <h, T'^* w>| / (||T'h|| ||w|| + ||h|| ||T'^* w||)``.
    """
    alpha = as_alpha(alpha, len(setup.dictionary))
    if u is None:
        u, _ = solve_forward(setup.with_alpha(alpha))
    lin = build_linearization(setup, alpha, u)
    grid = setup.grid
    rng = np.random.default_rng(seed)
    N = len(setup.dictionary)
    worst = 0.0
    for _ in range(trials):
        h = rng.standard_normal(N)
        w = rng.standard_normal(grid.field_shape)
        v = solve_frechet(setup, alpha, h, u, lin)
        if method == "discrete":
            g = apply_adjoint_discrete(setup, alpha, u, w, lin)
        else:
            g = apply_adjoint_continuous(setup, alpha, u, w, lin)
        lhs = inner_product_L2(v, w, grid, "spacetime")
        rhs = float(h @ g)
        scale = (np.sqrt(inner_product_L2(v, v, grid, "spacetime") * inner_product_L2(w, w, grid, "spacetime"))
                 + np.linalg.norm(h) * np.linalg.norm(g))
        if scale > 0:
            worst = max(worst, abs(lhs - rhs) / scale)
    return worst


def adjoint_refinement_study(setup_factory, weight_fn, ns=(8, 16, 32)):
    """Relative gap between continuous and discrete adjoint gradients under refinement.

    ``setup_factory(n)`` builds a problem; ``weight_fn(t, x)`` evaluates the
    smooth weight ``w`` on the time levels (``t`` has shape ``(m+1, 1, ..)``).
    Returns ``(slope, table)`` with the slope taken against ``dx``.
    """
    table = []
    for n in ns:
        setup = setup_factory(n)
        grid = setup.grid
        u, _ = solve_forward(setup)
        lin = build_linearization(setup, setup.alpha, u)
        t = grid.times.reshape((-1,) + (1,) * (grid.d + 1))
        w = np.broadcast_to(weight_fn(t, grid.nodes()[None]), grid.field_shape)
        gd = apply_adjoint_discrete(setup, setup.alpha, u, w, lin)
        gc = apply_adjoint_continuous(setup, setup.alpha, u, w, lin)
        rel = float(np.linalg.norm(gc - gd) / np.linalg.norm(gd))
        table.append({"n": n, "dx": grid.dx, "m": grid.m, "relative_difference": rel,
                      "g_discrete": gd.tolist(), "g_continuous": gc.tolist()})
    slope = loglog_slope([r["dx"] for r in table], [r["relative_difference"] for r in table])
    return slope, table


def energy_norm(u_like, setup, alpha=None, initial_velocity=None):
    """Per-level ``rho ||du/dt||^2 + kappa(alpha) ||J u||^2``.

    The velocity is differenced from the levels; pass ``initial_velocity``
    when it is known exactly (zero for sensitivities and differences of
    solutions sharing initial data).
    """
    grid = setup.grid
    alpha = setup.alpha if alpha is None else alpha
    kappa, _ = kappa_mu(setup.dictionary, alpha)
    u_like = grid.check_field(u_like, "field")
    v = velocity(u_like, grid, initial_velocity)
    kin = grid.node_volume * np.sum(setup.rho * v**2, axis=tuple(range(1, u_like.ndim)))
    Ju = jacobian(u_like, grid)
    return kin + kappa * quadrature_inner(Ju, Ju, grid)


def lipschitz_alpha_test(setup, alpha, directions, eps_list=(1e-1, 1e-2, 1e-3, 1e-4)):
    """Ratios ``sup_t energy_norm(u - u_bar)^(1/2) / ||alpha - alpha_bar||_inf``.

    Returns ``(table, spreads)``: one row per ``(direction, eps)`` and the
    max/min ratio per direction.  Rows carry ``dim_condition``, which is
    ``False`` when ``alpha`` or ``alpha_bar`` violates the dimension
    condition; the stability estimate only covers rows where it holds.
    """
    alpha = as_alpha(alpha, len(setup.dictionary))
    u, _ = solve_forward(setup.with_alpha(alpha))
    dim_ok = check_dim_condition(setup.dictionary, alpha)
    table = []
    spreads = []
    for i, h in enumerate(np.atleast_2d(directions)):
        ratios = []
        for eps in eps_list:
            if eps <= 0:
                raise ValueError("eps must be positive")
            a_bar = alpha + eps * np.asarray(h, dtype=float)
            ok = dim_ok and check_dim_condition(setup.dictionary, a_bar)
            ub, _ = solve_forward(setup.with_alpha(a_bar))
            num = np.sqrt(energy_norm(u - ub, setup, alpha, np.zeros_like(setup.u0)).max())
            ratio = float(num / np.abs(a_bar - alpha).max())
            table.append({"direction": i, "eps": eps, "ratio": ratio, "dim_condition": ok})
            ratios.append(ratio)
        spreads.append(max(ratios) / min(ratios) if min(ratios) > 0 else np.inf)
    return table, spreads


def gronwall_envelope(a, b, k, tau):
    """``[exp(b tau / 2) sqrt(a) + k / b (exp(b tau / 2) - 1)]^2``; ``b = 0`` uses
    the limit ``(sqrt(a) + k tau / 2)^2``."""
    if a < 0 or b < 0 or k < 0:
        raise ValueError("a, b, k must be non-negative")
    tau = np.asarray(tau, dtype=float)
    x = 0.5 * b * tau
    with np.errstate(over="ignore", invalid="ignore"):
        # k/b (e^x - 1) written as (k tau / 2) (e^x - 1)/x, stable for tiny b
        growth = np.where(x > 0, np.expm1(x) / np.where(x > 0, x, 1.0), 1.0)
        first = np.sqrt(a) * np.exp(x) if a > 0 else 0.0
        out = (first + 0.5 * k * tau * growth) ** 2
    return out if out.ndim else float(out)


def gronwall_consistency(setup, alpha, h):
    """Compare ``psi(tau) = kappa ||J v||^2 + rho ||dv/dt||^2`` with the envelope
    built from measured field bounds (reported, not gated).

    ``b`` and ``k`` follow the continuity proof for ``T'(alpha)`` with
    ``M0``, ``M1`` taken from the forward solve's surrogates and unit volume.
    """
    from .energy import stability_constants

    alpha = as_alpha(alpha, len(setup.dictionary))
    h = np.asarray(h, dtype=float)
    s = setup.with_alpha(alpha)
    u, report = solve_forward(s)
    v = solve_frechet(s, alpha, h, u)
    psi = energy_norm(v, s, alpha, np.zeros_like(s.u0))
    kappa, mu = kappa_mu(setup.dictionary, alpha)
    _, _, _, eta = stability_constants(setup.dictionary, alpha)
    M0, M1 = report.M["M0"], report.M["M1"]
    rho_min = setup.material.rho_min
    S1 = rho_min**-0.5 * sum(np.sqrt(3.0) * e.bounds.mu[4] + 9 * M0 * e.bounds.mu[1]
                             for e in setup.dictionary)
    b = 729 * mu / (8 * kappa) * eta * M1
    k = 6 * np.abs(h).max() * S1
    env = gronwall_envelope(0.0, b, k, setup.grid.times)
    return {"psi": psi, "envelope": env, "b": b, "k": k,
            "holds": bool(np.all(psi <= env * (1 + 1e-12)))}


def misfit_gradient_check(setup, alpha, u_meas, steps=(1e-3, 1e-4, 1e-5), method="discrete"):
    """Adjoint gradient of the misfit against central differences.

    Returns ``(best_relative_error, table)``; the error per step is
    ``||g_fd - g|| / ||g||``.
    """
    alpha = as_alpha(alpha, len(setup.dictionary))
    g = misfit_gradient(alpha, u_meas, setup, method=method)
    table = []
    for step in steps:
        fd = np.empty_like(g)
        for K in range(len(alpha)):
            e = np.zeros_like(alpha)
            e[K] = step
            fd[K] = (misfit(alpha + e, u_meas, setup) - misfit(alpha - e, u_meas, setup)) / (2 * step)
        table.append({"step": step, "relative_error": float(np.linalg.norm(fd - g) / np.linalg.norm(g)),
                      "fd": fd.tolist()})
    return min(r["relative_error"] for r in table), table
