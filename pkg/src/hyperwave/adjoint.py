"""Adjoint ``T'(alpha)^* w`` of the Frechet derivative, two ways.

``apply_adjoint_discrete``
    exact transpose of the discrete map ``h -> v`` under the space-time
    inner product, obtained by running the transposed leapfrog recurrence
    backward in time.  Satisfies the dot-product identity to round-off.
``apply_adjoint_continuous``
    solves the backward problem

        rho p'' - div(A(t) : J p) = w,   p(T) = p'(T) = 0,

    and returns ``g_K = -int_0^T int_Omega <<grad_Y C_K(x, J u), J p>> dx dt``.

Boundary closure of the backward problem: the co-normal condition
``sum_ij p_i A_ijkl nu_j = 0`` (for all k, l) has only the solution ``p = 0``
whenever the acoustic tensor ``Q(nu)_ik = A_ijkl nu_j nu_l`` is positive
definite, which the lower Hessian bound guarantees.  ``p`` therefore uses the
same homogeneous Dirichlet nodes as ``u`` and ``v``.

The backward problem is integrated in reversed time ``s = T - t`` either with
the forward leapfrog (``method="leapfrog"``, algebraically identical to the
discrete transpose) or as a semi-discrete ODE with an adaptive Runge-Kutta
integrator and coefficients interpolated linearly in time
(``method="ode"``, the default), which gives an independent time
discretization that converges to the discrete transpose under refinement.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .energy import as_alpha
from .forward import contract, leapfrog_linear
from .grid import divergence, jacobian
from .sensitivity import build_linearization

__all__ = [
    "AdjointState",
    "solve_backward_continuous",
    "apply_adjoint_discrete",
    "apply_adjoint_continuous",
    "apply_adjoint",
]


@dataclass(frozen=True)
class AdjointState:
    """Backward solution ``p`` together with the weight ``w`` that drove it."""

    p: np.ndarray
    w: np.ndarray


def _stress_pairing(z, S, grid):
    """``<z, div S_K>`` (Euclidean over nodes) for every entry ``K``."""
    Jz = jacobian(z, grid)
    axes = tuple(range(1, S.ndim))
    return -np.sum(S * Jz[None], axis=axes) / grid.n_variants


def apply_adjoint_discrete(setup, alpha, u, w, lin=None):
    """Exact transpose of ``h -> solve_frechet(h)``.

    Returns ``g`` with ``<T'(alpha) h, w>_{space-time} = <h, g>`` for all ``h``.
    """
    g_ = setup.grid
    w = g_.check_field(w, "w")
    alpha = as_alpha(alpha, len(setup.dictionary))
    if lin is None:
        lin = build_linearization(setup, alpha, u)
    A, S = lin.A, lin.stresses
    gamma = g_.dt**2 / setup.rho
    weights = g_.time_weights() * g_.node_volume
    N = len(setup.dictionary)
    grad = np.zeros(N)
    m = g_.m
    lam_next2 = np.zeros(w.shape[1:])
    lam_next = weights[m] * w[m]
    for k in range(m - 1, 0, -1):
        z = gamma * lam_next
        grad += _stress_pairing(z, S[:, k], g_)
        lam = weights[k] * w[k] + 2 * lam_next + divergence(contract(A[k], jacobian(z, g_)), g_) - lam_next2
        lam_next2, lam_next = lam_next, lam
    # start-up equation v^1 = gamma/2 div(G_h^0)
    grad += _stress_pairing(0.5 * gamma * lam_next, S[:, 0], g_)
    return grad


def _backward_ode(setup, A, w, rtol, atol):
    """Integrate the reversed-time semi-discrete system interval by interval."""
    g = setup.grid
    shape = w.shape[1:]
    size = int(np.prod(shape))
    rho = setup.rho
    A_rev = A[::-1]
    w_rev = w[::-1]
    q = np.zeros((g.m + 1,) + shape)
    y = np.zeros(2 * size)
    for j in range(g.m):
        A0, dA = A_rev[j], A_rev[j + 1] - A_rev[j]
        w0, dw = w_rev[j], w_rev[j + 1] - w_rev[j]

        def rhs(s, state, A0=A0, dA=dA, w0=w0, dw=dw):
            theta = s / g.dt
            qq = state[:size].reshape(shape)
            acc = divergence(contract(A0 + theta * dA, jacobian(qq, g)), g) + w0 + theta * dw
            return np.concatenate([state[size:], (acc / rho).ravel()])

        sol = solve_ivp(rhs, (0.0, g.dt), y, method="DOP853", rtol=rtol, atol=atol)
        if not sol.success:
            raise RuntimeError(f"backward integration failed on interval {j}: {sol.message}")
        y = sol.y[:, -1]
        q[j + 1] = y[:size].reshape(shape)
    return q[::-1]


def solve_backward_continuous(setup, alpha, u, w, lin=None, method="ode", rtol=1e-10, atol=1e-14):
    """Backward solution ``p`` on the time levels, with ``p(T) = p'(T) = 0``."""
    g = setup.grid
    w = g.check_field(w, "w")
    alpha = as_alpha(alpha, len(setup.dictionary))
    setup.check_cfl(alpha)
    if lin is None:
        lin = build_linearization(setup, alpha, u, with_stresses=False)
    if method == "leapfrog":
        q = leapfrog_linear(g, setup.rho, lin.A[::-1], w[::-1])
        return q[::-1]
    if method == "ode":
        scale = max(float(np.abs(w).max()), 1e-300) * g.T**2
        return _backward_ode(setup, lin.A, w, rtol, atol * scale)
    raise ValueError(f"unknown backward method {method!r}")


def apply_adjoint_continuous(setup, alpha, u, w, lin=None, method="ode", return_state=False):
    """``g_K = -int int <<grad_Y C_K(x, J u), J p>> dx dt`` with ``p`` the backward solution."""
    g = setup.grid
    alpha = as_alpha(alpha, len(setup.dictionary))
    if lin is None:
        lin = build_linearization(setup, alpha, u)
    p = solve_backward_continuous(setup, alpha, u, w, lin=lin, method=method)
    Jp = jacobian(p, g)
    per_step = np.sum(lin.stresses * Jp[None], axis=tuple(range(2, lin.stresses.ndim)))
    grad = -(per_step @ g.time_weights()) * g.node_volume / g.n_variants
    if return_state:
        return grad, AdjointState(p, np.asarray(w))
    return grad


def apply_adjoint(setup, alpha, u, w, method="discrete", lin=None):
    if method == "discrete":
        return apply_adjoint_discrete(setup, alpha, u, w, lin=lin)
    if method == "continuous":
        return apply_adjoint_continuous(setup, alpha, u, w, lin=lin)
    raise ValueError(f"unknown adjoint method {method!r}")
