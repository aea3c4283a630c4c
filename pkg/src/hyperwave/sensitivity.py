"""Frechet derivative ``v = T'(alpha) h`` of the discrete forward operator.

``v`` solves the linearized leapfrog system

    rho (v^{k+1} - 2 v^k + v^{k-1}) / dt^2 = div(A^k : J v^k) + div(G_h^k)

with ``A^k = grad_Y grad_Y C_alpha(x, J u^k)``, ``G_h^k = grad_Y C_h(x, J u^k)``
and zero initial data, which is exactly the derivative of the discrete
forward recursion with respect to ``alpha``.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .energy import as_alpha, kappa_mu
from .forward import entry_stresses, hessian_field, leapfrog_linear
from .grid import divergence, inner_product_L2, jacobian, quadrature_inner
from .parallel import worker_count

__all__ = [
    "LinearizedCoefficients",
    "build_linearization",
    "build_rhs",
    "solve_frechet",
    "frechet_matrix",
    "v_norm",
    "v_inner",
    "continuity_bound_check",
]


@dataclass(frozen=True)
class LinearizedCoefficients:
    """Frozen coefficients of the linearized problem along one forward solution.

    ``A`` has shape ``(m + 1, V, *cells, d, d, d, d)``; ``stresses`` holds the
    per-entry stresses ``grad_Y C_K(x, J u^k)`` with shape
    ``(N, m + 1, V, *cells, d, d)``.
    """

    A: np.ndarray
    stresses: Optional[np.ndarray] = None

    def G(self, h):
        """``grad_Y C_h(x, J u)`` for a direction ``h``."""
        return np.tensordot(np.asarray(h, dtype=float), self.stresses, axes=1)


def build_linearization(setup, alpha, u, with_stresses=True):
    """Hessian field ``A(t, x)`` (and per-entry stresses) along ``u``."""
    g = setup.grid
    alpha = as_alpha(alpha, len(setup.dictionary))
    Y = jacobian(g.check_field(u, "u"), g)
    A = hessian_field(setup, alpha, Y)
    S = entry_stresses(setup, Y) if with_stresses else None
    return LinearizedCoefficients(A, S)


def build_rhs(setup, h, u=None, lin=None):
    """``div(grad_Y C_h(x, J u))`` at every time level."""
    g = setup.grid
    h = as_alpha(h, len(setup.dictionary))
    if lin is None:
        S = entry_stresses(setup, jacobian(g.check_field(u, "u"), g))
    else:
        S = lin.stresses
    return divergence(np.tensordot(h, S, axes=1), g)


def solve_frechet(setup, alpha, h, u, lin=None):
    """Solve the linearized problem for ``v = T'(alpha) h``.

    ``u`` must be the forward solution at ``alpha``.  Passing a precomputed
    ``lin`` avoids rebuilding the Hessian field for repeated directions.
    """
    setup.check_cfl(alpha)
    if lin is None:
        lin = build_linearization(setup, alpha, u)
    rhs = build_rhs(setup, h, lin=lin)
    return leapfrog_linear(setup.grid, setup.rho, lin.A, rhs)


def frechet_matrix(setup, alpha, u, lin=None):
    """Dense discrete derivative: column ``K`` is ``T'(alpha) e_K`` flattened."""
    if lin is None:
        lin = build_linearization(setup, alpha, u)
    N = len(setup.dictionary)
    cols = _map(lambda K: solve_frechet(setup, alpha, np.eye(N)[K], u, lin).ravel(), range(N))
    return np.stack(cols, axis=1)


def _map(fn, items):
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(fn, items))


def v_inner(a, b, grid):
    """``L2(0, T; H^1)`` inner product: L2 part plus discrete gradient part."""
    Ja = jacobian(a, grid)
    Jb = jacobian(b, grid)
    grad = float(np.dot(grid.time_weights(), quadrature_inner(Ja, Jb, grid)))
    return inner_product_L2(a, b, grid, "spacetime") + grad


def v_norm(a, grid):
    return float(np.sqrt(max(v_inner(a, a, grid), 0.0)))


def continuity_bound_check(setup, alpha, samples=100, u=None, seed=0, directions=None):
    """Measured ``max ||T'(alpha) h||_{L2(0,T;V)} / ||h||_inf`` over sampled ``h``.

    Returns ``(L1_measured, ratios)``.
    """
    from .forward import solve_forward

    if u is None:
        u, _ = solve_forward(setup.with_alpha(alpha))
    lin = build_linearization(setup, alpha, u)
    N = len(setup.dictionary)
    if directions is None:
        rng = np.random.default_rng(seed)
        directions = rng.standard_normal((samples, N))
        directions /= np.abs(directions).max(axis=1, keepdims=True)
    # v is linear in h: solve per unit direction once and superpose
    basis = [solve_frechet(setup, alpha, np.eye(N)[K], u, lin) for K in range(N)]
    ratios = []
    for h in directions:
        v = np.tensordot(h, np.stack(basis), axes=1)
        ratios.append(v_norm(v, setup.grid) / np.abs(h).max())
    ratios = np.array(ratios)
    return float(ratios.max()), ratios
