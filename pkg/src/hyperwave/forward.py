"""Explicit leapfrog solver for the nonlinear hyperelastic wave equation.

The discrete forward operator is

    rho (u^{k+1} - 2 u^k + u^{k-1}) / dt^2 = div(grad_Y C_alpha(x, J u^k)) + f^k

with ``u^0 = u0`` and the Taylor start-up step

    u^1 = u0 + dt u1 + dt^2 / (2 rho) (div(grad_Y C_alpha(x, J u0)) + f^0).
"""

import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .energy import EnergyDictionary, as_alpha, kappa_mu
from .errors import BlowUp, CFLViolation
from .grid import Grid, MaterialField, divergence, jacobian, quadrature_inner

__all__ = [
    "ProblemSetup",
    "SolveReport",
    "solve_forward",
    "residual",
    "energy_budget",
    "velocity",
    "entry_stresses",
    "stress_field",
    "hessian_field",
    "contract",
    "leapfrog_linear",
]


@dataclass(frozen=True)
class ProblemSetup:
    """Everything defining one initial-boundary value problem.

    ``force`` has the space-time field shape; ``u0`` and ``u1`` are nodal
    ``(*grid.shape, d)`` arrays.  Missing data default to zero.
    """

    grid: Grid
    material: MaterialField
    dictionary: EnergyDictionary
    alpha: np.ndarray
    force: Optional[np.ndarray] = None
    u0: Optional[np.ndarray] = None
    u1: Optional[np.ndarray] = None
    cfl_safety: float = 0.5

    def __post_init__(self):
        g = self.grid
        if self.dictionary.d != g.d:
            raise ValueError(f"dictionary dimension {self.dictionary.d} != grid dimension {g.d}")
        if self.material.rho.shape != g.shape:
            raise ValueError(f"density shape {self.material.rho.shape} != grid shape {g.shape}")
        object.__setattr__(self, "alpha", as_alpha(self.alpha, len(self.dictionary)))
        nodal = g.shape + (g.d,)
        for name in ("u0", "u1"):
            val = getattr(self, name)
            val = np.zeros(nodal) if val is None else np.asarray(val, dtype=float)
            if val.shape != nodal:
                raise ValueError(f"{name}: expected shape {nodal}, got {val.shape}")
            object.__setattr__(self, name, val)
        f = np.zeros(g.field_shape) if self.force is None else g.check_field(self.force, "force")
        if not np.all(np.isfinite(f)):
            raise ValueError("force contains non-finite values")
        object.__setattr__(self, "force", f)
        # spatial weights of every entry at the cell centres, (N, *cells)
        object.__setattr__(self, "_phi", self.dictionary.weights_at(g.cell_centers()))

    @property
    def phi(self):
        return self._phi

    @property
    def rho(self):
        return self.material.rho[..., None]

    def with_alpha(self, alpha):
        return replace(self, alpha=np.asarray(alpha, dtype=float))

    def with_data(self, **kw):
        return replace(self, **kw)

    def cfl_number(self, alpha=None):
        """``dt / (dx sqrt(rho_min / mu))`` with ``mu`` the combined upper Hessian bound."""
        alpha = self.alpha if alpha is None else alpha
        _, mu = kappa_mu(self.dictionary, alpha)
        if mu <= 0:
            return 0.0
        return self.grid.dt / (self.grid.dx * np.sqrt(self.material.rho_min / mu))

    def check_cfl(self, alpha=None):
        nu = self.cfl_number(alpha)
        if nu > self.cfl_safety * (1 + 1e-12):
            raise CFLViolation(
                f"CFL number {nu:.4f} exceeds {self.cfl_safety}; "
                f"increase m to at least {int(np.ceil(self.grid.m * nu / self.cfl_safety))}"
            )
        return nu


@dataclass
class SolveReport:
    """Diagnostics of one forward solve.

    ``M`` holds sup-norm surrogates of the admissible-solution bounds
    ``M0..M3``; they are measured, never enforced.
    """

    kinetic: np.ndarray
    strain: np.ndarray
    cfl: float
    M: dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def energy(self):
        return self.kinetic + self.strain

    @property
    def steps(self):
        return len(self.kinetic)

    def to_dict(self):
        return {
            "steps": self.steps,
            "cfl": self.cfl,
            "wall_time": self.wall_time,
            "M": dict(self.M),
            "kinetic": self.kinetic.tolist(),
            "strain": self.strain.tolist(),
        }


def contract(A, H):
    """``(A : H)_ij = sum_kl A_ijkl H_kl``."""
    return np.einsum("...ijkl,...kl->...ij", A, H)


def _phi_broadcast(phi):
    return phi[..., None, None]


def entry_stresses(setup, Y):
    """Per-entry stresses ``grad_Y C_K(x, Y)``, shape ``(N, *Y.shape)``."""
    return np.stack([
        _phi_broadcast(setup.phi[k]) * e.form.gradient(Y)
        for k, e in enumerate(setup.dictionary)
    ])


def stress_field(setup, alpha, Y):
    """``grad_Y C_alpha(x, Y)`` at the quadrature points."""
    total = np.zeros_like(Y)
    for k, (a, e) in enumerate(zip(alpha, setup.dictionary)):
        if a != 0:
            total += a * _phi_broadcast(setup.phi[k]) * e.form.gradient(Y)
    return total


def energy_density(setup, alpha, Y):
    total = np.zeros(Y.shape[:-2])
    for k, (a, e) in enumerate(zip(alpha, setup.dictionary)):
        total += a * setup.phi[k] * e.form.energy(Y)
    return total


def hessian_field(setup, alpha, Y):
    """``grad_Y grad_Y C_alpha(x, Y)`` at the quadrature points."""
    d = Y.shape[-1]
    total = np.zeros(Y.shape + (d, d))
    for k, (a, e) in enumerate(zip(alpha, setup.dictionary)):
        if a != 0:
            total += a * setup.phi[k][..., None, None, None, None] * e.form.hessian(Y)
    return total


def solve_forward(setup):
    """Integrate the forward problem; returns ``(u, SolveReport)``.

    Raises
    ------
    CFLViolation
        if the time step exceeds the stability limit.
    BlowUp
        if the state becomes non-finite; ``err.step`` is the time index.
    """
    t0 = time.perf_counter()
    cfl = setup.check_cfl()
    g = setup.grid
    alpha = setup.alpha
    gamma = g.dt**2 / setup.rho
    u = np.empty(g.field_shape)
    u[0] = setup.u0
    accel = divergence(stress_field(setup, alpha, jacobian(setup.u0, g)), g) + setup.force[0]
    u[1] = setup.u0 + g.dt * setup.u1 + 0.5 * gamma * accel
    if not np.all(np.isfinite(u[1])):
        raise BlowUp(1)
    for k in range(1, g.m):
        accel = divergence(stress_field(setup, alpha, jacobian(u[k], g)), g) + setup.force[k]
        u[k + 1] = 2 * u[k] - u[k - 1] + gamma * accel
        if not np.all(np.isfinite(u[k + 1])):
            raise BlowUp(k + 1)
    kin, strain = _energy_parts(u, setup)
    report = SolveReport(kin, strain, float(cfl), _m_surrogates(u, setup))
    report.wall_time = time.perf_counter() - t0
    return u, report


def residual(u, setup):
    """Defect of the discrete equations for a candidate field ``u``.

    Row 0 is the start-up equation, rows ``1..m-1`` the leapfrog equations;
    the result has ``m`` rows because no equation is attached to the final
    level.
    """
    g = setup.grid
    u = g.check_field(u, "u")
    rho = setup.rho
    Y = jacobian(u[:-1], g)
    div = divergence(stress_field(setup, setup.alpha, Y), g)
    r = np.empty((g.m,) + u.shape[1:])
    r[0] = 2 * rho * (u[1] - u[0] - g.dt * setup.u1) / g.dt**2 - div[0] - setup.force[0]
    r[1:] = rho * (u[2:] - 2 * u[1:-1] + u[:-2]) / g.dt**2 - div[1:] - setup.force[1:-1]
    return r


def velocity(u, grid, u1=None):
    """Time derivative per level: central inside, exact ``u1`` (if given) at t=0,
    second-order one-sided at the end points otherwise."""
    dt = grid.dt
    v = np.empty_like(u)
    v[1:-1] = (u[2:] - u[:-2]) / (2 * dt)
    if u1 is not None:
        v[0] = u1
    else:
        v[0] = (-3 * u[0] + 4 * u[1] - u[2]) / (2 * dt)
    v[-1] = (3 * u[-1] - 4 * u[-2] + u[-3]) / (2 * dt)
    return v


def _energy_parts(u, setup):
    g = setup.grid
    v = velocity(u, g, setup.u1)
    kin = 0.5 * g.node_volume * np.sum(setup.rho * v**2, axis=tuple(range(1, u.ndim)))
    dens = energy_density(setup, setup.alpha, jacobian(u, g))
    strain = g.node_volume / g.n_variants * np.sum(dens, axis=tuple(range(1, dens.ndim)))
    return kin, strain


def energy_budget(u, setup):
    """Discrete total energy ``E^k = 1/2 sum rho |du/dt|^2 + sum_q w_q C_alpha(Ju^k)``."""
    kin, strain = _energy_parts(setup.grid.check_field(u, "u"), setup)
    return kin + strain


def _second_derivatives(u, grid):
    """Nodal second derivatives ``d_l d_j u_k``, shape ``(..., n.., k, j, l)``."""
    d = grid.d
    nb = u.ndim - d - 1
    U = np.pad(u, [(0, 0)] * nb + [(1, 1)] * d + [(0, 0)])
    inner = (slice(None),) * nb + (slice(1, grid.n + 1),) * d
    first = [np.gradient(U, grid.dx, axis=nb + j) for j in range(d)]
    out = np.empty(u.shape + (d, d))
    for j in range(d):
        for l in range(d):
            out[..., j, l] = np.gradient(first[j], grid.dx, axis=nb + l)[inner]
    return out


def _m_surrogates(u, setup):
    g = setup.grid
    v = velocity(u, g, setup.u1)
    d2u = _second_derivatives(u, g)
    d2v = _second_derivatives(v, g)
    l2 = np.sqrt(g.node_volume * np.sum(d2u**2, axis=tuple(range(1, g.d + 1))))
    return {
        "M0": float(l2.max()),
        "M1": float(np.abs(jacobian(v, g)).max()),
        "M2": float(np.abs(d2v).max()),
        "M3": float(np.abs(d2u).max()),
    }


def leapfrog_linear(grid, rho, A, rhs, check_every=1):
    """Leapfrog for ``rho v'' - div(A(t) : J v) = rhs`` with zero initial data.

    ``A`` is indexed by time level (at least ``m`` levels) and ``rhs`` is a
    nodal space-time array.  The start-up step mirrors the forward solver.
    """
    gamma = grid.dt**2 / rho
    v = np.zeros((grid.m + 1,) + rhs.shape[1:])
    v[1] = 0.5 * gamma * rhs[0]
    for k in range(1, grid.m):
        acc = divergence(contract(A[k], jacobian(v[k], grid)), grid) + rhs[k]
        v[k + 1] = 2 * v[k] - v[k - 1] + gamma * acc
        if check_every and not np.all(np.isfinite(v[k + 1])):
            raise BlowUp(k + 1, "linearized state")
    return v
