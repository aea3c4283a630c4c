"""Projected Landweber iteration for recovering dictionary coefficients.

The data misfit is measured in ``L2(0, T; H^1)``: the space-time L2 norm
plus the discrete gradient seminorm, each with weight one.  Its gradient is
``T'(alpha)^* w`` with ``w = r - div(J r)`` and ``r = T(alpha) - u_meas``, the
second term being the L2 representative of the seminorm pairing.
"""

import logging
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from .adjoint import apply_adjoint
from .energy import AdmissibilityThresholds, as_alpha, check_admissible
from .errors import SolverError
from .forward import solve_forward
from .grid import divergence, jacobian
from .sensitivity import build_linearization, solve_frechet, v_inner, v_norm

log = logging.getLogger(__name__)

__all__ = [
    "InversionConfig",
    "IterateTrace",
    "misfit",
    "misfit_gradient",
    "landweber_step",
    "project_admissible",
    "estimate_derivative_norm",
    "invert",
    "add_noise",
]


@dataclass
class InversionConfig:
    """Landweber settings.

    ``omega=None`` picks ``0.9 / L`` with ``L`` a power-iteration estimate of
    ``||T'(alpha0)||^2``.  ``noise_level`` is the absolute data error in the
    misfit norm; the iteration stops once the residual drops below
    ``tau_disc * noise_level``.
    """

    omega: Optional[float] = None
    max_iter: int = 500
    noise_level: float = 0.0
    tau_disc: float = 1.5
    alpha_min: float = 1e-3
    adjoint: str = "discrete"
    thresholds: Optional[AdmissibilityThresholds] = None
    stall_window: int = 10

    def __post_init__(self):
        if self.omega is not None and self.omega <= 0:
            raise ValueError("omega must be positive")
        if self.tau_disc <= 1:
            raise ValueError("tau_disc must exceed 1")
        if self.alpha_min <= 0:
            raise ValueError("alpha_min must be positive")
        if self.noise_level < 0:
            raise ValueError("noise_level must be non-negative")
        if self.adjoint not in ("discrete", "continuous"):
            raise ValueError(f"unknown adjoint method {self.adjoint!r}")


@dataclass
class IterateTrace:
    alpha: list = field(default_factory=list)
    residual: list = field(default_factory=list)
    grad_norm: list = field(default_factory=list)
    admissible: list = field(default_factory=list)
    omega: Optional[float] = None
    status: str = "running"
    stop_index: Optional[int] = None

    def __len__(self):
        return len(self.alpha)

    def record(self, alpha, residual, grad_norm, admissible):
        self.alpha.append([float(a) for a in alpha])
        self.residual.append(float(residual))
        self.grad_norm.append(float(grad_norm))
        self.admissible.append(bool(admissible))

    @property
    def best_index(self):
        if not self.residual:
            return None
        return int(np.argmin(self.residual))

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


def _residual_weight(r, grid):
    """L2 representative of the ``L2(0,T;H^1)`` pairing with ``r``."""
    return r - divergence(jacobian(r, grid), grid)


def misfit(alpha, u_meas, setup, u=None):
    """``1/2 ||T(alpha) - u_meas||^2`` in ``L2(0, T; H^1)``."""
    if u is None:
        u, _ = solve_forward(setup.with_alpha(alpha))
    r = u - setup.grid.check_field(u_meas, "u_meas")
    return 0.5 * v_inner(r, r, setup.grid)


def misfit_gradient(alpha, u_meas, setup, method="discrete", u=None):
    """Gradient of :func:`misfit` with respect to ``alpha``."""
    s = setup.with_alpha(alpha)
    if u is None:
        u, _ = solve_forward(s)
    w = _residual_weight(u - u_meas, setup.grid)
    return apply_adjoint(s, s.alpha, u, w, method=method)


def project_admissible(alpha, floor, dictionary=None, thresholds=None, report=None):
    """Clip to ``[floor, inf)`` and rescale to restore the lower constraints.

    If ``thresholds`` are given and a ``sum alpha_K kappa_K >= kappa`` bound
    fails after clipping, ``alpha`` is scaled up by the smallest factor that
    restores both.  Upper ``mu`` bounds broken by that scaling cannot be
    repaired by scaling; they are appended to ``report`` (if a list).
    """
    out = np.maximum(np.asarray(alpha, dtype=float), floor)
    if thresholds is None or dictionary is None:
        return out
    scale = 1.0
    for a in range(2):
        have = out @ dictionary.kappa(a)
        if have < thresholds.kappa[a] * (1 - 1e-12):
            scale = max(scale, thresholds.kappa[a] / have)
    out = out * scale
    ok, violations = check_admissible(dictionary, out, thresholds)
    if not ok and report is not None:
        report.extend(v for v in violations if v.startswith("mu"))
    return out


def estimate_derivative_norm(setup, alpha, u=None, iterations=50, seed=0):
    """Power-iteration estimate of ``||T'(alpha)||^2`` in the misfit norm."""
    s = setup.with_alpha(alpha)
    if u is None:
        u, _ = solve_forward(s)
    lin = build_linearization(s, s.alpha, u)
    N = len(setup.dictionary)
    cols = [solve_frechet(s, s.alpha, np.eye(N)[K], u, lin) for K in range(N)]
    gram = np.array([[v_inner(a, b, setup.grid) for b in cols] for a in cols])
    x = np.random.default_rng(seed).standard_normal(N)
    lam = 0.0
    for _ in range(iterations):
        y = gram @ x
        lam = float(np.linalg.norm(y))
        if lam == 0:
            return 0.0
        x = y / lam
    return float(x @ gram @ x)


def landweber_step(alpha_k, u_meas, setup, config, u=None, info=None):
    """One projected Landweber update.

    ``alpha_{k+1} = P(alpha_k + omega T'(alpha_k)^* (u_meas - T(alpha_k)))``.
    Pass ``u = T(alpha_k)`` to skip the forward solve; ``info`` (a dict)
    receives the residual norm and gradient norm.
    """
    s = setup.with_alpha(alpha_k)
    if u is None:
        u, _ = solve_forward(s)
    omega = config.omega
    if omega is None:
        omega = 0.9 / estimate_derivative_norm(setup, alpha_k, u)
    r = u_meas - u
    w = _residual_weight(r, setup.grid)
    step = apply_adjoint(s, s.alpha, u, w, method=config.adjoint)
    if info is not None:
        info["residual"] = v_norm(r, setup.grid)
        info["grad_norm"] = float(np.linalg.norm(step))
    return project_admissible(s.alpha + omega * step, config.alpha_min,
                              setup.dictionary, config.thresholds)


def invert(u_meas, alpha0, setup, config, trace=None):
    """Projected Landweber with discrepancy stopping.

    Returns ``(alpha_best, trace)`` where ``alpha_best`` has the smallest
    residual among all iterates.  ``trace.status`` is one of
    ``"discrepancy"``, ``"max_iter"``, ``"stalled"`` or ``"solver_failure"``.
    Passing a previous ``trace`` resumes from its last iterate.  If the very
    first solve fails the trace is empty and the starting point is returned.
    """
    u_meas = setup.grid.check_field(u_meas, "u_meas")
    if trace is None:
        trace = IterateTrace()
        alpha = as_alpha(alpha0, len(setup.dictionary))
    else:
        alpha = np.array(trace.alpha[-1])
        trace.alpha.pop()
        trace.residual.pop()
        trace.grad_norm.pop()
        trace.admissible.pop()
    omega = config.omega if config.omega is not None else trace.omega
    target = config.tau_disc * config.noise_level
    stall = 0
    trace.status = "max_iter"
    while True:
        k = len(trace)
        try:
            u, _ = solve_forward(setup.with_alpha(alpha))
        except SolverError as err:
            log.warning("forward solve failed at iteration %d: %s", k, err)
            trace.status = "solver_failure"
            break
        if omega is None:
            omega = 0.9 / estimate_derivative_norm(setup, alpha, u)
        trace.omega = omega
        res = v_norm(u - u_meas, setup.grid)
        admissible = True
        if config.thresholds is not None:
            admissible = check_admissible(setup.dictionary, alpha, config.thresholds)[0]
        if res <= target:
            trace.record(alpha, res, 0.0, admissible)
            trace.status = "discrepancy"
            break
        if k >= config.max_iter:
            trace.record(alpha, res, 0.0, admissible)
            break
        if trace.residual and res >= trace.residual[-1]:
            stall += 1
        else:
            stall = 0
        info = {}
        step_cfg = InversionConfig(**{**config.__dict__, "omega": omega})
        try:
            new_alpha = landweber_step(alpha, u_meas, setup, step_cfg, u=u, info=info)
        except SolverError as err:
            log.warning("adjoint solve failed at iteration %d: %s", k, err)
            trace.record(alpha, res, np.nan, admissible)
            trace.status = "solver_failure"
            break
        trace.record(alpha, res, info["grad_norm"], admissible)
        if stall >= config.stall_window:
            trace.status = "stalled"
            break
        log.debug("iter %d residual %.3e alpha %s", k, res, alpha)
        alpha = new_alpha
    trace.stop_index = len(trace) - 1
    best = trace.best_index
    if best is None:
        return np.array(alpha, dtype=float), trace
    return np.array(trace.alpha[best]), trace


def add_noise(u, relative_level, grid, rng):
    """Add Gaussian noise scaled to ``relative_level * ||u||`` in the misfit norm.

    Returns ``(u_noisy, delta)`` with ``delta`` the absolute noise norm.
    """
    noise = rng.standard_normal(u.shape)
    delta = relative_level * v_norm(u, grid)
    noise *= delta / v_norm(noise, grid)
    return u + noise, delta
