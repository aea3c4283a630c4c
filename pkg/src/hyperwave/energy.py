"""Stored energy dictionaries and their admissibility checks.

Every shipped dictionary entry has the product form
``C_K(x, Y) = phi_K(x) * g_K(Y)`` where ``phi_K`` is a strictly positive
piecewise-multilinear spatial weight and ``g_K`` is one of two families:

``QuadraticForm``
    ``g(Y) = a |Y|_F^2 + b tr(Y)^2 + c |sym Y|_F^2``.  Constant Hessian,
    vanishing third derivative.
``SaturatingForm``
    the quadratic form plus ``eps * psi(|Y|_F^2)`` with
    ``psi(s) = s - log(1 + s)``.  ``psi(0) = psi'(0) = 0`` and ``psi'`` saturates
    at 1, so the Hessian stays bounded while the third derivative is nonzero.

All evaluators are vectorized over leading axes of ``Y`` (shape
``(..., d, d)``) and the spatial weight broadcasts against them.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "SpatialWeight",
    "QuadraticForm",
    "SaturatingForm",
    "EntryBounds",
    "EnergyEntry",
    "EnergyDictionary",
    "CombinedEnergy",
    "CoefficientVector",
    "AdmissibilityThresholds",
    "eval_energy",
    "eval_stress",
    "eval_hessian",
    "eval_third",
    "combine",
    "kappa_mu",
    "check_dim_condition",
    "check_admissible",
    "stability_constants",
    "certify_bounds",
    "partition_weights",
]

SAFETY = 1.05
DEFAULT_STRAIN_RADIUS = 4.0


def _frob(A, B):
    return np.einsum("...ij,...ij->...", A, B)


def _check_finite(Y):
    Y = np.asarray(Y, dtype=float)
    if not np.all(np.isfinite(Y)):
        raise ValueError("non-finite strain argument")
    return Y


def _trapezoid(x, lo, hi, ramp):
    return np.clip(np.minimum(x - (lo - ramp), (hi + ramp) - x) / ramp, 0.0, 1.0)


@dataclass(frozen=True)
class SpatialWeight:
    """Trapezoidal bump ``floor + (1 - floor) * prod_a trap_a(x_a)``.

    The plateau is the box ``[lower, upper]``; the weight ramps linearly to
    ``floor`` over ``ramp`` outside it.  ``floor == 1`` gives the constant
    weight.
    """

    lower: tuple = (0.0,)
    upper: tuple = (1.0,)
    ramp: float = 0.1
    floor: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.floor <= 1.0:
            raise ValueError(f"weight floor must lie in (0, 1], got {self.floor}")
        if self.ramp <= 0:
            raise ValueError("ramp must be positive")
        if len(self.lower) != len(self.upper):
            raise ValueError("lower/upper length mismatch")

    @classmethod
    def constant(cls, d=1):
        return cls((0.0,) * d, (1.0,) * d, 0.1, 1.0)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.floor == 1.0:
            return np.ones(x.shape[:-1])
        lo = np.broadcast_to(self.lower, (x.shape[-1],))
        hi = np.broadcast_to(self.upper, (x.shape[-1],))
        val = np.ones(x.shape[:-1])
        for a in range(x.shape[-1]):
            val = val * _trapezoid(x[..., a], lo[a], hi[a], self.ramp)
        return self.floor + (1.0 - self.floor) * val

    @property
    def value_range(self):
        return self.floor, 1.0

    @property
    def max_gradient(self):
        """Sup of ``|d_l phi|`` over the domain."""
        return 0.0 if self.floor == 1.0 else (1.0 - self.floor) / self.ramp

    def to_dict(self):
        return {"lower": list(self.lower), "upper": list(self.upper),
                "ramp": self.ramp, "floor": self.floor}


def partition_weights(n_entries, d=1, axis=0, ramp=0.02, floor=0.05):
    """Bumps with disjoint plateaus on equal slabs of the unit box along ``axis``."""
    weights = []
    for k in range(n_entries):
        lo = [0.0] * d
        hi = [1.0] * d
        lo[axis] = k / n_entries + ramp
        hi[axis] = (k + 1) / n_entries - ramp
        weights.append(SpatialWeight(tuple(lo), tuple(hi), ramp, floor))
    return weights


@dataclass(frozen=True)
class QuadraticForm:
    """``g(Y) = a |Y|^2 + b tr(Y)^2 + c |sym Y|^2`` with ``a > 0``, ``b, c >= 0``."""

    a: float = 1.0
    b: float = 0.0
    c: float = 0.0

    family = "quadratic"

    def __post_init__(self):
        if self.a <= 0 or self.b < 0 or self.c < 0:
            raise ValueError("quadratic form needs a > 0 and b, c >= 0")

    def energy(self, Y):
        S = 0.5 * (Y + np.swapaxes(Y, -1, -2))
        tr = np.trace(Y, axis1=-2, axis2=-1)
        return self.a * _frob(Y, Y) + self.b * tr**2 + self.c * _frob(S, S)

    def gradient(self, Y):
        d = Y.shape[-1]
        S = 0.5 * (Y + np.swapaxes(Y, -1, -2))
        tr = np.trace(Y, axis1=-2, axis2=-1)
        return 2 * self.a * Y + 2 * self.b * tr[..., None, None] * np.eye(d) + 2 * self.c * S

    def hessian_apply(self, Y, H):
        d = Y.shape[-1]
        H = np.broadcast_to(H, np.broadcast_shapes(np.shape(H), Y.shape))
        trH = np.trace(H, axis1=-2, axis2=-1)
        return (2 * self.a * H + 2 * self.b * trH[..., None, None] * np.eye(d)
                + self.c * (H + np.swapaxes(H, -1, -2)))

    def hessian(self, Y):
        d = Y.shape[-1]
        I = np.eye(d)
        A = (2 * self.a * np.einsum("ik,jl->ijkl", I, I)
             + 2 * self.b * np.einsum("ij,kl->ijkl", I, I)
             + self.c * (np.einsum("ik,jl->ijkl", I, I) + np.einsum("il,jk->ijkl", I, I)))
        return np.broadcast_to(A, Y.shape[:-2] + A.shape).copy()

    def third(self, Y, H1, H2):
        shape = np.broadcast_shapes(Y.shape, np.shape(H1), np.shape(H2))
        return np.zeros(shape)

    def to_dict(self):
        return {"family": self.family, "a": self.a, "b": self.b, "c": self.c}


@dataclass(frozen=True)
class SaturatingForm(QuadraticForm):
    """Quadratic form plus ``eps * psi(|Y|^2)``, ``psi(s) = s - log(1 + s)``."""

    eps: float = 0.5

    family = "saturating"

    def __post_init__(self):
        super().__post_init__()
        if self.eps < 0:
            raise ValueError("eps must be non-negative")

    @staticmethod
    def _psi(s, order):
        if order == 0:
            return s - np.log1p(s)
        if order == 1:
            return s / (1.0 + s)
        if order == 2:
            return 1.0 / (1.0 + s) ** 2
        return -2.0 / (1.0 + s) ** 3

    def energy(self, Y):
        return super().energy(Y) + self.eps * self._psi(_frob(Y, Y), 0)

    def gradient(self, Y):
        s = _frob(Y, Y)
        return super().gradient(Y) + 2 * self.eps * self._psi(s, 1)[..., None, None] * Y

    def hessian_apply(self, Y, H):
        s = _frob(Y, Y)[..., None, None]
        YH = _frob(Y, H)[..., None, None]
        extra = 2 * self._psi(s, 1) * H + 4 * self._psi(s, 2) * YH * Y
        return super().hessian_apply(Y, H) + self.eps * extra

    def hessian(self, Y):
        d = Y.shape[-1]
        s = _frob(Y, Y)[..., None, None, None, None]
        I = np.eye(d)
        extra = (2 * self._psi(s, 1) * np.einsum("ik,jl->ijkl", I, I)
                 + 4 * self._psi(s, 2) * np.einsum("...ij,...kl->...ijkl", Y, Y))
        return super().hessian(Y) + self.eps * extra

    def third(self, Y, H1, H2):
        s = _frob(Y, Y)[..., None, None]
        a1 = _frob(Y, H1)[..., None, None]
        a2 = _frob(Y, H2)[..., None, None]
        h12 = _frob(H1, H2)[..., None, None]
        p2 = self._psi(s, 2)
        p3 = self._psi(s, 3)
        val = 4 * p2 * (a1 * H2 + a2 * H1 + h12 * Y) + 8 * p3 * a1 * a2 * Y
        return self.eps * val

    def to_dict(self):
        return {**super().to_dict(), "eps": self.eps}


FAMILIES = {"quadratic": QuadraticForm, "saturating": SaturatingForm}


@dataclass(frozen=True)
class EntryBounds:
    """Bound constants ``kappa^[0], kappa^[1]`` and ``mu^[0..7]`` of one entry.

    ``strain_radius`` is the Frobenius radius on which sampled bounds were
    certified (``inf`` for closed-form bounds).
    """

    kappa: tuple
    mu: tuple
    strain_radius: float = np.inf

    def __post_init__(self):
        if len(self.kappa) != 2 or len(self.mu) != 8:
            raise ValueError("need 2 kappa and 8 mu constants")
        if min(self.kappa) <= 0 or min(self.mu) < 0:
            raise ValueError("kappa constants must be positive, mu non-negative")

    def to_dict(self):
        return {"kappa": list(self.kappa), "mu": list(self.mu),
                "strain_radius": None if np.isinf(self.strain_radius) else self.strain_radius}


@dataclass(frozen=True)
class EnergyEntry:
    """One dictionary element ``C_K(x, Y) = phi_K(x) g_K(Y)``."""

    form: QuadraticForm
    weight: SpatialWeight
    d: int
    bounds: Optional[EntryBounds] = None

    def __post_init__(self):
        if self.bounds is None:
            object.__setattr__(self, "bounds", certify_bounds(self.form, self.weight, self.d))

    @property
    def family(self):
        return self.form.family

    def to_dict(self):
        return {**self.form.to_dict(), "weight": self.weight.to_dict(),
                "bounds": self.bounds.to_dict()}


def eval_energy(entry, x, Y):
    """``C_K(x, Y)``."""
    Y = _check_finite(Y)
    return entry.weight(x) * entry.form.energy(Y)


def eval_stress(entry, x, Y):
    """``grad_Y C_K(x, Y)``, the first Piola-Kirchhoff stress of the entry."""
    Y = _check_finite(Y)
    return entry.weight(x)[..., None, None] * entry.form.gradient(Y)


def eval_hessian(entry, x, Y):
    """Fourth-order tensor ``d^2 C_K / dY_ij dY_kl``."""
    Y = _check_finite(Y)
    return entry.weight(x)[..., None, None, None, None] * entry.form.hessian(Y)


def eval_third(entry, x, Y, H1, H2):
    """Third derivative contracted with ``H1`` and ``H2``; bilinear in both."""
    Y = _check_finite(Y)
    return entry.weight(x)[..., None, None] * entry.form.third(Y, H1, H2)


class EnergyDictionary:
    """Ordered collection of entries sharing one spatial dimension."""

    def __init__(self, entries: Sequence[EnergyEntry]):
        entries = tuple(entries)
        if not entries:
            raise ValueError("dictionary needs at least one entry")
        dims = {e.d for e in entries}
        if len(dims) != 1:
            raise ValueError(f"entries disagree on dimension: {sorted(dims)}")
        self.entries = entries
        self.d = dims.pop()

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, k):
        return self.entries[k]

    @property
    def is_quadratic(self):
        return all(e.family == "quadratic" for e in self.entries)

    def kappa(self, index):
        return np.array([e.bounds.kappa[index] for e in self.entries])

    def mu(self, index):
        return np.array([e.bounds.mu[index] for e in self.entries])

    def weights_at(self, points):
        """Spatial weights of all entries at ``points``, shape ``(N, *points.shape[:-1])``."""
        return np.stack([e.weight(points) for e in self.entries])

    def to_list(self):
        return [e.to_dict() for e in self.entries]


def as_alpha(alpha, n_entries, positive=False):
    alpha = np.asarray(alpha, dtype=float).reshape(-1)
    if alpha.shape != (n_entries,):
        raise ValueError(f"coefficient vector has {alpha.size} entries, dictionary has {n_entries}")
    if not np.all(np.isfinite(alpha)):
        raise ValueError("non-finite coefficient")
    if positive and np.any(alpha <= 0):
        raise ValueError("coefficients must be strictly positive")
    return alpha


@dataclass(frozen=True)
class CoefficientVector:
    """Strictly positive coefficient vector ``alpha``."""

    alpha: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=float).reshape(-1)
        if np.any(a <= 0) or not np.all(np.isfinite(a)):
            raise ValueError("coefficients must be finite and strictly positive")
        object.__setattr__(self, "alpha", a)

    def __array__(self, dtype=None, copy=None):
        return self.alpha if dtype is None else self.alpha.astype(dtype)

    def __len__(self):
        return self.alpha.size


class CombinedEnergy:
    """The conic combination ``C_alpha = sum_K alpha_K C_K``."""

    def __init__(self, dictionary, alpha):
        self.dictionary = dictionary
        self.alpha = as_alpha(alpha, len(dictionary))

    def _sum(self, fn, *args):
        total = None
        for a, e in zip(self.alpha, self.dictionary):
            term = a * fn(e, *args)
            total = term if total is None else total + term
        return total

    def energy(self, x, Y):
        return self._sum(eval_energy, x, Y)

    def stress(self, x, Y):
        return self._sum(eval_stress, x, Y)

    def hessian(self, x, Y):
        return self._sum(eval_hessian, x, Y)

    def third(self, x, Y, H1, H2):
        return self._sum(eval_third, x, Y, H1, H2)


def combine(dictionary, alpha):
    return CombinedEnergy(dictionary, alpha)


@dataclass(frozen=True)
class AdmissibilityThresholds:
    """Targets ``kappa^[1..2]`` and ``mu^[1..7]`` defining the admissible set."""

    kappa: tuple = (1e-12, 1e-12)
    mu: tuple = (1e12,) * 7

    def __post_init__(self):
        if len(self.kappa) != 2 or len(self.mu) != 7:
            raise ValueError("need 2 kappa targets and 7 mu targets")
        if min(self.kappa) <= 0 or min(self.mu) <= 0:
            raise ValueError("thresholds must be positive")


def kappa_mu(dictionary, alpha):
    """``(sum alpha_K kappa_K^[1], sum alpha_K mu_K^[1])``."""
    alpha = as_alpha(alpha, len(dictionary))
    return float(alpha @ dictionary.kappa(1)), float(alpha @ dictionary.mu(1))


def check_dim_condition(dictionary, alpha):
    """``7/8 mu < kappa < 9/8 mu``."""
    kappa, mu = kappa_mu(dictionary, alpha)
    return bool(0.875 * mu < kappa < 1.125 * mu)


def check_admissible(dictionary, alpha, thresholds):
    """Membership in the admissible coefficient set.

    Returns ``(ok, violations)`` where each violation names the failed
    inequality: ``positivity(K)``, ``kappa[a]`` or ``mu[b]`` (1-based).
    The two lower-bound inequalities use the per-entry constants
    ``kappa_K^[0]`` and ``kappa_K^[1]``.
    """
    alpha = as_alpha(alpha, len(dictionary))
    violations = [f"positivity({k + 1})" for k in np.flatnonzero(alpha <= 0)]
    for a in range(2):
        if alpha @ dictionary.kappa(a) < thresholds.kappa[a]:
            violations.append(f"kappa[{a + 1}]")
    for b in range(7):
        if alpha @ dictionary.mu(b + 1) > thresholds.mu[b]:
            violations.append(f"mu[{b + 1}]")
    return not violations, violations


def stability_constants(dictionary, alpha, K_hat=1.0, eps=0.5):
    """Return ``(C_bar, C_hat, zeta, eta)`` of the Lipschitz stability estimate.

    ``K_hat`` (embedding constant) and ``eps`` are not computable from the
    model and are caller inputs; the defaults are for reporting only.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    alpha = as_alpha(alpha, len(dictionary))
    k1, m1, m2 = dictionary.kappa(1), dictionary.mu(1), dictionary.mu(2)
    kappa = alpha @ k1
    c_bar = (alpha @ m2) / kappa
    c_hat = K_hat / (1.0 - np.sqrt(1.0 - eps)) * (alpha @ m1) / kappa**2
    zeta = m2.min() / k1.max()
    eta = m2.max() / k1.min()
    return float(c_bar), float(c_hat), float(zeta), float(eta)


def _sample_strains(d, rng, count, radius):
    dirs = rng.standard_normal((count, d, d))
    dirs /= np.linalg.norm(dirs, axis=(-2, -1), keepdims=True)
    r = radius * rng.random(count) ** (1.0 / (d * d))
    Y = dirs * r[:, None, None]
    # structured samples: tiny strains, pure dilation/shear along the radius
    extra = [1e-3 * dirs[0], np.eye(d) * radius / np.sqrt(d)]
    for t in np.linspace(0.05, 1.0, 40):
        extra.append(t * radius * dirs[1])
        extra.append(t * radius * np.eye(d) / np.sqrt(d))
    return np.concatenate([Y, np.stack(extra)])


def _third_tensor(form, Y):
    d = Y.shape[-1]
    E = np.eye(d * d).reshape(d * d, d, d)
    T = np.stack([np.stack([form.third(Y, Ei, Ek) for Ek in E], axis=-3) for Ei in E], axis=-4)
    return T


def certify_bounds(form, weight, d, radius=DEFAULT_STRAIN_RADIUS, samples=400, seed=0):
    """Bound constants for ``phi(x) g(Y)``.

    The quadratic family gets exact constants from the eigenvalues of its
    constant Hessian.  Otherwise the Hessian spectrum and energy ratio are
    sampled over ``|Y|_F <= radius`` and widened by a 1.05 safety factor.
    Spatial-derivative constants ``mu^[4..7]`` are ``sup|grad phi|`` times the
    sampled sup of the corresponding Y-derivative, so for non-constant
    weights they are only meaningful on the sampled strain ball.
    """
    phi_lo, phi_hi = weight.value_range
    rng = np.random.default_rng(seed)
    Y = _sample_strains(d, rng, samples, radius)
    hess = form.hessian(Y).reshape(-1, d * d, d * d)
    eig = np.linalg.eigvalsh(hess)
    g_grad = np.abs(form.gradient(Y)).max()
    g_hess = np.abs(hess).max()
    if form.family == "quadratic":
        lam_lo, lam_hi = eig[0, 0], eig[0, -1]
        kappa = (phi_lo * lam_lo / 2, phi_lo * lam_lo)
        mu = [lam_hi / 2 * phi_hi, lam_hi * phi_hi, 0.0, 0.0]
        g3 = 0.0
        r_cert = np.inf
    else:
        ratio = form.energy(Y) / np.einsum("nij,nij->n", Y, Y)
        kappa = (phi_lo * ratio.min() / SAFETY, phi_lo * eig[:, 0].min() / SAFETY)
        sub = Y[:: max(1, len(Y) // 120)]
        T3 = _third_tensor(form, sub)
        g3 = np.abs(T3).max()
        h = 1e-4
        E = np.eye(d * d).reshape(d * d, d, d)
        g4 = max(np.abs((_third_tensor(form, sub + h * Ea) - _third_tensor(form, sub - h * Ea)) / (2 * h)).max()
                 for Ea in E)
        mu = [phi_hi * ratio.max() * SAFETY, phi_hi * eig[:, -1].max() * SAFETY,
              phi_hi * g3 * SAFETY, phi_hi * g4 * SAFETY]
        r_cert = radius
    grad_phi = weight.max_gradient
    mu += [grad_phi * g_grad, grad_phi * g_hess, grad_phi * g_hess, grad_phi * g3]
    return EntryBounds(tuple(float(k) for k in kappa), tuple(float(m) for m in mu), r_cert)
