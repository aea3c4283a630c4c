"""Regular-grid discretization of the unit box and the time interval.

Displacement-like fields live on the interior nodes ``x_i = i * dx``,
``i = 1..n`` per axis, with the homogeneous Dirichlet value 0 on the
boundary nodes.  Displacement gradients live on cell quadrature points:
every one of the ``(n + 1)**d`` cells carries ``2**d`` corner variants
(one for ``d == 1``), each built from the forward differences along the cell
edges meeting at that corner.  Averaging an energy density over the corner
variants reproduces the standard compact stencils (3-point in 1D, 5-point in
2D) for quadratic energies, and avoids the checkerboard modes that a
cell-averaged gradient would have.

:func:`divergence` is defined as the negative transpose of :func:`jacobian`
with respect to the nodal and quadrature inner products, so that the discrete
Gauss-Green identity

.. math::

    \\sum_q w_q \\langle\\langle P_q, (Jw)_q \\rangle\\rangle
    = -\\sum_x \\Delta x^d \\langle (\\nabla\\cdot P)_x, w_x \\rangle

holds to round-off for every ``P`` and every nodal ``w``.

Field layouts
-------------
nodal field          ``(*batch, n, ..., n, c)``
quadrature field     ``(*batch, V, n+1, ..., n+1, c, d)``
space-time field     ``(m + 1, n, ..., n, d)``
"""

from dataclasses import dataclass
from itertools import product

import numpy as np

__all__ = [
    "Grid",
    "MaterialField",
    "jacobian",
    "jacobian_transpose",
    "divergence",
    "inner_product_L2",
    "quadrature_inner",
    "corner_variants",
]


@dataclass(frozen=True)
class Grid:
    """Uniform grid on ``(0, 1)**d x [0, T]``.

    Parameters
    ----------
    d : int
        Spatial dimension, 1, 2 or 3.
    n : int
        Interior points per axis.
    T : float
        Time horizon.
    m : int
        Number of time steps.
    """

    d: int
    n: int
    T: float
    m: int

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"d must be 1, 2 or 3, got {self.d}")
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if self.m < 2:
            raise ValueError(f"m must be >= 2, got {self.m}")
        if not (np.isfinite(self.T) and self.T > 0):
            raise ValueError(f"T must be positive, got {self.T}")

    @property
    def dx(self):
        return 1.0 / (self.n + 1)

    @property
    def dt(self):
        return self.T / self.m

    @property
    def shape(self):
        """Shape of the interior node array."""
        return (self.n,) * self.d

    @property
    def cell_shape(self):
        return (self.n + 1,) * self.d

    @property
    def field_shape(self):
        """Shape of a displacement-like space-time field."""
        return (self.m + 1, *self.shape, self.d)

    @property
    def n_variants(self):
        return len(corner_variants(self.d))

    @property
    def node_volume(self):
        return self.dx ** self.d

    @property
    def times(self):
        return np.linspace(0.0, self.T, self.m + 1)

    def nodes(self):
        """Interior node coordinates, shape ``(*shape, d)``."""
        axis = self.dx * np.arange(1, self.n + 1)
        return np.stack(np.meshgrid(*([axis] * self.d), indexing="ij"), axis=-1)

    def cell_centers(self):
        """Cell centre coordinates, shape ``(*cell_shape, d)``."""
        axis = self.dx * (np.arange(self.n + 1) + 0.5)
        return np.stack(np.meshgrid(*([axis] * self.d), indexing="ij"), axis=-1)

    def time_weights(self):
        """Trapezoidal weights on the ``m + 1`` time levels."""
        w = np.full(self.m + 1, self.dt)
        w[0] = w[-1] = 0.5 * self.dt
        return w

    def zeros(self):
        return np.zeros(self.field_shape)

    def check_nodal(self, u, name="field"):
        u = np.asarray(u, dtype=float)
        nd = self.d + 1
        if u.ndim < nd or u.shape[-nd:-1] != self.shape:
            raise ValueError(
                f"{name}: expected trailing shape {self.shape + ('c',)}, got {u.shape}"
            )
        return u

    def check_field(self, u, name="field"):
        """Validate a full space-time displacement field."""
        u = np.asarray(u, dtype=float)
        if u.shape != self.field_shape:
            raise ValueError(f"{name}: expected shape {self.field_shape}, got {u.shape}")
        return u


@dataclass(frozen=True)
class MaterialField:
    """Mass density sampled on the interior nodes."""

    rho: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float)
        if not np.all(np.isfinite(rho)) or np.any(rho <= 0):
            raise ValueError("density must be finite and strictly positive")
        object.__setattr__(self, "rho", rho)

    @classmethod
    def uniform(cls, grid, value=1.0):
        return cls(np.full(grid.shape, float(value)))

    @property
    def rho_min(self):
        return float(self.rho.min())

    @property
    def rho_max(self):
        return float(self.rho.max())


def corner_variants(d):
    """Corner offsets selecting the edges used for each gradient variant."""
    if d == 1:
        return [(0,)]
    return list(product((0, 1), repeat=d))


def _slices(d, n, corner, j, upper):
    sl = []
    for a in range(d):
        if a == j:
            sl.append(slice(1, n + 2) if upper else slice(0, n + 1))
        else:
            sl.append(slice(corner[a], corner[a] + n + 1))
    return tuple(sl)


def jacobian(u, grid):
    """Displacement gradient ``(Ju)_ij = d_j u_i`` at the quadrature points.

    Parameters
    ----------
    u : array_like, shape ``(*batch, n, ..., n, c)``
        Nodal field on the interior nodes.
    grid : Grid

    Returns
    -------
    ndarray, shape ``(*batch, V, n+1, ..., n+1, c, d)``
    """
    u = grid.check_nodal(u)
    d, n = grid.d, grid.n
    nb = u.ndim - d - 1
    pad = [(0, 0)] * nb + [(1, 1)] * d + [(0, 0)]
    U = np.pad(u, pad)
    lead = (slice(None),) * nb
    out = []
    for corner in corner_variants(d):
        cols = []
        for j in range(d):
            hi = U[lead + _slices(d, n, corner, j, True)]
            lo = U[lead + _slices(d, n, corner, j, False)]
            cols.append(hi - lo)
        out.append(np.stack(cols, axis=-1))
    return np.stack(out, axis=nb) / grid.dx


def jacobian_transpose(P, grid):
    """Euclidean transpose of :func:`jacobian`."""
    P = np.asarray(P, dtype=float)
    d, n = grid.d, grid.n
    variants = corner_variants(d)
    nb = P.ndim - d - 3
    if nb < 0 or P.shape[nb] != len(variants) or P.shape[nb + 1:nb + 1 + d] != grid.cell_shape:
        raise ValueError(f"quadrature field has incompatible shape {P.shape}")
    batch = P.shape[:nb]
    c = P.shape[-2]
    U = np.zeros(batch + (n + 2,) * d + (c,))
    lead = (slice(None),) * nb
    for v, corner in enumerate(variants):
        for j in range(d):
            D = P[lead + (v,) + (Ellipsis, j)]
            U[lead + _slices(d, n, corner, j, True)] += D
            U[lead + _slices(d, n, corner, j, False)] -= D
    inner = (slice(1, n + 1),) * d
    return U[lead + inner] / grid.dx


def divergence(P, grid):
    """Row-wise divergence ``(div P)_i = sum_j d_j P_ij`` on the interior nodes.

    Exact negative adjoint of :func:`jacobian` under the nodal and
    quadrature inner products.
    """
    return -jacobian_transpose(P, grid) / grid.n_variants


def quadrature_inner(P, Q, grid):
    """Quadrature-point inner product of two matrix fields (space only).

    Leading batch axes before the variant axis are kept.
    """
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    axes = tuple(range(P.ndim - grid.d - 3, P.ndim))
    return np.sum(P * Q, axis=axes) * grid.node_volume / grid.n_variants


def inner_product_L2(a, b, grid, domain="space"):
    """Discrete L2 inner product of two nodal fields.

    ``domain="space"`` pairs single time slices (any leading batch axes are
    kept); ``domain="spacetime"`` expects full ``(m + 1, ...)`` fields and
    applies the trapezoidal rule in time.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if domain == "space":
        axes = tuple(range(a.ndim - grid.d - 1, a.ndim))
        return np.sum(a * b, axis=axes) * grid.node_volume
    if domain == "spacetime":
        if a.shape[0] != grid.m + 1:
            raise ValueError(f"expected {grid.m + 1} time levels, got {a.shape[0]}")
        per_step = inner_product_L2(a, b, grid, "space")
        return float(np.dot(grid.time_weights(), per_step))
    raise ValueError(f"unknown domain {domain!r}")
