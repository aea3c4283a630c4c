"""Reference problems used by the acceptance suite, the demos and the CLI presets."""

import numpy as np

from .energy import (EnergyDictionary, EnergyEntry, QuadraticForm, SaturatingForm,
                     SpatialWeight, partition_weights)
from .forward import ProblemSetup
from .grid import Grid, MaterialField

__all__ = [
    "ALPHA_TRUE",
    "ALPHA_START",
    "INITIAL_PRESETS",
    "initial_displacement",
    "reference_dictionary",
    "reference_setup",
    "lipschitz_setup",
    "standing_wave_setup",
    "standing_wave_exact",
    "twin_setup",
]

ALPHA_TRUE = np.array([1.0, 1.5, 0.8])
ALPHA_START = np.array([1.0, 1.0, 1.0])


def _bump(x, amplitude=0.4):
    d = x.shape[-1]
    return amplitude * np.prod(np.sin(np.pi * x), axis=-1)[..., None] * np.ones(d)


def _two_modes(x, amplitude=1.0):
    d = x.shape[-1]
    s = np.sin(np.pi * x[..., 0]) + 0.5 * np.sin(2 * np.pi * x[..., 0])
    for a in range(1, d):
        s = s * np.sin(np.pi * x[..., a])
    return amplitude * s[..., None] * np.ones(d)


def _zero(x, amplitude=0.0):
    return np.zeros(x.shape)


INITIAL_PRESETS = {"bump": _bump, "two_modes": _two_modes, "zero": _zero}


def initial_displacement(grid, preset="bump", amplitude=None):
    """Nodal initial data from a named analytic preset."""
    try:
        fn = INITIAL_PRESETS[preset]
    except KeyError:
        raise ValueError(f"unknown initial-data preset {preset!r}; choose from {sorted(INITIAL_PRESETS)}")
    x = grid.nodes()
    return fn(x) if amplitude is None else fn(x, amplitude)


def reference_dictionary(d, n_entries=2, nonlinear=True, eps=0.5):
    """Entries on disjoint slabs; saturating ``(1, 0.2, 0.3)`` or quadratic ``(1, 0.2, 0.3)``."""
    form = SaturatingForm(1.0, 0.2, 0.3, eps=eps) if nonlinear else QuadraticForm(1.0, 0.2, 0.3)
    return EnergyDictionary([EnergyEntry(form, w, d) for w in partition_weights(n_entries, d)])


def reference_setup(d=1, n=16, m=64, T=0.5, nonlinear=True, alpha=(1.0, 1.3), amplitude=0.4):
    """Bump initial displacement, unit density, two-entry dictionary."""
    grid = Grid(d, n, T, m)
    dictionary = reference_dictionary(d, len(alpha), nonlinear)
    u0 = initial_displacement(grid, "bump", amplitude)
    return ProblemSetup(grid, MaterialField.uniform(grid), dictionary, alpha, u0=u0)


def lipschitz_setup(nonlinear, n=16, m=64, T=0.5):
    """One-dimensional, spatially constant entries whose bounds pass the
    dimension condition ``7/8 mu < kappa < 9/8 mu``.

    Two entries with different forms so that ``alpha`` enters non-trivially;
    the saturating part is kept small (``eps = 0.02``) because the sampled
    bounds separate ``kappa`` and ``mu`` by the nonlinear range.
    """
    grid = Grid(1, n, T, m)
    w = SpatialWeight.constant(1)
    if nonlinear:
        forms = [SaturatingForm(1.0, eps=0.02), SaturatingForm(0.6, eps=0.02)]
    else:
        forms = [QuadraticForm(1.0), QuadraticForm(0.6)]
    dictionary = EnergyDictionary([EnergyEntry(f, w, 1) for f in forms])
    u0 = initial_displacement(grid, "bump", 0.4)
    return ProblemSetup(grid, MaterialField.uniform(grid), dictionary, (1.0, 0.7), u0=u0)


def standing_wave_setup(n_cells, cfl=0.5):
    """``u = sin(pi x) cos(sqrt(2) pi t)`` on ``[0, sqrt(2)]`` (one period),
    energy ``|Y|^2`` so the wave speed is ``sqrt(2)``."""
    T = np.sqrt(2.0)
    c = np.sqrt(2.0)
    dx = 1.0 / n_cells
    m = int(np.ceil(T * c / (cfl * dx)))
    grid = Grid(1, n_cells - 1, T, m)
    dictionary = EnergyDictionary([EnergyEntry(QuadraticForm(1.0), SpatialWeight.constant(1), 1)])
    u0 = np.sin(np.pi * grid.nodes())
    return ProblemSetup(grid, MaterialField.uniform(grid), dictionary, [1.0], u0=u0)


def standing_wave_exact(grid):
    x = grid.nodes()
    return np.sin(np.pi * x)[None] * np.cos(np.sqrt(2.0) * np.pi * grid.times)[:, None, None]


def twin_setup(n=16, m=64, T=0.5):
    """Three quadratic entries on thirds of the interval, two-mode initial data."""
    grid = Grid(1, n, T, m)
    dictionary = EnergyDictionary([EnergyEntry(QuadraticForm(1.0), w, 1) for w in partition_weights(3, 1)])
    u0 = initial_displacement(grid, "two_modes", 1.0)
    return ProblemSetup(grid, MaterialField.uniform(grid), dictionary, ALPHA_TRUE, u0=u0)
