"""Analytic harmonic-oscillator states sampled on a grid.

Used as propagation targets in the non-interacting cases, as seeds for the
nonlinear stationary solver, and as exact references in tests.
"""

import math

import numpy as np

from .grids import Grid, WaveField, wavefield


def hermite_functions(x: np.ndarray, n_max: int) -> np.ndarray:
    """Normalized oscillator eigenfunctions h_0..h_{n_max} at points x.

    Stable three-term recurrence on the normalized functions:
    h_{n+1} = sqrt(2/(n+1)) x h_n - sqrt(n/(n+1)) h_{n-1}.
    Returns an array of shape (n_max + 1, len(x)).
    """
    out = np.empty((n_max + 1, x.size))
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if n_max >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(1, n_max):
        out[n + 1] = (math.sqrt(2.0 / (n + 1)) * x * out[n]
                      - math.sqrt(n / (n + 1.0)) * out[n - 1])
    return out


def ho_state_1d(grid: Grid, n: int) -> WaveField:
    """n-th 1D oscillator eigenstate (energy n + 1/2), unit-normalized on the grid."""
    h = hermite_functions(grid.axis, n)[n]
    return wavefield(grid, h.astype(complex), renormalize=True)


def ho_state_2d(grid: Grid, nx: int, ny: int) -> WaveField:
    """Cartesian product eigenstate of the 2D oscillator (energy nx + ny + 1)."""
    hx = hermite_functions(grid.axis, nx)[nx]
    hy = hermite_functions(grid.axis, ny)[ny]
    return wavefield(grid, np.outer(hx, hy).astype(complex), renormalize=True)


def vortex_state_2d(grid: Grid, l: int) -> WaveField:
    """Circular 2D oscillator state (x + iy)^l exp(-r^2/2), n_r = 0.

    Eigenstate with energy l + 1 and angular momentum <L_z> = l (l >= 0).
    """
    if l < 0:
        raise ValueError("vortex_state_2d expects l >= 0")
    x, y = grid.meshes()
    a = (x + 1j * y) ** l * np.exp(-0.5 * (x * x + y * y))
    return wavefield(grid, a, renormalize=True)
