"""Uniform spatial grids and complex field storage.

All quantities are expressed in trap oscillator units: lengths in
sqrt(hbar/(m*omega)), times in 1/omega, energies in hbar*omega.  Grids are
uniform, symmetric about the origin and periodic as seen by the spectral
transforms; integrals use uniform (trapezoidal-on-periodic) weights
spacing**dimension.

Wavenumber convention: ``wavenumbers = 2*pi*fftfreq(n, d=spacing)``, i.e.
unshifted FFT ordering as used by ``scipy.fft`` throughout the propagators,
with max |k| = pi/spacing at the Nyquist index n//2.
"""

import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .errors import ConfigurationError, GridMismatchError

_MAGIC = b"BWF1"


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform 1D or 2D grid centered at the origin.

    2D fields are stored row-major with the first index along x and the
    second along y: amplitudes[i, j] lives at (axis[i], axis[j]).
    """

    dimension: int
    points_per_axis: int
    half_width: float
    spacing: float
    axis: np.ndarray = field(repr=False)
    wavenumbers: np.ndarray = field(repr=False)

    def _key(self):
        return (self.dimension, self.points_per_axis, self.half_width)

    def __eq__(self, other):
        return isinstance(other, Grid) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    @property
    def shape(self):
        return (self.points_per_axis,) * self.dimension

    @property
    def size(self):
        return self.points_per_axis ** self.dimension

    @property
    def cell_volume(self):
        return self.spacing ** self.dimension

    def meshes(self):
        """Coordinate arrays broadcastable against a field: x (1D) or (X, Y)."""
        if self.dimension == 1:
            return (self.axis,)
        return (self.axis[:, None], self.axis[None, :])


def make_grid(dimension: int, points_per_axis: int, half_width: float) -> Grid:
    """Build a uniform grid with spectral wavenumbers.

    points_per_axis must be a power of two >= 8 so the FFT-based
    propagators and eigensolvers get their preferred sizes.
    """
    if dimension not in (1, 2):
        raise ConfigurationError(f"dimension must be 1 or 2, got {dimension}")
    n = int(points_per_axis)
    if n < 8 or (n & (n - 1)) != 0:
        raise ConfigurationError(
            f"points_per_axis must be a power of two >= 8, got {points_per_axis}"
        )
    if not (half_width > 0):
        raise ConfigurationError(f"half_width must be positive, got {half_width}")
    spacing = 2.0 * half_width / n
    # Half-integer offsets make the point set exactly symmetric about the
    # origin, so parity flips and 90-degree rotations are exact array ops.
    axis = (np.arange(n) - (n - 1) / 2.0) * spacing
    wavenumbers = 2.0 * np.pi * sfft.fftfreq(n, d=spacing)
    return Grid(dimension, n, float(half_width), spacing, axis, wavenumbers)


@dataclass(frozen=True, eq=False)
class WaveField:
    """Complex amplitudes sampled on a grid.

    Treated as immutable: operations return new fields, and propagators
    work on private copies of the amplitude array.
    """

    grid: Grid
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.amplitudes.shape != self.grid.shape:
            raise GridMismatchError(
                f"amplitude shape {self.amplitudes.shape} does not match "
                f"grid shape {self.grid.shape}"
            )


def wavefield(grid: Grid, amplitudes: np.ndarray, renormalize: bool = False) -> WaveField:
    """Wrap an amplitude array as a WaveField, optionally normalizing it."""
    f = WaveField(grid, np.ascontiguousarray(amplitudes, dtype=np.complex128))
    return normalize(f) if renormalize else f


def norm(f: WaveField) -> float:
    """L2 norm sqrt(sum |psi_i|^2 * spacing^dim)."""
    a = f.amplitudes
    return float(np.sqrt(np.vdot(a, a).real * f.grid.cell_volume))


def normalize(f: WaveField) -> WaveField:
    """Rescale to unit L2 norm.

    Exactly idempotent: fields already normalized to within a few ulp are
    returned unchanged, so normalize(normalize(psi)) is normalize(psi).
    """
    n = norm(f)
    if n == 0.0:
        raise ValueError("cannot normalize a zero field")
    if abs(n - 1.0) < 8 * np.finfo(float).eps:
        return f
    return WaveField(f.grid, f.amplitudes / n)


def inner_product(a: WaveField, b: WaveField) -> complex:
    """<a|b> = sum conj(a_i) b_i * spacing^dim (conjugate-linear in a)."""
    if a.grid is not b.grid and a.grid != b.grid:
        raise GridMismatchError("inner_product requires fields on the same grid")
    return complex(np.vdot(a.amplitudes, b.amplitudes) * a.grid.cell_volume)


def overlap_sq(a: WaveField, b: WaveField) -> float:
    """Squared overlap |<a|b>|^2 (the population transfer diagnostic)."""
    return abs(inner_product(a, b)) ** 2


def save_field(path, f: WaveField) -> None:
    """Binary dump: magic 'BWF1', uint32 dimension, uint32 points_per_axis,
    float64 half_width, then little-endian float64 (re, im) pairs row-major."""
    a = f.amplitudes
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IId", f.grid.dimension, f.grid.points_per_axis,
                             f.grid.half_width))
        inter = np.empty(a.size * 2, dtype="<f8")
        inter[0::2] = a.real.ravel()
        inter[1::2] = a.imag.ravel()
        fh.write(inter.tobytes())


def load_field(path) -> WaveField:
    """Read a field written by save_field, rebuilding its grid."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ConfigurationError(f"{path}: not a field dump (magic {magic!r})")
        dim, n, half_width = struct.unpack("<IId", fh.read(16))
        grid = make_grid(dim, n, half_width)
        inter = np.frombuffer(fh.read(), dtype="<f8")
        if inter.size != 2 * grid.size:
            raise ConfigurationError(f"{path}: truncated field dump")
        a = (inter[0::2] + 1j * inter[1::2]).reshape(grid.shape)
        return WaveField(grid, a)
