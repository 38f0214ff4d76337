"""Single-particle spectra of the trap-plus-dip Hamiltonian.

The operator is H = -(1/2) laplacian + V [- Omega * L_z in 2D] with
L_z = -i (x d/dy - y d/dx).  The kinetic term is spectral (Fourier
collocation), the potential diagonal, and L_z mixed: each of x d/dy and
y d/dx is spectral along one axis and diagonal along the other, which makes
the discrete L_z exactly Hermitian on the periodic grid and keeps spectra
consistent with the split-step propagators.

1D problems are diagonalized densely (robust next to the narrow avoided
crossings); 2D problems use Lanczos iteration on the FFT-applied operator.
"""

import dataclasses
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
import scipy.linalg
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, NoCrossingError
from .grids import Grid, WaveField, inner_product, wavefield
from .potentials import PotentialSpec, potential_1d, potential_2d

_KINETIC_CACHE: dict = {}


def kinetic_matrix_1d(grid: Grid) -> np.ndarray:
    """Dense Fourier-collocation matrix of -(1/2) d^2/dx^2 (real symmetric)."""
    key = (grid.points_per_axis, grid.half_width)
    cached = _KINETIC_CACHE.get(key)
    if cached is not None:
        return cached
    half_k2 = 0.5 * grid.wavenumbers ** 2
    t = sfft.ifft(half_k2[:, None] * sfft.fft(np.eye(grid.points_per_axis), axis=0), axis=0)
    t = 0.5 * (t.real + t.real.T)
    _KINETIC_CACHE[key] = t
    return t


@dataclass(frozen=True)
class LinearOperatorSpec:
    """H = -(1/2) laplacian + V(potential at its x0) - Omega * L_z (2D)."""

    grid: Grid
    potential: PotentialSpec
    Omega: float | None = None

    @property
    def omega_eff(self) -> float:
        return self.potential.Omega if self.Omega is None else self.Omega

    def with_x0(self, x0: float) -> "LinearOperatorSpec":
        return LinearOperatorSpec(
            self.grid, dataclasses.replace(self.potential, x0=x0), self.Omega
        )


def potential_grid(spec: PotentialSpec, grid: Grid, x0: float | None = None) -> np.ndarray:
    """Potential sampled on the full grid (1D vector or 2D array)."""
    if spec.dimension == 1:
        return potential_1d(grid.axis, spec, x0)
    x, y = grid.meshes()
    return potential_2d(x, y, spec, x0)


def apply_hamiltonian(op: LinearOperatorSpec, a: np.ndarray,
                      v: np.ndarray | None = None) -> np.ndarray:
    """Apply H to an amplitude array (not a WaveField; hot path).

    v overrides the potential array so callers can add diagonal terms such
    as the mean-field g|phi|^2.
    """
    grid = op.grid
    if v is None:
        v = potential_grid(op.potential, grid)
    k = grid.wavenumbers
    if grid.dimension == 1:
        out = sfft.ifft(0.5 * k ** 2 * sfft.fft(a))
        out += v * a
        return out
    half_k2 = 0.5 * (k[:, None] ** 2 + k[None, :] ** 2)
    out = sfft.ifft2(half_k2 * sfft.fft2(a))
    out += v * a
    omega = op.omega_eff
    if omega != 0.0:
        x, y = grid.meshes()
        da_dy = sfft.ifft(1j * k[None, :] * sfft.fft(a, axis=1), axis=1)
        da_dx = sfft.ifft(1j * k[:, None] * sfft.fft(a, axis=0), axis=0)
        # -Omega * L_z a with L_z = -i (x d/dy - y d/dx)
        out += 1j * omega * (x * da_dy - y * da_dx)
    return out


def angular_momentum_expectation(f: WaveField) -> float:
    """<L_z> for a normalized 2D field; real up to discretization roundoff."""
    grid = f.grid
    a = f.amplitudes
    k = grid.wavenumbers
    x, y = grid.meshes()
    da_dy = sfft.ifft(1j * k[None, :] * sfft.fft(a, axis=1), axis=1)
    da_dx = sfft.ifft(1j * k[:, None] * sfft.fft(a, axis=0), axis=0)
    lz_a = -1j * (x * da_dy - y * da_dx)
    return float(np.vdot(a, lz_a).real * grid.cell_volume)


@dataclass(frozen=True)
class EigenPair:
    energy: float
    state: WaveField
    residual_norm: float


def _residual_norm(op: LinearOperatorSpec, v: np.ndarray, a: np.ndarray, e: float) -> float:
    r = apply_hamiltonian(op, a, v) - e * a
    return float(np.sqrt(np.vdot(r, r).real * op.grid.cell_volume))


def lowest_eigenpairs(op: LinearOperatorSpec, count: int,
                      tol: float = 1e-10, maxiter: int | None = None) -> list[EigenPair]:
    """The `count` lowest eigenpairs of H, ascending in energy."""
    grid = op.grid
    if count < 1 or count >= grid.size // 4:
        raise ValueError(f"count must satisfy 1 <= count << grid size, got {count}")
    v = potential_grid(op.potential, grid)
    if grid.dimension == 1:
        h = kinetic_matrix_1d(grid) + np.diag(v)
        energies, vectors = scipy.linalg.eigh(h, subset_by_index=[0, count - 1])
        columns = [vectors[:, i].astype(complex) for i in range(count)]
    else:
        n2 = grid.size
        shape2 = grid.shape

        def matvec(flat):
            return apply_hamiltonian(op, flat.reshape(shape2), v).ravel()

        linop = spla.LinearOperator((n2, n2), matvec=matvec, dtype=complex)
        x0_guess = np.exp(-0.5 * (grid.meshes()[0] ** 2 + grid.meshes()[1] ** 2)).ravel()
        try:
            energies, vectors = spla.eigsh(
                linop, k=count, which="SA", tol=tol,
                v0=x0_guess.astype(complex), ncv=min(grid.size, max(48, 4 * count)),
                maxiter=maxiter,
            )
        except spla.ArpackNoConvergence as exc:
            raise ConvergenceError(
                f"Lanczos iteration did not converge ({exc}); "
                f"converged {len(exc.eigenvalues)} of {count} eigenvalues",
                history=exc.eigenvalues,
            ) from exc
        order = np.argsort(energies)
        energies = energies[order]
        columns = [vectors[:, i].reshape(shape2) for i in order]

    pairs = []
    for e, col in zip(energies, columns):
        state = wavefield(grid, col.reshape(grid.shape), renormalize=True)
        res = _residual_norm(op, v, state.amplitudes, float(e))
        pairs.append(EigenPair(float(e), state, res))
    return pairs


@dataclass
class LevelCurve:
    """Energies of one spectral level along an x0 scan."""

    label: str
    x0_values: np.ndarray
    energies: np.ndarray
    states: list | None = field(default=None, repr=False)


def level_scan(op: LinearOperatorSpec, x0_values, count: int,
               keep_states: bool = False, tol: float = 1e-10) -> list[LevelCurve]:
    """Scan this operator's `count` lowest levels over x0.

    Levels are connected by sorted energy, which cannot produce spurious
    crossings for same-symmetry levels of the linear problem; use
    track_levels_by_overlap for the diabatic view near a narrow crossing.
    """
    x0_values = np.asarray(x0_values, dtype=float)
    if x0_values.size >= 2:
        steps = np.diff(x0_values)
        if not (np.all(steps > 0) or np.all(steps < 0)):
            raise ValueError("x0_values must be monotone")
    energies = np.empty((x0_values.size, count))
    states: list[list[WaveField]] | None = [] if keep_states else None
    for i, x0 in enumerate(x0_values):
        try:
            pairs = lowest_eigenpairs(op.with_x0(float(x0)), count, tol=tol)
        except ConvergenceError as exc:
            raise ConvergenceError(f"eigensolve failed at x0 = {x0}: {exc}",
                                   history=exc.history) from exc
        energies[i] = [p.energy for p in pairs]
        if states is not None:
            states.append([p.state for p in pairs])
    return [
        LevelCurve(
            f"E_{j}", x0_values.copy(), energies[:, j],
            None if states is None else [row[j] for row in states],
        )
        for j in range(count)
    ]


def track_levels_by_overlap(curves: list[LevelCurve]) -> np.ndarray:
    """Diabatic reordering cross-check: follow eigenvectors by max overlap.

    Requires curves produced with keep_states=True.  Returns an energy array
    of shape (n_x0, n_levels) where column j follows the state that
    continuously overlaps the j-th initial eigenvector.
    """
    if any(c.states is None for c in curves):
        raise ValueError("track_levels_by_overlap needs curves with keep_states=True")
    n_pts = curves[0].x0_values.size
    n_lev = len(curves)
    energies = np.column_stack([c.energies for c in curves])
    out = np.empty_like(energies)
    out[0] = energies[0]
    perm = np.arange(n_lev)
    prev = [curves[j].states[0] for j in range(n_lev)]
    for i in range(1, n_pts):
        here = [curves[j].states[i] for j in range(n_lev)]
        ov = np.array([[abs(inner_product(p, h)) for h in here] for p in prev])
        assign = -np.ones(n_lev, dtype=int)
        for _ in range(n_lev):
            r, c = np.unravel_index(np.argmax(ov), ov.shape)
            assign[r] = c
            ov[r, :] = -1.0
            ov[:, c] = -1.0
        perm = assign[perm]
        out[i] = energies[i][perm]
        prev = [here[c] for c in assign]
    return out


def find_avoided_crossing(curve_a: LevelCurve, curve_b: LevelCurve) -> tuple[float, float]:
    """Location and size of the minimal gap between two adjacent levels.

    The gap^2 of a two-level crossing is exactly quadratic in x0, so the
    refinement fits a parabola to gap^2 through the discrete minimum and
    its neighbors and reports the vertex.
    """
    if curve_a.x0_values.shape != curve_b.x0_values.shape or \
            not np.allclose(curve_a.x0_values, curve_b.x0_values):
        raise ValueError("curves must share the same x0 sampling")
    x = curve_a.x0_values
    gap = np.abs(curve_b.energies - curve_a.energies)
    interior = (gap[1:-1] < gap[:-2]) & (gap[1:-1] < gap[2:])
    idx = np.nonzero(interior)[0] + 1
    if idx.size == 0:
        raise NoCrossingError("gap has no interior local minimum along the scan")
    i = idx[np.argmin(gap[idx])]
    g2 = gap ** 2
    x3, y3 = x[i - 1:i + 2], g2[i - 1:i + 2]
    denom = (x3[0] - x3[1]) * (x3[0] - x3[2]) * (x3[1] - x3[2])
    a = (x3[2] * (y3[1] - y3[0]) + x3[1] * (y3[0] - y3[2]) + x3[0] * (y3[2] - y3[1])) / denom
    b = (x3[2] ** 2 * (y3[0] - y3[1]) + x3[1] ** 2 * (y3[2] - y3[0])
         + x3[0] ** 2 * (y3[1] - y3[2])) / denom
    c = (x3[1] * x3[2] * (x3[1] - x3[2]) * y3[0] + x3[2] * x3[0] * (x3[2] - x3[0]) * y3[1]
         + x3[0] * x3[1] * (x3[0] - x3[1]) * y3[2]) / denom
    if a <= 0:
        return float(x[i]), float(gap[i])
    x_star = -b / (2 * a)
    if not (x3[0] <= x_star <= x3[2]):
        return float(x[i]), float(gap[i])
    g_min = np.sqrt(max(c - b * b / (4 * a), 0.0))
    return float(x_star), float(g_min)


def write_level_scan_csv(path, curves: list[LevelCurve]) -> None:
    """CSV with columns x0, E_0 ... E_{count-1}, one row per x0."""
    x = curves[0].x0_values
    header = "x0," + ",".join(c.label for c in curves)
    data = np.column_stack([x] + [c.energies for c in curves])
    np.savetxt(path, data, delimiter=",", header=header, comments="")
