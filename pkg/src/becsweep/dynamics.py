"""Time propagation of the mean-field condensate equation.

Real-time evolution of i d(psi)/dt = [-(1/2) laplacian + V(t) + g |psi|^2] psi
(plus -Omega L_z in the 2D rotating frame) under sweep schedules, and
imaginary-time relaxation to the interacting ground state.

The workhorse is Strang-split spectral stepping: kinetic factors applied in
Fourier space, potential and mean-field factors pointwise, with the swept
potential evaluated at the midpoint of each step.  Every factor is unitary,
so the norm is conserved to rounding.  In the 2D rotating frame the
kinetic-plus-rotation generator splits per axis into kx^2/2 + Omega*y*kx
(diagonal after an x-transform) and ky^2/2 - Omega*x*ky (diagonal after a
y-transform); each substep is again exactly unitary.  In the lab frame the
dip center itself rotates and the kinetic factor is a plain 2D transform.

A Crank-Nicolson finite-difference integrator (1D) is kept purely as an
independent oracle for cross-checking the spectral results.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
import scipy.linalg

import dataclasses

from .errors import ConfigurationError, ConvergenceError, PropagationError
from .grids import Grid, WaveField, inner_product, norm, wavefield
from .potentials import (PotentialSpec, SweepSchedule, dip_coefficient,
                         lab_frame_dip_center, lab_frame_potential_2d,
                         schedule_position)
from .spectrum import angular_momentum_expectation, potential_grid
from .stationary import StationaryState, refine_stationary, residual

_DT_POTENTIAL_WARN = 0.1


@dataclass
class PropagationConfig:
    """Numerical parameters of a propagation run.

    frame applies to 2D only: "rotating" propagates with the static dip and
    the -Omega L_z term; "lab" rotates the dip center and drops the L_z
    term.  Both give the same |overlap| diagnostics against angular
    momentum eigenstates.
    """

    dt: float = 1e-3
    g: float = 0.0
    method: str = "split-step"
    frame: str = "rotating"
    record_stride: int = 200

    def __post_init__(self):
        if not (self.dt > 0):
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if self.method not in ("split-step", "crank-nicolson"):
            raise ConfigurationError(f"unknown method {self.method!r}")
        if self.frame not in ("rotating", "lab"):
            raise ConfigurationError(f"unknown frame {self.frame!r}")
        if self.record_stride < 1:
            raise ConfigurationError("record_stride must be >= 1")


@dataclass
class Trajectory:
    """Diagnostics recorded along a propagation."""

    times: np.ndarray
    norm_series: np.ndarray
    energy_series: np.ndarray
    lz_series: np.ndarray | None
    overlaps: dict[str, np.ndarray]
    pass_times: list[float]
    pass_states: list[WaveField]
    final_state: WaveField

    def overlap_sq(self, name: str) -> np.ndarray:
        return np.abs(self.overlaps[name]) ** 2

    def pass_overlap_sq(self, name: str) -> list[float]:
        """|overlap|^2 against one target at each pass boundary."""
        series = self.overlaps[name]
        idx = [int(np.argmin(np.abs(self.times - t))) for t in self.pass_times]
        return [float(abs(series[i]) ** 2) for i in idx]


def write_trajectory_csv(path, traj: Trajectory) -> None:
    """CSV with t, norm, energy, |overlap|^2 columns, Lz (2D)."""
    cols = [traj.times, traj.norm_series, traj.energy_series]
    names = ["t", "norm", "energy"]
    for key in sorted(traj.overlaps):
        cols.append(np.abs(traj.overlaps[key]) ** 2)
        names.append(f"p_{key}")
    if traj.lz_series is not None:
        cols.append(traj.lz_series)
        names.append("Lz")
    np.savetxt(path, np.column_stack(cols), delimiter=",",
               header=",".join(names), comments="")


# ---------------------------------------------------------------------------
# energy / observable functionals


def _kinetic_energy(a: np.ndarray, grid: Grid) -> float:
    k = grid.wavenumbers
    if grid.dimension == 1:
        ta = sfft.ifft(0.5 * k ** 2 * sfft.fft(a))
    else:
        half_k2 = 0.5 * (k[:, None] ** 2 + k[None, :] ** 2)
        ta = sfft.ifft2(half_k2 * sfft.fft2(a))
    return float(np.vdot(a, ta).real * grid.cell_volume)


def gp_energy(a: np.ndarray, v: np.ndarray, g: float, grid: Grid,
              omega: float = 0.0) -> float:
    """Mean-field energy <T> + <V> + (g/2) int |psi|^4 [- Omega <L_z>]."""
    dens = np.abs(a) ** 2
    e = _kinetic_energy(a, grid)
    e += float(np.sum(v * dens) * grid.cell_volume)
    e += 0.5 * g * float(np.sum(dens * dens) * grid.cell_volume)
    if omega != 0.0:
        e -= omega * angular_momentum_expectation(WaveField(grid, a))
    return e


def observables(state: WaveField, spec: PotentialSpec, g: float) -> dict:
    """norm, energy, chemical potential and (2D) <L_z> of a state.

    energy is the mean-field functional in the frame set by spec.Omega;
    the chemical potential adds the second half of the interaction term,
    mu = <H + g |psi|^2> = energy + (g/2) int |psi|^4.
    """
    grid = state.grid
    a = state.amplitudes
    v = potential_grid(spec, grid)
    dens = np.abs(a) ** 2
    quartic = float(np.sum(dens * dens) * grid.cell_volume)
    omega = spec.Omega if grid.dimension == 2 else 0.0
    energy = gp_energy(a, v, g, grid, omega)
    out = {
        "norm": norm(state),
        "energy": energy,
        "mu": energy + 0.5 * g * quartic,
    }
    if grid.dimension == 2:
        out["lz"] = angular_momentum_expectation(state)
    return out


# ---------------------------------------------------------------------------
# split-step engine


class _SplitStepEngine:
    """Precomputed factors for one (grid, spec, cfg) propagation.

    Owns no state; `psi` arrays are threaded through by the caller, which
    is the single writer during a run.
    """

    def __init__(self, grid: Grid, spec: PotentialSpec, cfg: PropagationConfig):
        self.grid = grid
        self.spec = spec
        self.cfg = cfg
        dt = cfg.dt
        k = grid.wavenumbers
        self.rotating = grid.dimension == 2 and cfg.frame == "rotating" and spec.Omega != 0.0
        if grid.dimension == 1:
            self.kin_full = np.exp(-0.5j * dt * k ** 2)
            self.kin_half = np.exp(-0.25j * dt * k ** 2)
            vharm = 0.5 * grid.axis ** 2
        elif not self.rotating:
            half_k2 = 0.5 * (k[:, None] ** 2 + k[None, :] ** 2)
            self.kin_full = np.exp(-1j * dt * half_k2)
            self.kin_half = np.exp(-0.5j * dt * half_k2)
            x, y = grid.meshes()
            vharm = 0.5 * (x * x + y * y)
        else:
            x, y = grid.meshes()
            ax = grid.axis
            gen_a = 0.5 * k[:, None] ** 2 + spec.Omega * ax[None, :] * k[:, None]
            gen_b = 0.5 * k[None, :] ** 2 - spec.Omega * ax[:, None] * k[None, :]
            self.a_full = np.exp(-1j * dt * gen_a)
            self.a_half = np.exp(-0.5j * dt * gen_a)
            self.b_full = np.exp(-1j * dt * gen_b)
            self.b_half = np.exp(-0.5j * dt * gen_b)
            vharm = 0.5 * (x * x + y * y)
        self.vharm = vharm
        self.vstat_factor = np.exp(-1j * dt * vharm)
        # static transverse dip profile (2D rotating frame: center stays on y=0)
        self.gauss_y = np.exp(-grid.axis ** 2 / (2.0 * spec.sigma ** 2))
        self.window = 9.0 * spec.sigma

    # kinetic factors ------------------------------------------------------

    def kin_begin(self, psi):
        if self.rotating:
            psi = sfft.ifft(self.a_half * sfft.fft(psi, axis=0), axis=0)
            psi = sfft.ifft(self.b_half * sfft.fft(psi, axis=1), axis=1)
            return psi
        if self.grid.dimension == 1:
            return sfft.ifft(self.kin_half * sfft.fft(psi))
        return sfft.ifft2(self.kin_half * sfft.fft2(psi))

    def kin_inner(self, psi):
        if self.rotating:
            psi = sfft.ifft(self.b_half * sfft.fft(psi, axis=1), axis=1)
            psi = sfft.ifft(self.a_full * sfft.fft(psi, axis=0), axis=0)
            psi = sfft.ifft(self.b_half * sfft.fft(psi, axis=1), axis=1)
            return psi
        if self.grid.dimension == 1:
            return sfft.ifft(self.kin_full * sfft.fft(psi))
        return sfft.ifft2(self.kin_full * sfft.fft2(psi))

    def kin_end(self, psi):
        if self.rotating:
            psi = sfft.ifft(self.b_half * sfft.fft(psi, axis=1), axis=1)
            psi = sfft.ifft(self.a_half * sfft.fft(psi, axis=0), axis=0)
            return psi
        if self.grid.dimension == 1:
            return sfft.ifft(self.kin_half * sfft.fft(psi))
        return sfft.ifft2(self.kin_half * sfft.fft2(psi))

    # potential + mean-field factor ---------------------------------------

    def _dip_indices(self, center: float):
        axis = self.grid.axis
        lo = np.searchsorted(axis, center - self.window)
        hi = np.searchsorted(axis, center + self.window)
        return lo, hi

    def apply_potential(self, psi, x0: float, dip_center, g: float):
        """In-place psi *= exp(-i dt (V + g|psi|^2)); dip windowed to 9 sigma."""
        dt = self.cfg.dt
        psi *= self.vstat_factor
        coeff = dip_coefficient(self.spec, x0)
        if coeff != 0.0:
            sigma2 = 2.0 * self.spec.sigma ** 2
            axis = self.grid.axis
            if self.grid.dimension == 1:
                lo, hi = self._dip_indices(dip_center[0])
                if hi > lo:
                    d = axis[lo:hi] - dip_center[0]
                    psi[lo:hi] *= np.exp(-1j * dt * coeff * np.exp(-d * d / sigma2))
            else:
                cx, cy = dip_center
                lo, hi = self._dip_indices(cx)
                lo2, hi2 = self._dip_indices(cy)
                if hi > lo and hi2 > lo2:
                    dx = axis[lo:hi] - cx
                    dy = axis[lo2:hi2] - cy
                    bump = np.exp(-dx * dx / sigma2)[:, None] * np.exp(-dy * dy / sigma2)[None, :]
                    psi[lo:hi, lo2:hi2] *= np.exp(-1j * dt * coeff * bump)
        if g != 0.0:
            psi *= np.exp(-1j * dt * g * np.abs(psi) ** 2)
        return psi


def _dip_center_at(t: float, spec: PotentialSpec, sched: SweepSchedule | None,
                   frame: str, static_x0: float):
    if sched is None:
        return static_x0, (static_x0, 0.0)
    total = sched.total_duration
    t = min(max(t, 0.0), total)
    x0 = schedule_position(t, sched)
    if spec.dimension == 2 and frame == "lab" and sched.Omega != 0.0:
        return x0, lab_frame_dip_center(t, sched)
    return x0, (x0, 0.0)


def _propagate_splitstep(initial, spec, sched, cfg, duration, targets):
    grid = initial.grid
    engine = _SplitStepEngine(grid, spec, cfg)
    dt = cfg.dt
    g = cfg.g
    static_x0 = spec.x0
    x0_ref = sched.x0_start if sched is not None else static_x0
    depth = abs(dip_coefficient(spec, x0_ref))
    if dt * depth > _DT_POTENTIAL_WARN:
        warnings.warn(
            f"dt * dip depth = {dt * depth:.3f} exceeds {_DT_POTENTIAL_WARN}; "
            "the potential factor rotates by a large phase per step",
            stacklevel=3,
        )

    n_steps = max(1, int(round(duration / dt)))
    if abs(n_steps * dt - duration) > 1e-9 * max(1.0, duration):
        n_steps = max(1, math.ceil(duration / dt - 1e-12))
    # records at stride boundaries plus pass boundaries and the final step
    record_steps = set(range(0, n_steps + 1, cfg.record_stride))
    record_steps.add(n_steps)
    pass_steps: dict[int, float] = {}
    if sched is not None:
        for p in range(1, sched.passes + 1):
            s = int(round(p * sched.pass_duration / dt))
            if 0 < s <= n_steps:
                pass_steps[s] = p * sched.pass_duration
                record_steps.add(s)
    omega_term = spec.Omega if engine.rotating else 0.0

    psi = initial.amplitudes.copy()
    times, norms, energies, lzs = [], [], [], []
    ov_series: dict[str, list] = {name: [] for name in (targets or {})}
    pass_times: list[float] = []
    pass_states: list[WaveField] = []

    def record(step, open_segment_psi):
        t = min(step * dt, duration)
        f = WaveField(grid, open_segment_psi.copy())
        nrm = norm(f)
        if not np.isfinite(nrm):
            raise PropagationError(
                f"non-finite amplitudes at t = {t:.4f}; dt = {dt} is too large"
            )
        if abs(nrm - 1.0) > 1e-6:
            raise PropagationError(
                f"norm drifted to {nrm!r} at t = {t:.4f} (unitarity lost)"
            )
        x0, _ = _dip_center_at(t, spec, sched, cfg.frame, static_x0)
        if spec.dimension == 2 and cfg.frame == "lab" and sched is not None \
                and sched.Omega != 0.0:
            x, y = grid.meshes()
            v = lab_frame_potential_2d(x, y, min(t, sched.total_duration), spec, sched)
        else:
            v = potential_grid(spec, grid, x0)
        times.append(t)
        norms.append(nrm)
        energies.append(gp_energy(open_segment_psi, v, g, grid, omega_term))
        if grid.dimension == 2:
            lzs.append(angular_momentum_expectation(f))
        for name, target in (targets or {}).items():
            ov_series[name].append(inner_product(target, f))
        if step in pass_steps:
            pass_times.append(pass_steps[step])
            pass_states.append(f)
        return f

    record(0, psi)
    step = 0
    while step < n_steps:
        # propagate one closed segment [step, seg_end] between records
        seg_end = min((s for s in record_steps if s > step))
        psi = engine.kin_begin(psi)
        s = step
        while s < seg_end:
            t_mid = (s + 0.5) * dt
            x0, center = _dip_center_at(t_mid, spec, sched, cfg.frame, static_x0)
            psi = engine.apply_potential(psi, x0, center, g)
            s += 1
            if s < seg_end:
                psi = engine.kin_inner(psi)
        psi = engine.kin_end(psi)
        step = seg_end
        last_field = record(step, psi)

    return Trajectory(
        times=np.asarray(times),
        norm_series=np.asarray(norms),
        energy_series=np.asarray(energies),
        lz_series=np.asarray(lzs) if grid.dimension == 2 else None,
        overlaps={k: np.asarray(v) for k, v in ov_series.items()},
        pass_times=pass_times,
        pass_states=pass_states,
        final_state=last_field,
    )


# ---------------------------------------------------------------------------
# Crank-Nicolson oracle (1D, finite differences, Dirichlet box)


def _cn_step_matrices(grid: Grid):
    n = grid.points_per_axis
    inv_dx2 = 1.0 / grid.spacing ** 2
    diag = np.full(n, inv_dx2)
    off = np.full(n - 1, -0.5 * inv_dx2)
    return diag, off


def _cn_propagate(initial, spec, sched, cfg, duration, targets):
    grid = initial.grid
    if grid.dimension != 1:
        raise ConfigurationError("the Crank-Nicolson oracle is 1D only")
    dt = cfg.dt
    g = cfg.g
    n = grid.points_per_axis
    kin_diag, kin_off = _cn_step_matrices(grid)
    n_steps = max(1, int(round(duration / dt)))
    record_steps = set(range(0, n_steps + 1, cfg.record_stride))
    record_steps.add(n_steps)

    psi = initial.amplitudes.copy()
    times, norms, energies = [], [], []
    ov_series: dict[str, list] = {name: [] for name in (targets or {})}

    ab = np.zeros((3, n), dtype=complex)

    def v_at(t):
        x0 = spec.x0 if sched is None else schedule_position(
            min(max(t, 0.0), sched.total_duration), sched)
        return potential_grid(spec, grid, x0)

    def record(step):
        t = min(step * dt, duration)
        f = WaveField(grid, psi.copy())
        nrm = norm(f)
        if not np.isfinite(nrm):
            raise PropagationError(f"non-finite amplitudes at t = {t:.4f}")
        times.append(t)
        norms.append(nrm)
        energies.append(gp_energy(psi, v_at(t), g, grid))
        for name, target in (targets or {}).items():
            ov_series[name].append(inner_product(target, f))
        return f

    last = record(0)
    for s in range(n_steps):
        t_mid = (s + 0.5) * dt
        v_mid = v_at(t_mid)
        dens_old = np.abs(psi) ** 2
        dens_mid = dens_old
        # midpoint density via fixed-point refinement of the implicit step
        for _ in range(3):
            h_diag = kin_diag + v_mid + g * dens_mid
            rhs = psi - 0.5j * dt * (h_diag * psi)
            rhs[:-1] -= 0.5j * dt * kin_off * psi[1:]
            rhs[1:] -= 0.5j * dt * kin_off * psi[:-1]
            ab[0, 1:] = 0.5j * dt * kin_off
            ab[1] = 1.0 + 0.5j * dt * h_diag
            ab[2, :-1] = 0.5j * dt * kin_off
            new = scipy.linalg.solve_banded((1, 1), ab, rhs)
            dens_mid = 0.5 * (dens_old + np.abs(new) ** 2)
        psi = new
        if (s + 1) in record_steps:
            last = record(s + 1)

    return Trajectory(
        times=np.asarray(times), norm_series=np.asarray(norms),
        energy_series=np.asarray(energies), lz_series=None,
        overlaps={k: np.asarray(v) for k, v in ov_series.items()},
        pass_times=[], pass_states=[], final_state=last,
    )


# ---------------------------------------------------------------------------
# public propagation API


def propagate(initial: WaveField, spec: PotentialSpec, sched: SweepSchedule,
              cfg: PropagationConfig,
              targets: dict[str, WaveField] | None = None) -> Trajectory:
    """Propagate through a sweep schedule; final_state is psi(T).

    targets is an optional name -> WaveField map; the complex overlap with
    each target is recorded every record_stride steps and at pass
    boundaries.
    """
    if spec.dimension != initial.grid.dimension:
        raise ConfigurationError("potential and field dimensions disagree")
    if cfg.method == "crank-nicolson":
        return _cn_propagate(initial, spec, sched, cfg, sched.total_duration, targets)
    return _propagate_splitstep(initial, spec, sched, cfg, sched.total_duration, targets)


def propagate_multi(initial: WaveField, spec: PotentialSpec, sched: SweepSchedule,
                    cfg: PropagationConfig,
                    targets: dict[str, WaveField] | None = None) -> Trajectory:
    """propagate() for multi-pass schedules; pass boundaries are recorded."""
    return propagate(initial, spec, sched, cfg, targets)


def propagate_2d_spiral(initial: WaveField, spec: PotentialSpec, sched: SweepSchedule,
                        cfg: PropagationConfig,
                        targets: dict[str, WaveField] | None = None) -> Trajectory:
    """2D sweep with rotation; cfg.frame picks the rotating or lab frame."""
    if spec.dimension != 2:
        raise ConfigurationError("propagate_2d_spiral requires a 2D spec")
    if cfg.frame == "lab" and sched.Omega == 0.0 and spec.Omega != 0.0:
        raise ConfigurationError("lab frame needs sched.Omega (the spiral rate)")
    return propagate(initial, spec, sched, cfg, targets)


def propagate_static(initial: WaveField, spec: PotentialSpec, duration: float,
                     cfg: PropagationConfig,
                     targets: dict[str, WaveField] | None = None) -> Trajectory:
    """Propagate in the static potential at spec.x0 (no sweep)."""
    if cfg.method == "crank-nicolson":
        return _cn_propagate(initial, spec, None, cfg, duration, targets)
    return _propagate_splitstep(initial, spec, None, cfg, duration, targets)


# ---------------------------------------------------------------------------
# imaginary-time relaxation


def _relax_ansatz(spec: PotentialSpec, g: float, grid: Grid) -> np.ndarray:
    v = potential_grid(spec, grid)
    if g > 0:
        mu_tf = (1.5 * g) ** (2.0 / 3.0) / 2.0 if grid.dimension == 1 \
            else math.sqrt(g / math.pi)
        dens = np.maximum(mu_tf - v, 0.0) / g
        a = np.sqrt(dens) + 1e-3 * np.exp(-v)
    else:
        r2 = sum(c * c for c in np.meshgrid(*(grid.axis,) * grid.dimension,
                                            indexing="ij")) if grid.dimension == 2 \
            else grid.axis ** 2
        a = np.exp(-0.5 * r2)
    return a.astype(complex)


def imaginary_time_ground_state(spec: PotentialSpec, g: float, grid: Grid,
                                tol: float = 1e-12, dt: float = 1e-3,
                                max_steps: int = 10 ** 6,
                                initial: WaveField | None = None,
                                residual_tol: float = 1e-8) -> StationaryState:
    """Ground state by imaginary-time split stepping with renormalization.

    Relaxes the non-rotating equation (no -Omega L_z term): the physical
    initial condensate is prepared before any stirring starts.  Runs a
    coarse pre-relaxation at 20x dt, then steps at dt until the relative
    change of the chemical-potential estimate between renormalized steps
    drops below tol.  Stepping at finite dt leaves an O(dt^2) stationarity
    defect, so the relaxed state is then polished by the defect minimizer
    down to residual_tol.  The returned mu is the functional
    <phi| H + g |phi|^2 |phi>.
    """
    if not (tol > 0):
        raise ConfigurationError("tol must be positive")
    spec = dataclasses.replace(spec, Omega=0.0)
    v = potential_grid(spec, grid)
    k = grid.wavenumbers
    if grid.dimension == 1:
        half_k2 = 0.5 * k ** 2
        fft, ifft = sfft.fft, sfft.ifft
    else:
        half_k2 = 0.5 * (k[:, None] ** 2 + k[None, :] ** 2)
        fft, ifft = sfft.fft2, sfft.ifft2

    a = (initial.amplitudes.copy() if initial is not None
         else _relax_ansatz(spec, g, grid))
    a /= math.sqrt(np.vdot(a, a).real * grid.cell_volume)

    mu_history: list[float] = []

    def relax(dtau, steps_limit, tol_local):
        nonlocal a
        kin_half = np.exp(-0.5 * dtau * half_k2)
        vfac = np.exp(-dtau * v)
        mu_prev = None
        for step in range(steps_limit):
            a[:] = ifft(kin_half * fft(a))
            if g != 0.0:
                a *= vfac * np.exp(-dtau * g * np.abs(a) ** 2)
            else:
                a *= vfac
            a[:] = ifft(kin_half * fft(a))
            nrm2 = np.vdot(a, a).real * grid.cell_volume
            a /= math.sqrt(nrm2)
            mu_est = -0.5 * math.log(nrm2) / dtau
            mu_history.append(mu_est)
            mu_ok = (mu_prev is not None
                     and abs(mu_est - mu_prev) < tol_local * max(1.0, abs(mu_est)))
            mu_prev = mu_est
            if mu_ok:
                return True
        return False

    relax(20.0 * dt, max_steps // 20, max(tol, 1e-10))
    converged = relax(dt, max_steps, tol)
    if not converged:
        raise ConvergenceError(
            f"imaginary-time relaxation did not reach tol={tol} in {max_steps} steps",
            history=np.asarray(mu_history),
        )
    state = wavefield(grid, a, renormalize=True)
    return refine_stationary(state, spec, g, tol=residual_tol)


def rotation_sector_project(f: WaveField, l: int) -> WaveField:
    """Project onto angular momentum l mod 4 using exact 90-degree rotations.

    The grid's half-integer offsets make np.rot90 an exact rotation of the
    point set, so this is an exact projector onto the L_z = l (mod 4)
    subspace of the discrete problem.
    """
    if f.grid.dimension != 2:
        raise ConfigurationError("sector projection is 2D only")
    a = f.amplitudes
    out = np.zeros_like(a)
    # np.rot90 rotates the point set by +90 degrees, multiplying an
    # angular-momentum-l state by exp(-i pi l / 2)
    for q in range(4):
        out += np.exp(0.5j * math.pi * q * l) * np.rot90(a, q)
    return wavefield(f.grid, out / 4.0, renormalize=True)


def imaginary_time_sector_2d(spec: PotentialSpec, g: float, grid: Grid, l: int,
                             tol: float = 1e-12, dt: float = 1e-3,
                             max_steps: int = 10 ** 6,
                             residual_tol: float = 1e-8) -> StationaryState:
    """Lowest stationary state in the L_z = l (mod 4) rotation sector.

    Requires a rotationally symmetric potential (dip amplitude zero), where
    the sector is exactly preserved; re-projection every few steps removes
    grid-level contamination.  Used to build vortex targets independently
    of the residual-minimization solver.  The relaxation runs without the
    rotation term; in a frame rotating at Omega the state's chemical
    potential is the returned mu minus Omega * l.
    """
    if dip_coefficient(spec) != 0.0:
        raise ConfigurationError("sector relaxation needs a symmetric potential")
    spec = dataclasses.replace(spec, Omega=0.0)
    from .oscillator import vortex_state_2d

    seed = rotation_sector_project(vortex_state_2d(grid, l), l)
    v = potential_grid(spec, grid)
    k = grid.wavenumbers
    half_k2 = 0.5 * (k[:, None] ** 2 + k[None, :] ** 2)
    a = seed.amplitudes.copy()

    for stage_dt, tol_local in ((20.0 * dt, max(tol, 1e-10)), (dt, tol)):
        kin_half = np.exp(-0.5 * stage_dt * half_k2)
        vfac = np.exp(-stage_dt * v)
        mu_prev = None
        for step in range(max_steps):
            a = sfft.ifft2(kin_half * sfft.fft2(a))
            a *= vfac * np.exp(-stage_dt * g * np.abs(a) ** 2) if g != 0.0 else vfac
            a = sfft.ifft2(kin_half * sfft.fft2(a))
            nrm2 = np.vdot(a, a).real * grid.cell_volume
            a /= math.sqrt(nrm2)
            if step % 16 == 0:
                a = rotation_sector_project(WaveField(grid, a), l).amplitudes.copy()
            mu_est = -0.5 * math.log(nrm2) / stage_dt
            mu_ok = (mu_prev is not None
                     and abs(mu_est - mu_prev) < tol_local * max(1.0, abs(mu_est)))
            mu_prev = mu_est
            if mu_ok:
                break
        else:
            raise ConvergenceError(f"sector relaxation stalled (l={l}, g={g})")
    relaxed = rotation_sector_project(WaveField(grid, a), l)
    polished = refine_stationary(relaxed, spec, g, tol=residual_tol)
    state = rotation_sector_project(polished.state, l)
    phi_res, mu, res_norm = residual(state, spec, g)
    return StationaryState(state=state, mu=mu, g=g, spec=spec, residual_norm=res_norm)


def crank_nicolson_ground_state_1d(spec: PotentialSpec, g: float, grid: Grid,
                                   tol: float = 1e-12, dtau: float = 1e-3,
                                   max_steps: int = 10 ** 6) -> tuple[WaveField, float]:
    """Independent imaginary-time oracle: finite differences + Crank-Nicolson.

    Returns (state, mu) with mu from the finite-difference functional, so the
    oracle shares no discretization with the spectral solvers.
    """
    n = grid.points_per_axis
    inv_dx2 = 1.0 / grid.spacing ** 2
    v = potential_grid(spec, grid)
    a = np.abs(_relax_ansatz(spec, g, grid)).astype(float)
    a /= math.sqrt(np.sum(a * a) * grid.cell_volume)
    ab = np.zeros((3, n))
    mu_prev = None
    for step in range(max_steps):
        dens = a * a
        h_diag = inv_dx2 + v + g * dens
        off = np.full(n - 1, -0.5 * inv_dx2)
        rhs = a - 0.5 * dtau * h_diag * a
        rhs[:-1] -= 0.5 * dtau * off * a[1:]
        rhs[1:] -= 0.5 * dtau * off * a[:-1]
        ab[0, 1:] = 0.5 * dtau * off
        ab[1] = 1.0 + 0.5 * dtau * h_diag
        ab[2, :-1] = 0.5 * dtau * off
        a = scipy.linalg.solve_banded((1, 1), ab, rhs)
        nrm2 = np.sum(a * a) * grid.cell_volume
        a /= math.sqrt(nrm2)
        mu_est = -0.5 * math.log(nrm2) / dtau
        if mu_prev is not None and abs(mu_est - mu_prev) < tol * max(1.0, abs(mu_est)):
            break
        mu_prev = mu_est
    else:
        raise ConvergenceError("Crank-Nicolson relaxation did not converge")
    # finite-difference chemical potential functional
    lap = np.zeros_like(a)
    lap[1:-1] = (a[2:] - 2 * a[1:-1] + a[:-2]) * inv_dx2
    lap[0] = (a[1] - 2 * a[0]) * inv_dx2
    lap[-1] = (a[-2] - 2 * a[-1]) * inv_dx2
    dens = a * a
    mu = float(np.sum(-0.5 * a * lap + (v + g * dens) * dens) * grid.cell_volume)
    return wavefield(grid, a.astype(complex), renormalize=True), mu
