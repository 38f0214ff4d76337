"""Stationary states of the interacting condensate and their level branches.

A normalized field phi with chemical potential mu solves
H phi + g |phi|^2 phi = mu phi.  Solutions are found by minimizing the
squared norm of the defect

    defect = H phi + g |phi|^2 phi - mu_t phi,
    mu_t   = <phi| H + g |phi|^2 |phi>,

over normalized fields: the minimized quantity <defect|defect> vanishes
exactly at a stationary state, and mu_t is the chemical potential there.
The minimizer is preconditioned nonlinear conjugate gradient with an
analytic gradient; normalization is enforced by evaluating the functional
on v / ||v||, which retracts every iterate to the unit sphere.

1D solves work directly on grid values; 2D solves expand the field in a
truncated harmonic-oscillator product basis, which keeps the Hessian
spectrum bounded by the basis cutoff.

Branches mu(x0) are traced with pseudo-arclength continuation (predictor
along the branch tangent, Newton corrector on the bordered system), which
walks through turning points in x0, so multivalued level structures are
traversed as single connected curves.
"""

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
import scipy.linalg

from .errors import ConfigurationError, ConvergenceError
from .grids import Grid, WaveField, inner_product, wavefield
from .oscillator import hermite_functions
from .potentials import PotentialSpec, potential_1d_dx0
from .spectrum import (LinearOperatorSpec, apply_hamiltonian, kinetic_matrix_1d,
                       potential_grid)


@dataclass(frozen=True)
class StationaryState:
    """A converged solution (phi, mu) with its defect norm."""

    state: WaveField
    mu: float
    g: float
    spec: PotentialSpec
    residual_norm: float
    warnings: tuple[str, ...] = ()


def residual(candidate: WaveField, spec: PotentialSpec, g: float):
    """Defect field, chemical-potential estimate and defect norm.

    The candidate must be normalized; then the defect is exactly orthogonal
    to the candidate and mu_t is real.
    """
    grid = candidate.grid
    op = LinearOperatorSpec(grid, spec)
    v = potential_grid(spec, grid)
    a = candidate.amplitudes
    dens = np.abs(a) ** 2
    ha = apply_hamiltonian(op, a, v) + g * dens * a
    mu_t = float(np.vdot(a, ha).real * grid.cell_volume)
    defect = ha - mu_t * a
    res_norm = float(np.sqrt(np.vdot(defect, defect).real * grid.cell_volume))
    return WaveField(grid, defect), mu_t, res_norm


def _defect_and_gradient(a, v, g, op, grid):
    """F = <defect|defect> and its gradient field for a normalized array a.

    Gradient convention: dF = 2 Re <G|da> * cell_volume, with
    G = (H + 2 g n - mu_t) defect + g a^2 conj(defect); the component along
    a is removed by the caller's normalization chain rule.
    """
    dens = np.abs(a) ** 2
    ha = apply_hamiltonian(op, a, v) + g * dens * a
    mu_t = float(np.vdot(a, ha).real * grid.cell_volume)
    defect = ha - mu_t * a
    fval = float(np.vdot(defect, defect).real * grid.cell_volume)
    gfield = apply_hamiltonian(op, defect, v) + (2.0 * g * dens - mu_t) * defect
    gfield += g * a * a * np.conj(defect)
    return fval, gfield, mu_t


def _minimize_on_sphere(v0, fval_grad, precond, tol, max_iter, stall_window=600):
    """Preconditioned Polak-Ribiere CG on F(v) = defect_norm^2 of v/||v||.

    Works on complex coefficient arrays; the Euclidean dot over stacked
    real/imaginary parts drives the line search.  F is locally a sum of
    squares, so each line search refines its first trial with the exact
    minimizer of the quadratic model.  Returns the best iterate.
    """

    def rdot(x, y):
        return float(np.sum(x.real * y.real) + np.sum(x.imag * y.imag))

    v = v0.copy()
    fval, grad = fval_grad(v)
    best_f, best_v = fval, v.copy()
    pg = precond(grad)
    d = -pg
    gp_dot = rdot(grad, pg)
    t_prev = 1.0
    stall = 0
    restarted = False
    for it in range(max_iter):
        if math.sqrt(max(fval, 0.0)) < tol:
            return v, fval, it, True
        slope = rdot(grad, d)
        if slope >= 0:
            d = -pg
            slope = -gp_dot
        accepted = None
        t = min(2.0 * t_prev, 1e3)
        for _ in range(60):
            f_try, g_try = fval_grad(v + t * d)
            # quadratic-model minimizer through F(0), slope, F(t)
            denom = f_try - fval - slope * t
            if denom > 0:
                t_q = -0.5 * slope * t * t / denom
                if 1e-3 * t < t_q < 4.0 * t and abs(t_q - t) > 1e-3 * t:
                    f_q, g_q = fval_grad(v + t_q * d)
                    if f_q < f_try:
                        t, f_try, g_try = t_q, f_q, g_q
            if f_try <= fval + 1e-4 * t * slope:
                accepted = (t, f_try, g_try)
                break
            t *= 0.25
        if accepted is None:
            break
        t, fval, grad_new = accepted
        v = v + t * d
        t_prev = t
        pg_new = precond(grad_new)
        gp_dot_new = rdot(grad_new, pg_new)
        beta = max(0.0, (gp_dot_new - rdot(grad, pg_new)) / gp_dot)
        d = -pg_new + beta * d
        grad, pg, gp_dot = grad_new, pg_new, gp_dot_new
        if fval < 0.99 * best_f:
            best_f, best_v = fval, v.copy()
            stall = 0
        else:
            if fval < best_f:
                best_f, best_v = fval, v.copy()
            stall += 1
            if stall > stall_window:
                if restarted:
                    break
                # one fresh steepest-descent restart from the best iterate
                restarted = True
                stall = 0
                v = best_v.copy()
                fval, grad = fval_grad(v)
                pg = precond(grad)
                d = -pg
                gp_dot = rdot(grad, pg)
                t_prev = 1.0
    return best_v, best_f, max_iter, math.sqrt(max(best_f, 0.0)) < tol


def defect_objective(vec: np.ndarray, spec: PotentialSpec, g: float, grid: Grid):
    """Objective of the grid-space minimizer: F(v) and dF/dv.

    F(v) = <defect|defect> evaluated on v/||v||.  The gradient is returned
    as a complex array whose real and imaginary parts are the partial
    derivatives with respect to the raw real and imaginary grid values, so
    it can be checked coordinate-by-coordinate against finite differences.
    """
    op = LinearOperatorSpec(grid, spec)
    v = potential_grid(spec, grid)
    return _grid_objective(vec, v, g, op, grid)


def _grid_objective(vec, v, g, op, grid):
    r = math.sqrt(np.vdot(vec, vec).real * grid.cell_volume)
    a = vec / r
    fval, gfield, _ = _defect_and_gradient(a, v, g, op, grid)
    t = float(np.vdot(a, gfield).real * grid.cell_volume)
    gproj = (gfield - t * a) * (2.0 * grid.cell_volume / r)
    return fval, gproj


def _solve_grid(guess, spec, g, tol, max_iter):
    grid = guess.grid
    op = LinearOperatorSpec(grid, spec)
    v = potential_grid(spec, grid)
    k = grid.wavenumbers
    if grid.dimension == 1:
        kin = 0.5 * k ** 2
        fwd, inv = sfft.fft, sfft.ifft
    else:
        kin = 0.5 * (k[:, None] ** 2 + k[None, :] ** 2)
        fwd, inv = sfft.fft2, sfft.ifft2

    def fval_grad(vec):
        return _grid_objective(vec, v, g, op, grid)

    v0 = guess.amplitudes / math.sqrt(np.vdot(guess.amplitudes, guess.amplitudes).real
                                      * grid.cell_volume)
    # the Hessian near a solution behaves like (H - mu)^2; precondition with
    # the squared shifted kinetic operator
    _, mu0, _ = residual(wavefield(grid, v0, renormalize=True), spec, g)
    m_inv = 1.0 / (kin + max(1.0, abs(mu0))) ** 2

    def precond(gvec):
        return inv(m_inv * fwd(gvec))

    vec, fval, n_iter, ok = _minimize_on_sphere(v0, fval_grad, precond, tol, max_iter)
    return wavefield(grid, vec, renormalize=True), ok, n_iter


class HarmonicBasis2D:
    """Truncated oscillator product basis on a 2D grid.

    Fields are sums c[n, m] h_n(x) h_m(y) with 0 <= n, m < cutoff; the grid
    half-width must exceed the classical turning point of the highest kept
    state so the sampled basis stays orthonormal to rounding.
    """

    def __init__(self, grid: Grid, cutoff: int):
        if grid.dimension != 2:
            raise ConfigurationError("HarmonicBasis2D needs a 2D grid")
        if grid.half_width < math.sqrt(2.0 * cutoff + 1.0) + 2.0:
            raise ConfigurationError(
                f"half_width {grid.half_width} too small for basis cutoff {cutoff}"
            )
        self.grid = grid
        self.cutoff = cutoff
        self.fx = hermite_functions(grid.axis, cutoff - 1).T  # (n_grid, cutoff)

    def to_grid(self, c: np.ndarray) -> np.ndarray:
        return self.fx @ c @ self.fx.T

    def project(self, a: np.ndarray) -> np.ndarray:
        return (self.fx.T @ a @ self.fx) * self.grid.cell_volume

    def energies(self) -> np.ndarray:
        n = np.arange(self.cutoff)
        return n[:, None] + n[None, :] + 1.0


def basis_objective(c: np.ndarray, spec: PotentialSpec, g: float,
                    basis: "HarmonicBasis2D"):
    """Objective of the 2D basis-space minimizer: F(c) and dF/dc.

    Same functional as defect_objective but parameterized by oscillator
    product coefficients; the defect norm is still taken on the full grid.
    """
    op = LinearOperatorSpec(basis.grid, spec)
    v = potential_grid(spec, basis.grid)
    return _basis_objective(c, v, g, op, basis)


def _basis_objective(c, v, g, op, basis):
    grid = basis.grid
    w = basis.to_grid(c)
    r = math.sqrt(np.vdot(w, w).real * grid.cell_volume)
    a = w / r
    fval, gfield, _ = _defect_and_gradient(a, v, g, op, grid)
    t = float(np.vdot(a, gfield).real * grid.cell_volume)
    gproj = (gfield - t * a) * (2.0 / r)
    return fval, basis.project(gproj)


def _solve_basis_2d(guess, spec, g, tol, max_iter, cutoff):
    grid = guess.grid
    basis = HarmonicBasis2D(grid, cutoff)
    op = LinearOperatorSpec(grid, spec)
    v = potential_grid(spec, grid)
    e_basis = basis.energies()

    def fval_grad(c):
        return _basis_objective(c, v, g, op, basis)

    _, mu0, _ = residual(guess, spec, g)
    m_inv = 1.0 / (e_basis + max(1.0, abs(mu0))) ** 2

    def precond(gc):
        return m_inv * gc

    c0 = basis.project(guess.amplitudes)
    nrm = math.sqrt(float(np.sum(np.abs(basis.to_grid(c0)) ** 2)) * grid.cell_volume)
    if nrm < 0.5:
        raise ConfigurationError(
            "guess loses more than half its norm under the basis cutoff; "
            "raise the cutoff or supply a smoother guess"
        )
    c0 /= nrm
    c, fval, n_iter, ok = _minimize_on_sphere(c0, fval_grad, precond, tol, max_iter)
    return wavefield(grid, basis.to_grid(c), renormalize=True), ok, n_iter


def solve_stationary(guess: WaveField, spec: PotentialSpec, g: float,
                     tol: float = 1e-8, max_iter: int = 40000,
                     basis_cutoff: int | None = None) -> StationaryState:
    """Minimize the defect norm from a starting guess.

    Converges to the stationary state nearest the guess (the functional is
    local); a warning is attached when the result's fidelity with the guess
    drops below 0.5, which signals escape to a different branch.

    By default the minimization runs over grid values in any dimension.
    Passing basis_cutoff switches a 2D solve to the truncated
    oscillator-product parameterization; note that the sharp density edge
    of strongly repulsive states decays slowly in that basis, so tight
    defect tolerances may be unreachable there (the full-grid defect is
    what gets reported either way).
    """
    if not (tol > 0):
        raise ConfigurationError("tol must be positive")
    if guess.grid.dimension != spec.dimension:
        raise ConfigurationError("guess and potential dimensions disagree")
    if basis_cutoff is not None and spec.dimension == 2:
        state, ok, n_iter = _solve_basis_2d(guess, spec, g, tol, max_iter, basis_cutoff)
    else:
        state, ok, n_iter = _solve_grid(guess, spec, g, tol, max_iter)
    defect, mu_t, res_norm = residual(state, spec, g)
    if not ok or res_norm > tol:
        raise ConvergenceError(
            f"defect minimization stalled at {res_norm:.3e} (tol {tol}) "
            f"after {n_iter} iterations",
            history=res_norm,
        )
    warnings_ = ()
    fid = abs(inner_product(guess, state)) ** 2 / max(
        abs(inner_product(guess, guess)), 1e-300)
    if fid < 0.5:
        warnings_ = (f"branch-escape: fidelity {fid:.3f} with the initial guess",)
    return StationaryState(state=state, mu=mu_t, g=g, spec=spec,
                           residual_norm=res_norm, warnings=warnings_)


def refine_stationary(field: WaveField, spec: PotentialSpec, g: float,
                      tol: float = 1e-8, max_iter: int = 40000) -> StationaryState:
    """Drive an almost-stationary field to defect norm < tol (grid space).

    Used to polish relaxation output: imaginary-time stepping carries an
    O(dtau^2) defect floor, while the minimizer is bias-free.
    """
    state, ok, n_iter = _solve_grid(field, spec, g, tol, max_iter)
    defect, mu_t, res_norm = residual(state, spec, g)
    if not ok or res_norm > tol:
        raise ConvergenceError(
            f"refinement stalled at defect {res_norm:.3e} (tol {tol})",
            history=res_norm,
        )
    return StationaryState(state=state, mu=mu_t, g=g, spec=spec,
                           residual_norm=res_norm)


def continue_in_g(seed: WaveField, spec: PotentialSpec, g_target: float,
                  g_steps: int = 6, tol: float = 1e-8,
                  basis_cutoff: int | None = None,
                  **solve_kw) -> StationaryState:
    """Ramp the interaction from 0 to g_target, re-solving at each stage.

    Robust way to carry a linear eigenstate to its nonlinear continuation
    without escaping to another branch.
    """
    solve_kw = dict(solve_kw, basis_cutoff=basis_cutoff)
    state = seed
    result = None
    for g_now in np.linspace(g_target / g_steps, g_target, g_steps):
        result = solve_stationary(state, spec, float(g_now), tol=tol, **solve_kw)
        state = result.state
    if result is None:
        result = solve_stationary(seed, spec, 0.0, tol=tol, **solve_kw)
    return result


# ---------------------------------------------------------------------------
# effective potential and level slope


def effective_potential(state: StationaryState) -> np.ndarray:
    """V + g |phi|^2 on the state's grid."""
    v = potential_grid(state.spec, state.state.grid)
    return v + state.g * np.abs(state.state.amplitudes) ** 2


def hellmann_feynman_slope(state: StationaryState, dv_dx0: np.ndarray,
                           dstate_dx0: WaveField) -> float:
    """Level slope d(mu)/d(x0) from the state and its branch tangent.

    slope = <phi| dV/dx0 + g (dphi/dx0) phi* + g phi (dphi*/dx0) |phi>;
    in the linear limit only the potential term survives.
    """
    grid = state.state.grid
    a = state.state.amplitudes
    dens = np.abs(a) ** 2
    da = dstate_dx0.amplitudes
    term_v = float(np.sum(dens * dv_dx0).real * grid.cell_volume)
    term_g = state.g * float(np.sum(dens * 2.0 * (np.conj(a) * da).real)
                             * grid.cell_volume)
    return term_v + term_g


# ---------------------------------------------------------------------------
# pseudo-arclength continuation (1D, real fields)


@dataclass(frozen=True)
class ContinuationPoint:
    x0: float
    mu: float
    state: WaveField
    residual_norm: float
    arclength: float


@dataclass
class NonlinearLevelCurve:
    """One branch of mu(x0), possibly multivalued (loops are expected)."""

    label: str
    spec: PotentialSpec
    g: float
    points: list[ContinuationPoint] = field(default_factory=list)
    annotations: list[str] = field(default_factory=list)

    def x0_array(self) -> np.ndarray:
        return np.array([p.x0 for p in self.points])

    def mu_array(self) -> np.ndarray:
        return np.array([p.mu for p in self.points])

    def fold_indices(self) -> list[int]:
        """Points where the branch turns around in x0."""
        x0 = self.x0_array()
        dx = np.diff(x0)
        out = []
        for i in range(1, len(dx)):
            if dx[i] * dx[i - 1] < 0:
                out.append(i)
        return out

    def is_multivalued(self) -> bool:
        return len(self.fold_indices()) > 0


class _Corrector1D:
    """Newton iterations on the bordered stationary system (real fields)."""

    def __init__(self, grid: Grid, spec: PotentialSpec, g: float):
        self.grid = grid
        self.spec = spec
        self.g = g
        self.kin = kinetic_matrix_1d(grid)
        self.dx = grid.cell_volume
        self.n = grid.points_per_axis

    def v_at(self, x0):
        return potential_grid(self.spec, self.grid, x0)

    def residual_vec(self, phi, mu, x0):
        v = self.v_at(x0)
        return self.kin @ phi + (v + self.g * phi ** 2 - mu) * phi

    def jacobian(self, phi, mu, x0):
        v = self.v_at(x0)
        j = self.kin + np.diag(v + 3.0 * self.g * phi ** 2 - mu)
        return j

    def dr_dx0(self, phi, x0):
        return potential_1d_dx0(self.grid.axis, self.spec, x0) * phi

    def bordered_solve(self, phi, mu, x0, tangent, rhs_top, rhs_norm, rhs_arc):
        n = self.n
        m = np.zeros((n + 2, n + 2))
        m[:n, :n] = self.jacobian(phi, mu, x0)
        m[:n, n] = -phi
        m[:n, n + 1] = self.dr_dx0(phi, x0)
        m[n, :n] = 2.0 * phi * self.dx
        m[n + 1, :n] = tangent[:n] * self.dx
        m[n + 1, n] = tangent[n]
        m[n + 1, n + 1] = tangent[n + 1]
        rhs = np.concatenate([rhs_top, [rhs_norm, rhs_arc]])
        sol = scipy.linalg.solve(m, rhs)
        return sol[:n], sol[n], sol[n + 1]

    def newton(self, phi, mu, x0, tangent, anchor, max_iter=12, tol=1e-10):
        """Correct (phi, mu, x0) onto the branch, orthogonally to `tangent`."""
        n = self.n
        for it in range(max_iter):
            r = self.residual_vec(phi, mu, x0)
            rn = float(np.sqrt(np.sum(r * r) * self.dx))
            cn = float(np.sum(phi * phi) * self.dx - 1.0)
            arc = (np.sum(tangent[:n] * (phi - anchor[:n])) * self.dx
                   + tangent[n] * (mu - anchor[n])
                   + tangent[n + 1] * (x0 - anchor[n + 1]))
            if rn < tol and abs(cn) < tol and abs(arc) < 1e-12:
                return phi, mu, x0, rn, True
            try:
                dphi, dmu, dx0 = self.bordered_solve(
                    phi, mu, x0, tangent, -r, -cn, -arc)
            except scipy.linalg.LinAlgError:
                return phi, mu, x0, rn, False
            phi = phi + dphi
            mu = mu + dmu
            x0 = x0 + dx0
            if not np.isfinite(mu) or not np.isfinite(x0):
                return phi, mu, x0, np.inf, False
        r = self.residual_vec(phi, mu, x0)
        rn = float(np.sqrt(np.sum(r * r) * self.dx))
        return phi, mu, x0, rn, rn < tol

    def tangent(self, phi, mu, x0, prev_tangent):
        """Unit branch tangent oriented along prev_tangent."""
        n = self.n
        sol_phi, sol_mu, sol_x0 = self.bordered_solve(
            phi, mu, x0, prev_tangent, np.zeros(n), 0.0, 1.0)
        t = np.concatenate([sol_phi, [sol_mu, sol_x0]])
        nrm = math.sqrt(np.sum(sol_phi ** 2) * self.dx + sol_mu ** 2 + sol_x0 ** 2)
        t /= nrm
        orient = (np.sum(prev_tangent[:n] * t[:n]) * self.dx
                  + prev_tangent[n] * t[n] + prev_tangent[n + 1] * t[n + 1])
        if orient < 0:
            t = -t
        return t


def _real_branch_field(f: WaveField) -> np.ndarray:
    """Strip the global phase of a (physically real) 1D stationary state."""
    a = f.amplitudes
    idx = int(np.argmax(np.abs(a)))
    phase = a[idx] / abs(a[idx])
    real = (a / phase).real
    nrm = math.sqrt(np.sum(real ** 2) * f.grid.cell_volume)
    return real / nrm


def continuation_scan(seed: StationaryState, x0_stop: float,
                      ds: float = 0.05, ds_min: float = 1e-6, ds_max: float = 0.25,
                      fidelity_min: float = 0.9, max_points: int = 20000,
                      corrector_tol: float = 1e-10,
                      label: str = "branch") -> NonlinearLevelCurve:
    """Trace mu(x0) from the seed toward x0_stop by pseudo-arclength steps.

    Turning points in x0 are traversed; the trace ends when x0 reaches
    x0_stop while heading toward it, when max_points is exhausted, or when
    the corrector fails at the minimum step (annotated on the curve).
    """
    spec = seed.spec
    grid = seed.state.grid
    if spec.dimension != 1:
        raise ConfigurationError("continuation_scan is implemented for 1D branches")
    g = seed.g
    corr = _Corrector1D(grid, spec, g)
    n = grid.points_per_axis

    phi = _real_branch_field(seed.state)
    mu = seed.mu
    x0 = spec.x0
    direction = 1.0 if x0_stop >= x0 else -1.0
    t0 = np.zeros(n + 2)
    t0[n + 1] = direction
    # settle exactly onto the branch at the seed position
    phi, mu, x0, rn, ok = corr.newton(phi, mu, x0, t0, np.concatenate([phi, [mu, x0]]),
                                      tol=corrector_tol)
    if not ok:
        raise ConvergenceError(f"seed state does not satisfy the corrector at x0={x0}")

    curve = NonlinearLevelCurve(label=label,
                                spec=dataclasses.replace(spec, x0=float(x0)), g=g)
    s_accum = 0.0

    def add_point(phi_, mu_, x0_, rn_):
        curve.points.append(ContinuationPoint(
            x0=float(x0_), mu=float(mu_),
            state=wavefield(grid, phi_.astype(complex), renormalize=True),
            residual_norm=rn_, arclength=s_accum,
        ))

    add_point(phi, mu, x0, rn)
    tangent = corr.tangent(phi, mu, x0, t0)
    step = ds
    while len(curve.points) < max_points:
        anchor = np.concatenate([phi, [mu, x0]])
        pred = anchor + step * tangent
        phi_n, mu_n, x0_n, rn_n, ok = corr.newton(
            pred[:n], pred[n], pred[n + 1], tangent, pred, tol=corrector_tol)
        fid_ok = False
        if ok:
            overlap = abs(np.sum(phi_n * phi) * grid.cell_volume)
            nrm = math.sqrt(np.sum(phi_n ** 2) * grid.cell_volume)
            fid_ok = (overlap / max(nrm, 1e-300)) ** 2 >= fidelity_min
        if not (ok and fid_ok):
            step *= 0.5
            if step < ds_min:
                curve.annotations.append(
                    f"corrector failed at x0={x0:.4f}, mu={mu:.6f} "
                    f"with step below {ds_min}; curve truncated"
                )
                break
            continue
        s_accum += step
        phi, mu, x0 = phi_n / math.sqrt(np.sum(phi_n ** 2) * grid.cell_volume), mu_n, x0_n
        add_point(phi, mu, x0, rn_n)
        tangent = corr.tangent(phi, mu, x0, tangent)
        step = min(step * 1.3, ds_max)
        heading = tangent[n + 1] * direction
        if (x0 - x0_stop) * direction >= -1e-9 and heading > 0:
            break
    return curve


def barrier_position(spec: PotentialSpec, grid: Grid, x0: float) -> float | None:
    """Local maximum of V between the dip center and the trap center.

    None when the potential has no interior barrier on that interval.
    """
    v = potential_grid(spec, grid, x0)
    lo, hi = sorted((x0, 0.0))
    mask = (grid.axis > lo) & (grid.axis < hi)
    if mask.sum() < 3:
        return None
    sub = v[mask]
    xs = grid.axis[mask]
    i = int(np.argmax(sub))
    if i == 0 or i == sub.size - 1:
        return None
    return float(xs[i])


def localization_left(f: WaveField, x_split: float) -> float:
    """Probability weight at x < x_split."""
    mask = f.grid.axis < x_split
    return float(np.sum(np.abs(f.amplitudes[mask]) ** 2) * f.grid.cell_volume)


def find_equal_mu_crossing(curve: NonlinearLevelCurve):
    """Self-intersection of the branch in the (x0, mu) plane.

    Returns (point_a, point_b), the two branch points nearest the crossing,
    or None when the polyline does not intersect itself.  The two states
    differ although x0 and mu coincide; their left/right localization is
    the loop diagnostic.
    """
    x = curve.x0_array()
    m = curve.mu_array()
    n_seg = len(x) - 1
    best = None
    for i in range(n_seg):
        p = np.array([x[i], m[i]])
        r = np.array([x[i + 1] - x[i], m[i + 1] - m[i]])
        for j in range(i + 2, n_seg):
            if j == i:
                continue
            q = np.array([x[j], m[j]])
            s = np.array([x[j + 1] - x[j], m[j + 1] - m[j]])
            denom = r[0] * s[1] - r[1] * s[0]
            if denom == 0:
                continue
            qp = q - p
            t = (qp[0] * s[1] - qp[1] * s[0]) / denom
            u = (qp[0] * r[1] - qp[1] * r[0]) / -denom
            if -1e-12 <= t <= 1 + 1e-12 and -1e-12 <= u <= 1 + 1e-12:
                # distinct states at the same (x0, mu): require separation
                # along the curve
                fid = abs(inner_product(curve.points[i].state,
                                        curve.points[j].state)) ** 2
                if fid < 0.5:
                    cand = (curve.points[i if t < 0.5 else i + 1],
                            curve.points[j if u < 0.5 else j + 1])
                    if best is None:
                        best = cand
    return best


def write_branch_csv(path, curves: list[NonlinearLevelCurve]) -> None:
    """CSV with branch_id, arclength, x0, mu, residual_norm, localization_left."""
    rows = []
    for bid, curve in enumerate(curves):
        for p in curve.points:
            xb = barrier_position(curve.spec, p.state.grid, p.x0)
            loc = localization_left(p.state, xb) if xb is not None else np.nan
            rows.append((bid, p.arclength, p.x0, p.mu, p.residual_norm, loc))
    arr = np.array(rows)
    np.savetxt(path, arr, delimiter=",",
               header="branch_id,arclength,x0,mu,residual_norm,localization_left",
               comments="")
