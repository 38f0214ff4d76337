"""Config-driven reproduction runs.

Each experiment kind wires the library modules together for one figure or
headline number: sweep transfer probabilities, level diagrams with crossing
location, branch continuations with loop metrics, or a relaxed ground
state.  A run emits CSV data, binary field dumps and a JSON manifest with
the resolved configuration, file checksums and headline metrics.

Configs are flat key = value text with strict unknown-key rejection, so a
typo fails loudly instead of silently running defaults.  All numerical
defaults live in the presets, not in code paths.
"""

import dataclasses
import hashlib
import json
import os
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .errors import ConfigurationError
from .grids import make_grid, save_field
from .oscillator import ho_state_1d, vortex_state_2d
from .dynamics import (PropagationConfig, imaginary_time_ground_state,
                       imaginary_time_sector_2d, observables, propagate,
                       write_trajectory_csv)
from .potentials import PotentialSpec, SweepSchedule
from .spectrum import (LinearOperatorSpec, find_avoided_crossing, level_scan,
                       lowest_eigenpairs, write_level_scan_csv)
from .stationary import (barrier_position, continuation_scan, continue_in_g,
                         find_equal_mu_crossing, localization_left, write_branch_csv)

KINDS = ("sweep1d", "sweep2d", "spectrum1d", "spectrum2d", "continuation",
         "groundstate")


@dataclass
class ExperimentConfig:
    """Resolved parameters of one experiment run."""

    kind: str
    g: float = 0.0
    U0: float = 0.0
    sigma: float = 0.2
    Omega: float = 0.0
    x0_start: float = -7.0
    x0_end: float = 0.0
    speed: float = 0.02
    passes: int = 1
    points: int = 1024
    half_width: float = 16.0
    dt: float = 1e-3
    record_stride: int = 1000
    tol: float = 1e-8
    imtime_tol: float = 1e-12
    basis_cutoff: int = 40
    scan_step: float = 0.05
    levels: int = 4
    frame: str = "rotating"
    ds: float = 0.05
    branches: str = "0"
    output_dir: str = "runs"
    label: str = ""

    def validate(self):
        problems = []
        if self.kind not in KINDS:
            problems.append(f"kind: must be one of {KINDS}, got {self.kind!r}")
        if self.sigma <= 0:
            problems.append(f"sigma: must be positive, got {self.sigma}")
        if self.U0 < 0:
            problems.append(f"U0: must be non-negative, got {self.U0}")
        if self.dt <= 0:
            problems.append(f"dt: must be positive, got {self.dt}")
        n = self.points
        if n < 8 or (n & (n - 1)) != 0:
            problems.append(f"points: must be a power of two >= 8, got {n}")
        if self.half_width <= 0:
            problems.append(f"half_width: must be positive, got {self.half_width}")
        if self.kind.endswith("2d") and self.Omega < 0:
            problems.append(f"Omega: must be non-negative, got {self.Omega}")
        if self.kind in ("sweep1d", "sweep2d"):
            if self.speed <= 0:
                problems.append(f"speed: must be positive, got {self.speed}")
            if self.passes < 1:
                problems.append(f"passes: must be >= 1, got {self.passes}")
            if self.x0_start == self.x0_end:
                problems.append("x0_start: must differ from x0_end")
        if self.frame not in ("rotating", "lab"):
            problems.append(f"frame: must be rotating|lab, got {self.frame!r}")
        if self.kind == "continuation":
            try:
                self.branch_list()
            except ValueError:
                problems.append(f"branches: expected comma-separated integers, "
                                f"got {self.branches!r}")
        if problems:
            raise ConfigurationError("; ".join(problems))
        return self

    def branch_list(self) -> list[int]:
        return [int(tok) for tok in str(self.branches).split(",") if tok != ""]

    def dimension(self) -> int:
        return 2 if self.kind.endswith("2d") else 1


_CONFIG_FIELDS = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse flat `key = value` lines; unknown keys are rejected by name."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _CONFIG_FIELDS:
            raise ConfigurationError(f"line {lineno}: unknown key {key!r}")
        values[key] = _coerce(key, val)
    if "kind" not in values:
        raise ConfigurationError("missing required key 'kind'")
    return ExperimentConfig(**values).validate()


def _coerce(key: str, val: str):
    typ = _CONFIG_FIELDS[key]
    if typ in (int, "int"):
        return int(val)
    if typ in (float, "float"):
        return float(val)
    return val


def apply_overrides(cfg: ExperimentConfig, overrides: list[str]) -> ExperimentConfig:
    """Apply `key=value` override pairs (CLI --set) onto a config."""
    updates = {}
    for pair in overrides:
        if "=" not in pair:
            raise ConfigurationError(f"override {pair!r} is not key=value")
        key, _, val = pair.partition("=")
        key = key.strip()
        if key not in _CONFIG_FIELDS:
            raise ConfigurationError(f"override names unknown key {key!r}")
        updates[key] = _coerce(key, val.strip())
    return dataclasses.replace(cfg, **updates).validate()


# ---------------------------------------------------------------------------
# presets: every reproduction parameter set, each exactly once


@dataclass(frozen=True)
class Preset:
    name: str
    note: str
    config: ExperimentConfig
    expected: dict  # metric -> (lo, hi) interval for check mode


def _cfg(**kw) -> ExperimentConfig:
    return ExperimentConfig(**kw).validate()


PRESETS: dict[str, Preset] = {}


def _register(preset: Preset):
    PRESETS[preset.name] = preset


_register(Preset(
    "sweep1d-linear",
    "Non-interacting 1D sweep, U0=13.4, sigma=0.2, x0 from -7 to 0 at 0.02; "
    "one to three passes excite the first, second and third trap states",
    _cfg(kind="sweep1d", g=0.0, U0=13.4, sigma=0.2, x0_start=-7.0, x0_end=0.0,
         speed=0.02, passes=3, points=1024, half_width=16.0, dt=1e-3,
         label="sweep1d-linear"),
    {"p1": (0.985, 1.0), "p2": (0.985, 1.0), "p3": (0.985, 1.0)},
))

_register(Preset(
    "sweep1d-g50",
    "Repulsive 1D sweep at g=50, U0=13.4, sigma=0.2, sweep velocity 0.6; "
    "second pass builds the two-node collective state",
    _cfg(kind="sweep1d", g=50.0, U0=13.4, sigma=0.2, x0_start=-7.0, x0_end=0.0,
         speed=0.6, passes=2, points=1024, half_width=16.0, dt=1e-3,
         record_stride=200, label="sweep1d-g50"),
    {"p1": (0.97, 0.99), "p2": (0.79, 0.85)},
))

_register(Preset(
    "sweep1d-g-neg5",
    "Attractive 1D sweep at g=-5 (about N=900 atoms in the source trap); "
    "the source does not restate the sweep velocity, 0.012 sits on the "
    "plateau that reproduces the reported 97.5% transfer",
    _cfg(kind="sweep1d", g=-5.0, U0=13.4, sigma=0.2, x0_start=-7.0, x0_end=0.0,
         speed=0.012, passes=1, points=1024, half_width=16.0, dt=1e-3,
         label="sweep1d-g-neg5"),
    {"p1": (0.96, 0.99)},
))

_register(Preset(
    "spiral2d-linear",
    "Non-interacting 2D spiral sweep, U0=25, sigma=0.2, Omega=0.6, x0 from "
    "-5 to 0 at 0.036; passes 1 and 2 reach the Lz=1 and Lz=2 states",
    _cfg(kind="sweep2d", g=0.0, U0=25.0, sigma=0.2, Omega=0.6, x0_start=-5.0,
         x0_end=0.0, speed=0.036, passes=2, points=256, half_width=12.0, dt=1e-3,
         record_stride=2000, frame="lab", label="spiral2d-linear"),
    {"p1": (0.99, 1.0), "p2": (0.99, 1.0)},
))

_register(Preset(
    "spiral2d-g100",
    "Interacting 2D spiral at g=100, Omega=0.23, x0 from -7 to 0 at 0.35; "
    "final state overlaps the one-quantum vortex solution",
    _cfg(kind="sweep2d", g=100.0, U0=25.0, sigma=0.2, Omega=0.23, x0_start=-7.0,
         x0_end=0.0, speed=0.35, passes=1, points=256, half_width=12.0, dt=1e-3,
         record_stride=500, frame="lab", label="spiral2d-g100"),
    {"p1": (0.98, 1.0)},
))

_register(Preset(
    "spiral2d-g500",
    "Interacting 2D spiral at g=500, Omega=0.12, x0 from -9 to 0 at 0.53",
    _cfg(kind="sweep2d", g=500.0, U0=25.0, sigma=0.2, Omega=0.12, x0_start=-9.0,
         x0_end=0.0, speed=0.53, passes=1, points=256, half_width=12.0, dt=1e-3,
         record_stride=500, frame="lab", label="spiral2d-g500"),
    {"p1": (0.96, 1.0)},
))

_register(Preset(
    "fig1-levels",
    "Single-particle level diagram of the 1D swept-dip trap, U0=13.4, "
    "sigma=0.2; narrow ground/first-excited crossing near x0=-4.5",
    _cfg(kind="spectrum1d", U0=13.4, sigma=0.2, x0_start=-7.0, x0_end=0.0,
         scan_step=0.05, levels=4, points=1024, half_width=16.0,
         label="fig1-levels"),
    {"crossing_x0": (-4.8, -4.2)},
))

_register(Preset(
    "fig2-levels",
    "Rotating-frame level diagram of the 2D trap, U0=25, sigma=0.2, "
    "Omega=0.6; at x0=0 the four lowest levels sit at 1.0, 1.4, 1.8, 2.2",
    _cfg(kind="spectrum2d", U0=25.0, sigma=0.2, Omega=0.6, x0_start=-7.0,
         x0_end=0.0, scan_step=0.1, levels=4, points=128, half_width=12.0,
         label="fig2-levels"),
    {"e0_end": (0.999, 1.001), "e1_end": (1.399, 1.401),
     "e2_end": (1.799, 1.801), "e3_end": (2.199, 2.201)},
))

_register(Preset(
    "loops-g50",
    "Chemical-potential branches versus x0 at g=50, U0=13.4, sigma=0.2; "
    "excited branches develop loops, the ground branch stays single-valued",
    _cfg(kind="continuation", g=50.0, U0=13.4, sigma=0.2, x0_start=-7.0,
         x0_end=0.0, points=512, half_width=16.0, ds=0.05, branches="0,1",
         label="loops-g50"),
    {"branch0_folds": (0, 0), "branch1_folds": (1, 99)},
))

_register(Preset(
    "loops-g-neg1",
    "Ground branch at g=-1, U0=6.4, sigma=0.5: a loop whose self-crossing "
    "pairs equal chemical potentials with opposite-well localization",
    _cfg(kind="continuation", g=-1.0, U0=6.4, sigma=0.5, x0_start=-7.0,
         x0_end=0.0, points=512, half_width=16.0, ds=0.05, branches="0",
         label="loops-g-neg1"),
    {"branch0_folds": (1, 99), "equal_mu_found": (1, 1)},
))

_register(Preset(
    "groundstate-g50",
    "Relaxed 1D ground state at g=50 in the bare trap; chemical potential "
    "close to the Thomas-Fermi estimate (1.5 g)^(2/3) / 2",
    _cfg(kind="groundstate", g=50.0, U0=0.0, sigma=0.2, points=1024,
         half_width=16.0, label="groundstate-g50"),
    {"mu": (8.4, 9.4)},
))


def list_presets() -> list[Preset]:
    return list(PRESETS.values())


# ---------------------------------------------------------------------------
# runner


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(path, manifest: dict):
    tmp = str(path) + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def _sweep_targets(cfg: ExperimentConfig, grid):
    """Named overlap targets: trap eigenstates (g=0) or their nonlinear
    continuations at the sweep-end potential (dip amplitude zero).

    1D interacting targets come from an interaction ramp of the defect
    minimizer; 2D vortex targets from sector-restricted relaxation polished
    by the same minimizer (both certify the defect norm below cfg.tol).
    """
    trap = PotentialSpec(cfg.dimension(), 0.0, cfg.sigma)
    targets = {}
    for n in range(1, cfg.passes + 1):
        if cfg.g == 0.0:
            targets[f"target{n}"] = (ho_state_1d(grid, n) if cfg.dimension() == 1
                                     else vortex_state_2d(grid, n))
        elif cfg.dimension() == 1:
            targets[f"target{n}"] = continue_in_g(
                ho_state_1d(grid, n), trap, cfg.g, tol=cfg.tol).state
        else:
            targets[f"target{n}"] = imaginary_time_sector_2d(
                trap, cfg.g, grid, l=n, tol=cfg.imtime_tol,
                residual_tol=cfg.tol).state
    return targets


def _run_sweep(cfg: ExperimentConfig, outdir) -> tuple[dict, list]:
    grid = make_grid(cfg.dimension(), cfg.points, cfg.half_width)
    spec = PotentialSpec(cfg.dimension(), cfg.U0, cfg.sigma, x0=cfg.x0_start,
                         Omega=cfg.Omega if cfg.dimension() == 2 else 0.0)
    sched = SweepSchedule(cfg.x0_start, cfg.x0_end, cfg.speed, cfg.passes,
                          Omega=cfg.Omega if cfg.dimension() == 2 else 0.0)
    trap = PotentialSpec(cfg.dimension(), 0.0, cfg.sigma)
    if cfg.g == 0.0:
        initial = (ho_state_1d(grid, 0) if cfg.dimension() == 1
                   else vortex_state_2d(grid, 0))
    else:
        initial = imaginary_time_ground_state(
            trap, cfg.g, grid, tol=cfg.imtime_tol, residual_tol=cfg.tol).state
    targets = _sweep_targets(cfg, grid)
    pcfg = PropagationConfig(dt=cfg.dt, g=cfg.g, frame=cfg.frame,
                             record_stride=cfg.record_stride)
    traj = propagate(initial, spec, sched, pcfg, targets=targets)

    metrics = {}
    for n in range(1, cfg.passes + 1):
        metrics[f"p{n}"] = traj.pass_overlap_sq(f"target{n}")[n - 1]
    metrics["norm_final"] = float(traj.norm_series[-1])
    if cfg.dimension() == 2:
        metrics["lz_final"] = float(traj.lz_series[-1])
    files = []
    csv_path = outdir / "trajectory.csv"
    write_trajectory_csv(csv_path, traj)
    files.append(csv_path)
    dump = outdir / "final_state.bwf"
    save_field(dump, traj.final_state)
    files.append(dump)
    return metrics, files


def _run_spectrum(cfg: ExperimentConfig, outdir) -> tuple[dict, list]:
    grid = make_grid(cfg.dimension(), cfg.points, cfg.half_width)
    spec = PotentialSpec(cfg.dimension(), cfg.U0, cfg.sigma,
                         Omega=cfg.Omega if cfg.dimension() == 2 else 0.0)
    op = LinearOperatorSpec(grid, spec)
    lo, hi = sorted((cfg.x0_start, cfg.x0_end))
    x0s = np.arange(lo, hi + 0.5 * cfg.scan_step, cfg.scan_step)
    curves = level_scan(op, x0s, cfg.levels)
    metrics = {}
    try:
        x_star, gap = find_avoided_crossing(curves[0], curves[1])
        metrics["crossing_x0"] = x_star
        metrics["crossing_gap"] = gap
    except Exception as exc:  # NoCrossingError stays a metric, not a failure
        metrics["crossing_x0"] = None
        metrics["crossing_note"] = str(exc)
    end_pairs = lowest_eigenpairs(op.with_x0(cfg.x0_end), cfg.levels)
    for j, p in enumerate(end_pairs):
        metrics[f"e{j}_end"] = p.energy
    files = []
    csv_path = outdir / "levels.csv"
    write_level_scan_csv(csv_path, curves)
    files.append(csv_path)
    return metrics, files


def _run_continuation(cfg: ExperimentConfig, outdir) -> tuple[dict, list]:
    grid = make_grid(1, cfg.points, cfg.half_width)
    spec = PotentialSpec(1, cfg.U0, cfg.sigma, x0=cfg.x0_start)
    metrics = {}
    curves = []
    for n in cfg.branch_list():
        seed_state = continue_in_g(ho_state_1d(grid, n),
                                   dataclasses.replace(spec, x0=cfg.x0_start),
                                   cfg.g, tol=cfg.tol) if cfg.g != 0.0 else None
        from .stationary import solve_stationary
        seed = solve_stationary(
            seed_state.state if seed_state is not None else ho_state_1d(grid, n),
            spec, cfg.g, tol=cfg.tol)
        curve = continuation_scan(seed, cfg.x0_end, ds=cfg.ds,
                                  label=f"branch{n}")
        curves.append(curve)
        metrics[f"branch{n}_folds"] = len(curve.fold_indices())
        metrics[f"branch{n}_points"] = len(curve.points)
        if curve.annotations:
            metrics[f"branch{n}_note"] = "; ".join(curve.annotations)
    crossing = None
    for curve in curves:
        crossing = find_equal_mu_crossing(curve)
        if crossing is not None:
            pa, pb = crossing
            xb = barrier_position(curve.spec, grid, pa.x0)
            metrics["equal_mu_found"] = 1
            metrics["equal_mu_x0"] = pa.x0
            metrics["equal_mu_mu"] = pa.mu
            if xb is not None:
                metrics["equal_mu_loc_left_a"] = localization_left(pa.state, xb)
                metrics["equal_mu_loc_left_b"] = localization_left(pb.state, xb)
            break
    if crossing is None:
        metrics.setdefault("equal_mu_found", 0)
    files = []
    csv_path = outdir / "branches.csv"
    write_branch_csv(csv_path, curves)
    files.append(csv_path)
    return metrics, files


def _run_groundstate(cfg: ExperimentConfig, outdir) -> tuple[dict, list]:
    grid = make_grid(cfg.dimension(), cfg.points, cfg.half_width)
    spec = PotentialSpec(cfg.dimension(), cfg.U0, cfg.sigma,
                         x0=cfg.x0_start if cfg.U0 > 0 else 0.0)
    st = imaginary_time_ground_state(spec, cfg.g, grid, tol=cfg.imtime_tol,
                                     residual_tol=cfg.tol)
    obs = observables(st.state, st.spec, cfg.g)
    metrics = {"mu": st.mu, "energy": obs["energy"],
               "residual_norm": st.residual_norm}
    files = []
    dump = outdir / "ground_state.bwf"
    save_field(dump, st.state)
    files.append(dump)
    return metrics, files


_RUNNERS = {
    "sweep1d": _run_sweep,
    "sweep2d": _run_sweep,
    "spectrum1d": _run_spectrum,
    "spectrum2d": _run_spectrum,
    "continuation": _run_continuation,
    "groundstate": _run_groundstate,
}


def run(cfg: ExperimentConfig, preset_name: str | None = None) -> dict:
    """Execute one experiment; returns the manifest (also written to disk)."""
    import pathlib
    import scipy

    cfg.validate()
    outdir = pathlib.Path(cfg.output_dir)
    if cfg.label:
        outdir = outdir / cfg.label
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "preset": preset_name,
        "config": dataclasses.asdict(cfg),
        "versions": {"becsweep": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__},
        "started": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    t0 = time.perf_counter()
    try:
        metrics, files = _RUNNERS[cfg.kind](cfg, outdir)
    except Exception as exc:
        manifest["status"] = "failed"
        manifest["error"] = f"{type(exc).__name__}: {exc}"
        manifest["wall_seconds"] = time.perf_counter() - t0
        _write_manifest(outdir / "manifest.json", manifest)
        raise
    manifest["status"] = "ok"
    manifest["wall_seconds"] = time.perf_counter() - t0
    manifest["metrics"] = metrics
    manifest["files"] = [
        {"path": str(p.name), "sha256": _sha256(p)} for p in files
    ]
    _write_manifest(outdir / "manifest.json", manifest)
    return manifest


def check(manifest: dict, expected: dict) -> list[str]:
    """Compare headline metrics against expected intervals; returns misses."""
    misses = []
    metrics = manifest.get("metrics", {})
    for key, (lo, hi) in expected.items():
        val = metrics.get(key)
        if val is None:
            misses.append(f"{key}: missing from metrics")
        elif not (lo <= val <= hi):
            misses.append(f"{key}: {val} outside [{lo}, {hi}]")
    return misses
