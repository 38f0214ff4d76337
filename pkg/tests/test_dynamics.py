import numpy as np
import pytest

from becsweep.dynamics import (PropagationConfig, Trajectory,
                               crank_nicolson_ground_state_1d,
                               imaginary_time_ground_state,
                               imaginary_time_sector_2d, observables, propagate,
                               propagate_2d_spiral, propagate_static,
                               rotation_sector_project, write_trajectory_csv)
from becsweep.errors import ConfigurationError, PropagationError
from becsweep.grids import inner_product, make_grid, norm, wavefield
from becsweep.oscillator import ho_state_1d, ho_state_2d, vortex_state_2d
from becsweep.potentials import PotentialSpec, SweepSchedule

TRAP1 = PotentialSpec(1, 0.0, 0.2)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        PropagationConfig(dt=0.0)
    with pytest.raises(ConfigurationError):
        PropagationConfig(method="verlet")
    with pytest.raises(ConfigurationError):
        PropagationConfig(frame="galilean")


def test_stationary_state_acquires_only_phase():
    g = make_grid(1, 256, 10)
    psi0 = ho_state_1d(g, 0)
    cfg = PropagationConfig(dt=1e-3, record_stride=500)
    traj = propagate_static(psi0, TRAP1, 2.0, cfg, targets={"self": psi0})
    ov = traj.overlaps["self"][-1]
    assert abs(ov) == pytest.approx(1.0, abs=1e-8)
    assert np.angle(ov) == pytest.approx(-0.5 * 2.0, abs=1e-6)


def test_norm_conserved_over_1e4_steps():
    g = make_grid(1, 256, 10)
    spec = PotentialSpec(1, 2.0, 0.5, x0=-2.0)
    psi0 = ho_state_1d(g, 0)
    cfg = PropagationConfig(dt=1e-3, g=5.0, record_stride=2000)
    traj = propagate_static(psi0, spec, 10.0, cfg)
    assert np.max(np.abs(traj.norm_series - 1.0)) < 1e-10


def test_energy_conserved_for_static_potential():
    # stationary initial state of the full (trap + wide dip) potential
    g = make_grid(1, 256, 8)
    spec = PotentialSpec(1, 2.0, 1.0, x0=-2.0)
    ground = imaginary_time_ground_state(spec, 5.0, g, tol=1e-12,
                                         residual_tol=1e-10)
    cfg = PropagationConfig(dt=1e-3, g=5.0, record_stride=1000)
    traj = propagate_static(ground.state, spec, 10.0, cfg)
    drift = np.max(np.abs(traj.energy_series - traj.energy_series[0]))
    assert drift < 1e-8


def test_multi_pass_bookkeeping():
    g = make_grid(1, 256, 10)
    spec = PotentialSpec(1, 2.0, 0.5)
    sched = SweepSchedule(-3.0, 0.0, speed=1.0, passes=2)
    cfg = PropagationConfig(dt=1e-3, record_stride=1500)
    traj = propagate(ho_state_1d(g, 0), spec, sched, cfg,
                     targets={"ho0": ho_state_1d(g, 0)})
    assert traj.pass_times == pytest.approx([3.0, 6.0])
    assert len(traj.pass_states) == 2
    assert traj.times[-1] == pytest.approx(6.0)
    assert norm(traj.pass_states[0]) == pytest.approx(1.0, abs=1e-10)
    # a record exists at each pass boundary
    for t in traj.pass_times:
        assert np.min(np.abs(traj.times - t)) < 1e-12


def test_dimension_mismatch_rejected():
    g = make_grid(1, 256, 10)
    sched = SweepSchedule(-3.0, 0.0, speed=1.0)
    with pytest.raises(ConfigurationError):
        propagate(ho_state_1d(g, 0), PotentialSpec(2, 1.0, 0.5), sched,
                  PropagationConfig())


def test_nan_amplitudes_raise_instability():
    g = make_grid(1, 256, 10)
    a = ho_state_1d(g, 0).amplitudes.copy()
    a[10] = np.nan
    bad = wavefield(g, a)
    with pytest.raises(PropagationError):
        propagate_static(bad, TRAP1, 0.01, PropagationConfig(dt=1e-3))


def test_dt_warning_for_deep_dip():
    g = make_grid(1, 256, 16)
    spec = PotentialSpec(1, 200.0, 0.5, x0=-7.0)
    with pytest.warns(UserWarning, match="dip depth"):
        propagate_static(ho_state_1d(g, 0), spec, 0.01,
                         PropagationConfig(dt=1e-3))


def test_split_step_vs_crank_nicolson_fidelity():
    # coarse instance, both integrators from the same initial state
    g = make_grid(1, 256, 6)
    spec = PotentialSpec(1, 1.0, 0.8)
    sched = SweepSchedule(-3.0, 0.0, speed=1.0)
    psi0 = ho_state_1d(g, 0)
    t_ss = propagate(psi0, spec, sched,
                     PropagationConfig(dt=2e-4, g=1.0, record_stride=4000))
    t_cn = propagate(psi0, spec, sched,
                     PropagationConfig(dt=2e-4, g=1.0, record_stride=4000,
                                       method="crank-nicolson"))
    fid = abs(inner_product(t_ss.final_state, t_cn.final_state)) ** 2
    assert fid > 1 - 1e-6


def test_frame_invariance_coarse():
    g = make_grid(2, 64, 8)
    spec = PotentialSpec(2, 4.0, 0.5, x0=-3.0, Omega=0.4)
    sched = SweepSchedule(-3.0, 0.0, speed=0.5, Omega=0.4)
    psi0 = vortex_state_2d(g, 0)
    targets = {"l1": vortex_state_2d(g, 1), "l0": psi0}
    out = {}
    for frame in ("rotating", "lab"):
        cfg = PropagationConfig(dt=5e-4, g=1.0, frame=frame, record_stride=4000)
        traj = propagate_2d_spiral(psi0, spec, sched, cfg, targets=targets)
        out[frame] = {k: abs(traj.overlaps[k][-1]) for k in targets}
    for k in targets:
        assert out["rotating"][k] == pytest.approx(out["lab"][k], abs=1e-6)


def test_imaginary_time_1d_linear_ground():
    g = make_grid(1, 512, 12)
    st = imaginary_time_ground_state(TRAP1, 0.0, g, tol=1e-12)
    assert st.mu == pytest.approx(0.5, abs=1e-8)
    assert st.residual_norm < 1e-8
    assert abs(inner_product(st.state, ho_state_1d(g, 0))) ** 2 > 1 - 1e-8


def test_imaginary_time_2d_linear_ground():
    g = make_grid(2, 64, 8)
    st = imaginary_time_ground_state(PotentialSpec(2, 0.0, 0.2), 0.0, g, tol=1e-12)
    assert st.mu == pytest.approx(1.0, abs=1e-8)


def test_imaginary_time_thomas_fermi_mu():
    g = make_grid(1, 512, 16)
    st = imaginary_time_ground_state(TRAP1, 50.0, g, tol=1e-12)
    mu_tf = (1.5 * 50.0) ** (2 / 3) / 2
    assert abs(st.mu - mu_tf) / mu_tf < 0.05
    # independent finite-difference relaxation at doubled resolution
    _, mu_cn = crank_nicolson_ground_state_1d(TRAP1, 50.0, make_grid(1, 1024, 16),
                                              tol=1e-13, dtau=2e-4)
    assert st.mu == pytest.approx(mu_cn, abs=5e-4)


def test_sector_relaxation_matches_linear_vortex():
    g = make_grid(2, 64, 8)
    spec = PotentialSpec(2, 0.0, 0.2)
    st = imaginary_time_sector_2d(spec, 0.0, g, l=1, tol=1e-12)
    assert st.mu == pytest.approx(2.0, abs=1e-8)
    assert abs(inner_product(st.state, vortex_state_2d(g, 1))) ** 2 > 1 - 1e-8


def test_rotation_sector_projection():
    g = make_grid(2, 64, 8)
    v1 = vortex_state_2d(g, 1)
    kept = rotation_sector_project(v1, 1)
    assert abs(inner_product(kept, v1)) ** 2 > 1 - 1e-12
    # the symmetric ground state has no l = 1 (mod 4) component
    with pytest.raises(ValueError):
        rotation_sector_project(vortex_state_2d(g, 0), 1)


def test_observables_linear_states():
    g1 = make_grid(1, 256, 10)
    obs = observables(ho_state_1d(g1, 0), TRAP1, 0.0)
    assert obs["energy"] == pytest.approx(0.5, abs=1e-10)
    assert obs["mu"] == pytest.approx(0.5, abs=1e-10)

    g2 = make_grid(2, 64, 8)
    spec2 = PotentialSpec(2, 0.0, 0.2, Omega=0.6)
    obs2 = observables(vortex_state_2d(g2, 1), spec2, 0.0)
    assert obs2["lz"] == pytest.approx(1.0, abs=1e-8)
    assert obs2["energy"] == pytest.approx(2.0 - 0.6, abs=1e-8)


def test_trajectory_csv(tmp_path):
    g = make_grid(1, 256, 10)
    traj = propagate_static(ho_state_1d(g, 0), TRAP1, 0.5,
                            PropagationConfig(dt=1e-3, record_stride=100),
                            targets={"ho0": ho_state_1d(g, 0)})
    p = tmp_path / "traj.csv"
    write_trajectory_csv(p, traj)
    header = p.read_text().splitlines()[0]
    assert header == "t,norm,energy,p_ho0"
    data = np.loadtxt(p, delimiter=",", skiprows=1)
    assert data.shape[1] == 4
    assert data[0, 0] == 0.0
