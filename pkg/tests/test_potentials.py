import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from becsweep.errors import ConfigurationError, ScheduleDomainError
from becsweep.grids import make_grid
from becsweep.potentials import (PotentialSpec, SweepSchedule, dip_coefficient,
                                 dip_coefficient_dx0, lab_frame_potential_2d,
                                 potential_1d, potential_1d_dx0, potential_2d,
                                 schedule_position)

SPEC1 = PotentialSpec(1, 13.4, 0.2)
SPEC2 = PotentialSpec(2, 25.0, 0.2)


def test_potential_1d_dip_vanishes_at_origin():
    assert potential_1d(0.0, SPEC1, x0=0.0) == 0.0


def test_potential_1d_at_dip_center_high_precision():
    # direct evaluation of the formula at 50 digits
    with mpmath.workdps(50):
        expected = float(mpmath.mpf("24.5") + mpmath.mpf("13.4") * mpmath.atan(-7))
    assert potential_1d(-7.0, SPEC1, x0=-7.0) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(5.3527, abs=1e-4)


def test_potential_1d_gaussian_tail_negligible():
    assert potential_1d(2.0, SPEC1, x0=-7.0) == pytest.approx(2.0, abs=1e-12)


def test_potential_2d_dip_vanishes_at_origin():
    assert potential_2d(0.0, 0.0, SPEC2, x0=0.0) == 0.0


def test_potential_2d_at_dip_center_high_precision():
    with mpmath.workdps(50):
        expected = float(mpmath.mpf("12.5") - 25 * mpmath.sqrt(mpmath.atan(5)))
    assert potential_2d(-5.0, 0.0, SPEC2, x0=-5.0) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(-16.798, abs=1e-3)


def test_potential_2d_gaussian_tail_negligible():
    assert potential_2d(5.0, 5.0, SPEC2, x0=-5.0) == pytest.approx(25.0, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(-20, 20), st.floats(-9, 0))
def test_potential_1d_reduces_to_trap_when_dip_off(x, x0):
    spec = PotentialSpec(1, 0.0, 0.5)
    assert potential_1d(x, spec, x0=x0) == 0.5 * x * x


def test_potential_2d_mirror_symmetric_in_y():
    g = make_grid(1, 128, 8)
    x, y = np.meshgrid(g.axis, g.axis, indexing="ij")
    v = potential_2d(x, y, SPEC2, x0=-3.3)
    assert np.array_equal(v, v[:, ::-1])


@pytest.mark.parametrize("kwargs", [
    dict(dimension=1, U0=1.0, sigma=0.0),
    dict(dimension=1, U0=-1.0, sigma=0.2),
    dict(dimension=1, U0=1.0, sigma=0.2, Omega=0.5),
    dict(dimension=3, U0=1.0, sigma=0.2),
])
def test_potential_spec_validation(kwargs):
    with pytest.raises(ConfigurationError):
        PotentialSpec(**kwargs)


def test_custom_amplitude_profile_hook():
    spec = PotentialSpec(1, 2.0, 0.5, amplitude_profile=lambda x0: -x0 ** 2)
    assert dip_coefficient(spec, -3.0) == -18.0
    fd = (dip_coefficient(spec, -3.0 + 1e-6) - dip_coefficient(spec, -3.0 - 1e-6)) / 2e-6
    assert dip_coefficient_dx0(spec, -3.0) == pytest.approx(fd, rel=1e-6)


@pytest.mark.parametrize("dim,x0", [(1, -4.0), (1, -0.3), (2, -4.0), (2, -0.3)])
def test_default_amplitude_derivative_matches_fd(dim, x0):
    spec = SPEC1 if dim == 1 else SPEC2
    h = 1e-7
    fd = (dip_coefficient(spec, x0 + h) - dip_coefficient(spec, x0 - h)) / (2 * h)
    assert dip_coefficient_dx0(spec, x0) == pytest.approx(fd, rel=1e-6)


def test_potential_1d_dx0_matches_fd():
    x = np.linspace(-8, 4, 301)
    h = 1e-6
    fd = (potential_1d(x, SPEC1, x0=-4.5 + h) - potential_1d(x, SPEC1, x0=-4.5 - h)) / (2 * h)
    np.testing.assert_allclose(potential_1d_dx0(x, SPEC1, x0=-4.5), fd, atol=1e-7)


# --- sweep schedules -------------------------------------------------------

SCHED = SweepSchedule(x0_start=-7.0, x0_end=0.0, speed=0.02)


def test_schedule_endpoints_and_midpoint():
    assert schedule_position(0.0, SCHED) == -7.0
    assert schedule_position(175.0, SCHED) == pytest.approx(-3.5, abs=1e-12)
    assert schedule_position(350.0, SCHED) == pytest.approx(0.0, abs=1e-12)


def test_schedule_resets_each_pass():
    sched = SweepSchedule(x0_start=-7.0, x0_end=0.0, speed=0.02, passes=2)
    eps = 1e-3
    assert schedule_position(350.0 + eps, sched) == pytest.approx(-7.0 + 0.02 * eps,
                                                                  abs=1e-12)
    assert schedule_position(700.0, sched) == pytest.approx(0.0, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 349.0), st.floats(1e-6, 1.0))
def test_schedule_is_lipschitz_within_pass(t, delta):
    delta = min(delta, 350.0 - t)
    a = schedule_position(t, SCHED)
    b = schedule_position(t + delta, SCHED)
    assert abs(b - a) <= SCHED.speed * delta + 1e-12


@pytest.mark.parametrize("t", [-1.0, 350.4])
def test_schedule_domain_errors(t):
    with pytest.raises(ScheduleDomainError):
        schedule_position(t, SCHED)


def test_schedule_validation():
    with pytest.raises(ConfigurationError):
        SweepSchedule(-7.0, 0.0, speed=0.0)
    with pytest.raises(ConfigurationError):
        SweepSchedule(-7.0, -7.0, speed=0.1)
    with pytest.raises(ConfigurationError):
        SweepSchedule(-7.0, 0.0, speed=0.1, passes=0)


# --- lab-frame rotation ----------------------------------------------------


def test_lab_frame_matches_static_at_t0():
    sched = SweepSchedule(x0_start=-5.0, x0_end=0.0, speed=0.036, Omega=0.6)
    g = make_grid(1, 64, 6)
    x, y = np.meshgrid(g.axis, g.axis, indexing="ij")
    v_lab = lab_frame_potential_2d(x, y, 0.0, SPEC2, sched)
    v_rot = potential_2d(x, y, SPEC2, x0=-5.0)
    np.testing.assert_array_equal(v_lab, v_rot)


def test_lab_frame_quarter_turn_maps_axes():
    # Omega = pi/2 and t = 1 puts the dip on the +y axis
    sched = SweepSchedule(x0_start=-5.0, x0_end=0.0, speed=0.036, Omega=np.pi / 2)
    x0_t = schedule_position(1.0, sched)
    probe = lab_frame_potential_2d(0.0, x0_t, 1.0, SPEC2, sched)
    ref = potential_2d(x0_t, 0.0, SPEC2, x0=x0_t)
    assert probe == pytest.approx(ref, rel=1e-12)


def test_lab_frame_harmonic_part_rotation_invariant():
    spec = PotentialSpec(2, 0.0, 0.2)
    sched = SweepSchedule(x0_start=-5.0, x0_end=0.0, speed=0.01, Omega=0.77)
    for t in (0.0, 13.0, 222.2):
        assert lab_frame_potential_2d(1.3, -2.1, t, spec, sched) == \
            pytest.approx(0.5 * (1.3 ** 2 + 2.1 ** 2), rel=1e-14)
