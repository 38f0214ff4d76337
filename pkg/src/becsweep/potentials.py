"""Trap-plus-dip potentials and time-dependent sweep schedules.

The trap is the isotropic harmonic potential r^2/2 in oscillator units.
The swept laser adds a Gaussian well of width sigma centered at x0 < 0
whose signed depth follows a smooth amplitude profile of x0 that vanishes
at x0 = 0, so the dip switches off exactly when the sweep reaches the trap
center:

    1D:  V(x)    = x^2/2       + U0 * arctan(x0)        * G(x - x0)
    2D:  V(x, y) = (x^2+y^2)/2 - U0 * sqrt(arctan|x0|)  * G(x - x0, y)

with G a unit-amplitude Gaussian, exp(-(dx^2 [+ dy^2]) / (2 sigma^2)).
The 2D exponent groups both squared displacements under one minus sign;
the dip is localized in x and y.  Profiles are pluggable: any smooth
function of x0 works for the excitation scheme, these two are the
defaults.
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError, ScheduleDomainError


def arctan_profile(x0: float) -> float:
    """Default 1D amplitude profile: arctan(x0), negative (a well) for x0 < 0."""
    return math.atan(x0)


def sqrt_arctan_profile(x0: float) -> float:
    """Default 2D amplitude profile: -sqrt(arctan|x0|), always a well."""
    return -math.sqrt(math.atan(abs(x0)))


@dataclass(frozen=True)
class PotentialSpec:
    """Parameters of the trap-plus-dip potential.

    amplitude_profile maps x0 to a dimensionless signed profile value; the
    dip coefficient multiplying the Gaussian is U0 * profile(x0).  When
    None, the dimension-appropriate default above is used.
    """

    dimension: int
    U0: float
    sigma: float
    x0: float = 0.0
    Omega: float = 0.0
    amplitude_profile: Callable[[float], float] | None = None

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ConfigurationError(f"dimension must be 1 or 2, got {self.dimension}")
        if not (self.sigma > 0):
            raise ConfigurationError(f"sigma must be positive, got {self.sigma}")
        if self.U0 < 0:
            raise ConfigurationError(f"U0 must be non-negative, got {self.U0}")
        if self.Omega < 0:
            raise ConfigurationError(f"Omega must be non-negative, got {self.Omega}")
        if self.dimension == 1 and self.Omega != 0.0:
            raise ConfigurationError("Omega must be 0 in 1D")


def dip_coefficient(spec: PotentialSpec, x0: float | None = None) -> float:
    """Signed coefficient of the Gaussian dip, U0 * profile(x0)."""
    if x0 is None:
        x0 = spec.x0
    profile = spec.amplitude_profile
    if profile is None:
        profile = arctan_profile if spec.dimension == 1 else sqrt_arctan_profile
    return spec.U0 * profile(x0)


def dip_coefficient_dx0(spec: PotentialSpec, x0: float | None = None) -> float:
    """d/dx0 of the dip coefficient.

    Analytic for the default profiles; central finite difference (h = 1e-6)
    for custom profiles.  The 2D default has a sqrt cusp at x0 = 0.
    """
    if x0 is None:
        x0 = spec.x0
    if spec.amplitude_profile is None:
        if spec.dimension == 1:
            return spec.U0 / (1.0 + x0 * x0)
        a = math.atan(abs(x0))
        if a == 0.0:
            raise ZeroDivisionError("2D dip amplitude has infinite slope at x0 = 0")
        return -spec.U0 * math.copysign(1.0, x0) / (2.0 * math.sqrt(a) * (1.0 + x0 * x0))
    h = 1e-6
    return (dip_coefficient(spec, x0 + h) - dip_coefficient(spec, x0 - h)) / (2 * h)


def potential_1d(x, spec: PotentialSpec, x0: float | None = None):
    """V(x) = x^2/2 + U0 arctan(x0) exp(-(x - x0)^2 / (2 sigma^2))."""
    if spec.dimension != 1:
        raise ConfigurationError("potential_1d requires a 1D spec")
    if x0 is None:
        x0 = spec.x0
    x = np.asarray(x, dtype=float)
    d = x - x0
    return 0.5 * x * x + dip_coefficient(spec, x0) * np.exp(-d * d / (2.0 * spec.sigma ** 2))


def potential_1d_dx0(x, spec: PotentialSpec, x0: float | None = None):
    """dV/dx0 of the 1D potential (the harmonic part drops out)."""
    if x0 is None:
        x0 = spec.x0
    x = np.asarray(x, dtype=float)
    d = x - x0
    gauss = np.exp(-d * d / (2.0 * spec.sigma ** 2))
    coeff = dip_coefficient(spec, x0)
    dcoeff = dip_coefficient_dx0(spec, x0)
    return (dcoeff + coeff * d / spec.sigma ** 2) * gauss


def potential_2d(x, y, spec: PotentialSpec, x0: float | None = None):
    """V(x,y) = (x^2+y^2)/2 - U0 sqrt(arctan|x0|) exp(-((x-x0)^2+y^2)/(2 sigma^2))."""
    if spec.dimension != 2:
        raise ConfigurationError("potential_2d requires a 2D spec")
    if x0 is None:
        x0 = spec.x0
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = x - x0
    gauss = np.exp(-(d * d + y * y) / (2.0 * spec.sigma ** 2))
    return 0.5 * (x * x + y * y) + dip_coefficient(spec, x0) * gauss


@dataclass(frozen=True)
class SweepSchedule:
    """Piecewise-linear trajectory x0(t), repeated over `passes` passes.

    Each pass ramps x0 from x0_start to x0_end at the given speed; at the
    start of every pass x0 resets instantaneously to x0_start.  (With the
    default profiles the dip is nearly flat at the reset position for
    x0_start <= -7, so the reset perturbs the state negligibly.)  Omega is
    the rotation frequency of the 2D spiral; in the lab frame the dip
    center sits at angle Omega * t.
    """

    x0_start: float
    x0_end: float
    speed: float
    passes: int = 1
    Omega: float = 0.0

    def __post_init__(self):
        if not (self.speed > 0):
            raise ConfigurationError(f"sweep speed must be positive, got {self.speed}")
        if self.passes < 1:
            raise ConfigurationError(f"passes must be >= 1, got {self.passes}")
        if self.x0_end == self.x0_start:
            raise ConfigurationError("x0_start and x0_end must differ")

    @property
    def pass_duration(self) -> float:
        return abs(self.x0_end - self.x0_start) / self.speed

    @property
    def total_duration(self) -> float:
        return self.passes * self.pass_duration


def schedule_position(t: float, sched: SweepSchedule) -> float:
    """x0 at time t, piecewise linear with instantaneous per-pass reset."""
    duration = sched.pass_duration
    total = sched.passes * duration
    if t < 0 or t > total * (1 + 1e-12):
        raise ScheduleDomainError(
            f"t = {t} outside schedule range [0, {total}]"
        )
    p = min(int(t / duration), sched.passes - 1)
    offset = min(t - p * duration, duration)
    sign = 1.0 if sched.x0_end > sched.x0_start else -1.0
    return sched.x0_start + sched.speed * offset * sign


def lab_frame_dip_center(t: float, sched: SweepSchedule) -> tuple[float, float]:
    """Lab-frame dip center: (x0(t), 0) rotated by theta = Omega * t."""
    x0 = schedule_position(t, sched)
    theta = sched.Omega * t
    return (x0 * math.cos(theta), x0 * math.sin(theta))


def lab_frame_potential_2d(x, y, t: float, spec: PotentialSpec, sched: SweepSchedule):
    """2D potential with the dip center rotated to angle Omega * t.

    Equals potential_2d evaluated in coordinates rotated by -Omega*t, which
    is the lab-frame counterpart of propagating with the static dip plus the
    -Omega*L_z rotating-frame term.
    """
    if spec.dimension != 2:
        raise ConfigurationError("lab_frame_potential_2d requires a 2D spec")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x0 = schedule_position(t, sched)
    cx, cy = lab_frame_dip_center(t, sched)
    dx = x - cx
    dy = y - cy
    gauss = np.exp(-(dx * dx + dy * dy) / (2.0 * spec.sigma ** 2))
    return 0.5 * (x * x + y * y) + dip_coefficient(spec, x0) * gauss
