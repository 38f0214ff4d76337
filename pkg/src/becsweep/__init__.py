"""Condensate excitation by sweeping a localized potential well through a trap.

Library layout:

- grids:      uniform grids, complex fields, inner products, binary dumps
- potentials: trap-plus-dip potentials and sweep schedules
- oscillator: analytic harmonic-oscillator reference states
- spectrum:   single-particle spectra and avoided-crossing detection
- dynamics:   split-step time propagation and imaginary-time relaxation
- stationary: nonlinear stationary states, branch continuation, level loops
- experiments / cli: config-driven reproduction runs with manifests
"""

__version__ = "0.1.0"

from .grids import Grid, WaveField, inner_product, load_field, make_grid, norm, normalize, save_field, wavefield
from .potentials import PotentialSpec, SweepSchedule, lab_frame_potential_2d, potential_1d, potential_2d, schedule_position

__all__ = [
    "Grid", "WaveField", "make_grid", "wavefield", "norm", "normalize",
    "inner_product", "save_field", "load_field",
    "PotentialSpec", "SweepSchedule", "potential_1d", "potential_2d",
    "lab_frame_potential_2d", "schedule_position",
    "__version__",
]
