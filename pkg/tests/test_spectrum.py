import numpy as np
import pytest

from becsweep.errors import NoCrossingError
from becsweep.grids import inner_product, make_grid, wavefield
from becsweep.potentials import PotentialSpec
from becsweep.spectrum import (LevelCurve, LinearOperatorSpec, apply_hamiltonian,
                               find_avoided_crossing, level_scan, lowest_eigenpairs,
                               potential_grid, track_levels_by_overlap,
                               write_level_scan_csv)

TRAP1 = PotentialSpec(1, 0.0, 0.2)
DIP1 = PotentialSpec(1, 13.4, 0.2)


def test_1d_harmonic_spectrum():
    op = LinearOperatorSpec(make_grid(1, 512, 16), TRAP1)
    pairs = lowest_eigenpairs(op, 3)
    for n, p in enumerate(pairs):
        assert p.energy == pytest.approx(n + 0.5, abs=1e-6)
        assert p.residual_norm < 1e-8


def test_2d_rotating_harmonic_spectrum():
    spec = PotentialSpec(2, 25.0, 0.2, x0=0.0, Omega=0.6)
    op = LinearOperatorSpec(make_grid(2, 64, 8.0), spec)
    pairs = lowest_eigenpairs(op, 4)
    for e, p in zip((1.0, 1.4, 1.8, 2.2), pairs):
        assert p.energy == pytest.approx(e, abs=1e-5)
        assert p.residual_norm < 1e-8


@pytest.mark.parametrize("dim", [1, 2])
def test_hamiltonian_hermitian_on_random_fields(dim):
    rng = np.random.default_rng(11)
    if dim == 1:
        grid = make_grid(1, 128, 10)
        spec = DIP1
        spec = PotentialSpec(1, 13.4, 0.2, x0=-3.0)
    else:
        grid = make_grid(2, 32, 6)
        spec = PotentialSpec(2, 25.0, 0.5, x0=-2.0, Omega=0.6)
    op = LinearOperatorSpec(grid, spec)
    v = potential_grid(spec, grid)
    shape = grid.shape
    for _ in range(4):
        a = rng.normal(size=shape) + 1j * rng.normal(size=shape)
        b = rng.normal(size=shape) + 1j * rng.normal(size=shape)
        fa = wavefield(grid, a, renormalize=True)
        fb = wavefield(grid, b, renormalize=True)
        lhs = inner_product(fa, wavefield(grid, apply_hamiltonian(op, fb.amplitudes, v)))
        rhs = np.conj(inner_product(fb, wavefield(grid, apply_hamiltonian(op, fa.amplitudes, v))))
        assert lhs == pytest.approx(rhs, abs=1e-10)


def test_level_scan_flat_without_dip():
    op = LinearOperatorSpec(make_grid(1, 256, 12), PotentialSpec(1, 0.0, 0.2))
    curves = level_scan(op, np.linspace(-5, -1, 5), 3)
    for n, c in enumerate(curves):
        np.testing.assert_allclose(c.energies, n + 0.5, atol=1e-7)


def test_level_scan_requires_monotone_x0():
    op = LinearOperatorSpec(make_grid(1, 256, 12), DIP1)
    with pytest.raises(ValueError):
        level_scan(op, [-3.0, -4.0, -3.5], 2)


def test_avoided_crossing_two_level_model():
    x = np.linspace(-1, 1, 81)
    delta = 0.05
    e = np.sqrt(x ** 2 + delta ** 2)
    a = LevelCurve("E_0", x, -e)
    b = LevelCurve("E_1", x, +e)
    x_star, gap = find_avoided_crossing(a, b)
    assert x_star == pytest.approx(0.0, abs=1e-12)
    assert gap == pytest.approx(2 * delta, rel=1e-10)


def test_avoided_crossing_rejects_parallel_curves():
    x = np.linspace(-1, 1, 41)
    a = LevelCurve("E_0", x, np.zeros_like(x))
    b = LevelCurve("E_1", x, np.ones_like(x))
    with pytest.raises(NoCrossingError):
        find_avoided_crossing(a, b)


def test_fig1_style_crossing_location():
    # narrow ground/first-excited crossing of the swept-dip trap
    op = LinearOperatorSpec(make_grid(1, 512, 16), DIP1)
    curves = level_scan(op, np.arange(-5.2, -3.8, 0.05), 2)
    x_star, gap = find_avoided_crossing(curves[0], curves[1])
    assert -4.8 <= x_star <= -4.2
    assert 0 < gap < 0.1


def test_eigenvalues_converged_under_grid_doubling():
    for n in (1024, 2048):
        op = LinearOperatorSpec(make_grid(1, n, 16), PotentialSpec(1, 13.4, 0.2, x0=-4.5))
        vals = [p.energy for p in lowest_eigenpairs(op, 4)]
        if n == 1024:
            ref = vals
    assert np.max(np.abs(np.array(vals) - np.array(ref))) < 1e-6


def test_overlap_tracking_swaps_through_crossing():
    op = LinearOperatorSpec(make_grid(1, 512, 16), DIP1)
    xs = np.arange(-4.75, -4.35, 0.02)
    curves = level_scan(op, xs, 2, keep_states=True)
    diabatic = track_levels_by_overlap(curves)
    adiabatic = np.column_stack([c.energies for c in curves])
    # diabatic column 0 follows the diving dip level straight through, so it
    # ends above the adiabatic ground curve
    assert diabatic[-1, 0] > adiabatic[-1, 0] + 0.1
    assert diabatic[0, 0] == adiabatic[0, 0]


def test_level_scan_csv(tmp_path):
    op = LinearOperatorSpec(make_grid(1, 256, 12), PotentialSpec(1, 0.0, 0.2))
    curves = level_scan(op, np.linspace(-3, -1, 3), 2)
    path = tmp_path / "scan.csv"
    write_level_scan_csv(path, curves)
    header = path.read_text().splitlines()[0]
    assert header == "x0,E_0,E_1"
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape == (3, 3)
