import math
import warnings

import numpy as np
import pytest

from ion_lattice import constants
from ion_lattice.crystal import (
    CrystalPotential,
    CrystalState,
    TrapConfig,
    classify_structure,
    critical_radial_ratio,
    depth_from_frequency,
    equilibrium,
    gamma_parameters,
    length_scale,
    mode_weights,
    normal_modes,
    out_of_plane_count,
    spot_variance_model,
    total_potential,
)
from ion_lattice.errors import (
    DomainError,
    SaddleWarning,
    SingularConfigurationError,
    UnstableConfigurationError,
)
from ion_lattice.pendulum import LatticeConfig


def test_length_scale(ca40, string_trap):
    ell = length_scale(string_trap, ca40)
    expected = (constants.COULOMB_CONSTANT / (ca40.mass * string_trap.omega_z**2)) ** (1 / 3)
    assert ell == pytest.approx(expected)
    assert 20e-6 < ell < 30e-6


def test_single_ion_at_origin(string_trap):
    state = equilibrium(1, string_trap)
    np.testing.assert_array_equal(state.positions, np.zeros((1, 3)))
    assert classify_structure(state) == "linear"


@pytest.mark.parametrize(
    "N,expected",
    [
        (2, [-(0.25 ** (1 / 3)), 0.25 ** (1 / 3)]),
        (3, [-(1.25 ** (1 / 3)), 0.0, 1.25 ** (1 / 3)]),
    ],
)
def test_analytic_string_positions(N, expected, string_trap):
    state = equilibrium(N, string_trap, seed=1)
    z = np.sort(state.scaled_positions[:, 2])
    np.testing.assert_allclose(z, expected, atol=1e-7)
    np.testing.assert_allclose(state.scaled_positions[:, :2], 0.0, atol=1e-7)
    assert state.gradient_norm <= 1e-10


def test_two_ions_match_documented_spacing(string_trap):
    state = equilibrium(2, string_trap)
    np.testing.assert_allclose(np.abs(state.scaled_positions[:, 2]), 0.630, atol=1e-3)


@pytest.mark.parametrize(
    "trap_name,N,structure",
    [
        ("string_trap", 8, "linear"),
        ("zigzag_trap", 4, "planar"),
        ("octahedron_trap", 6, "3d"),
    ],
)
def test_structure_regimes(trap_name, N, structure, request):
    trap = request.getfixturevalue(trap_name)
    state = equilibrium(N, trap, seed=0)
    assert classify_structure(state) == structure


def test_zigzag_spreads_along_weak_axis(zigzag_trap):
    state = equilibrium(4, zigzag_trap, seed=0)
    pos = state.scaled_positions
    assert np.sum(np.abs(pos[:, 1]) > 0.05) >= 2
    np.testing.assert_allclose(pos[:, 0], 0.0, atol=1e-6)
    assert out_of_plane_count(state, zigzag_trap) == 0


def test_three_dimensional_crystal_has_two_out_of_plane_ions(octahedron_trap):
    state = equilibrium(6, octahedron_trap, seed=0)
    assert out_of_plane_count(state, octahedron_trap) == 2


def test_multistart_is_deterministic(zigzag_trap):
    a = equilibrium(4, zigzag_trap, seed=5)
    b = equilibrium(4, zigzag_trap, seed=5)
    np.testing.assert_array_equal(a.positions, b.positions)


def _random_configuration(n, seed):
    gen = np.random.default_rng(seed)
    return np.concatenate([0.3 * gen.normal(size=2 * n), np.linspace(-2, 2, n)])


@pytest.mark.parametrize("with_lattice", [False, True])
def test_gradient_and_hessian_match_finite_differences(with_lattice, zigzag_trap, blue_lattice):
    lattice = blue_lattice.with_depth(constants.BOLTZMANN * 0.5e-3) if with_lattice else None
    pot = CrystalPotential(4, zigzag_trap, lattice)
    x = _random_configuration(4, 11)
    h = 1e-6
    eye = np.eye(x.size)
    num_grad = np.array([(pot.energy(x + h * e) - pot.energy(x - h * e)) / (2 * h) for e in eye])
    np.testing.assert_allclose(pot.gradient(x), num_grad, atol=1e-6)
    num_hess = np.array(
        [(pot.gradient(x + h * e) - pot.gradient(x - h * e)) / (2 * h) for e in eye]
    )
    np.testing.assert_allclose(pot.hessian(x), num_hess, atol=1e-5)
    np.testing.assert_allclose(pot.hessian(x), pot.hessian(x).T, atol=1e-12)


def test_total_potential_units(string_trap, ca40):
    ell = length_scale(string_trap, ca40)
    pos = np.array([[0.0, 0.0, -ell], [0.0, 0.0, ell]])
    expected = ca40.mass * string_trap.omega_z**2 * ell**2 + constants.COULOMB_CONSTANT / (2 * ell)
    assert total_potential(pos, string_trap) == pytest.approx(expected, rel=1e-12)


def test_coincident_ions_rejected(string_trap):
    with pytest.raises(SingularConfigurationError):
        total_potential(np.zeros((2, 3)), string_trap)


def test_string_mode_spectrum(string_trap):
    state = equilibrium(5, string_trap)
    modes = normal_modes(state, string_trap)
    b = modes.coordinates
    np.testing.assert_allclose(b.T @ b, np.eye(15), atol=1e-10)
    _, axial = mode_weights(modes, string_trap)
    axial_evals = np.sort(modes.eigenvalues[axial > 0.5])
    # center-of-mass and breathing modes
    assert axial_evals[0] == pytest.approx(1.0, abs=1e-8)
    assert axial_evals[1] == pytest.approx(3.0, abs=1e-8)
    # radial center-of-mass modes sit at the trap frequencies
    assert np.max(modes.frequencies) == pytest.approx(string_trap.omega_x, rel=1e-8)


def test_highest_mode_period_of_eight_ion_string(string_trap):
    state = equilibrium(8, string_trap)
    modes = normal_modes(state, string_trap)
    assert np.max(modes.frequencies_hz) == pytest.approx(1 / 2.6e-6, rel=0.05)


def test_saddle_is_reported(zigzag_trap):
    guess = np.zeros((4, 3))
    guess[:, 2] = [-1.5e-5, -0.5e-5, 0.5e-5, 1.5e-5]
    with pytest.warns(SaddleWarning):
        state = equilibrium(4, zigzag_trap, initial_guess=guess)
    assert state.is_saddle
    with pytest.raises(UnstableConfigurationError) as info:
        normal_modes(state, zigzag_trap)
    assert info.value.eigenvalues[0] < 0


@pytest.mark.parametrize("N,expected,tol", [(2, 1.0, 1e-8), (3, math.sqrt(2.4), 1e-6), (4, 2.038, 2e-3)])
def test_critical_radial_ratio(N, expected, tol):
    assert critical_radial_ratio(N) == pytest.approx(expected, abs=tol)


def test_critical_ratio_needs_two_ions():
    with pytest.raises(DomainError):
        critical_radial_ratio(1)


def test_single_ion_gamma(string_trap):
    state = equilibrium(1, string_trap)
    g = gamma_parameters(normal_modes(state, string_trap))
    ax, ay = string_trap.radial_ratios
    np.testing.assert_allclose(g.gamma[0], [1 / math.sqrt(ax), 1 / math.sqrt(ay), 1.0])
    assert g.gamma_radial_projected[0] == pytest.approx(math.sqrt(0.5 * (1 / ax + 1 / ay)))


def test_spot_variance_model(ca40, string_trap):
    assert spot_variance_model(0.0, 0.7, string_trap, ca40, 2e-6) == pytest.approx(4e-12)
    thermal = constants.BOLTZMANN * 1e-3 / (ca40.mass * string_trap.omega_z**2)
    assert spot_variance_model(1e-3, 0.5, string_trap, ca40, 0.0) == pytest.approx(0.25 * thermal)
    with pytest.raises(DomainError):
        spot_variance_model(-1.0, 0.5, string_trap, ca40, 0.0)


@pytest.mark.timeout(120)
@pytest.mark.parametrize(
    "trap_name,N",
    [("string_trap", 8), ("zigzag_trap", 4), ("octahedron_trap", 6)],
)
def test_deep_lattice_axial_degeneracy(trap_name, N, request, ca40, k866, blue_lattice):
    trap = request.getfixturevalue(trap_name)
    nu = 5e6
    lattice = blue_lattice.with_depth(depth_from_frequency(nu, ca40, k866))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SaddleWarning)
        state = equilibrium(N, trap, lattice, seed=0)
    modes = normal_modes(state, trap, lattice)
    _, axial = mode_weights(modes, trap)
    axial_freqs = modes.frequencies_hz[axial > 0.5]
    assert axial_freqs.size == N
    np.testing.assert_allclose(axial_freqs, nu, rtol=0.01)


def test_lattice_pins_ions_at_nodes(string_trap, ca40, k866, blue_lattice):
    lattice = blue_lattice.with_depth(depth_from_frequency(2e6, ca40, k866))
    state = equilibrium(3, string_trap, lattice)
    phase = np.sin(k866 * state.positions[:, 2]) ** 2
    assert np.all(phase < 1e-2)
    red = LatticeConfig(lattice.depth, k866, -1.0)
    state = equilibrium(3, string_trap, red)
    assert np.all(np.sin(k866 * state.positions[:, 2]) ** 2 > 0.99)


def test_red_lattice_moves_single_ion_to_antinode(string_trap, ca40, k866):
    red = LatticeConfig(depth_from_frequency(2e6, ca40, k866), k866, -1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error", SaddleWarning)
        state = equilibrium(1, string_trap, red)
    assert not state.is_saddle
    assert np.sin(k866 * state.positions[0, 2]) ** 2 > 0.99
    modes = normal_modes(state, string_trap, red)
    assert np.all(modes.eigenvalues > 0)
    assert modes.frequencies_hz.max() == pytest.approx(2e6, rel=0.01)


@pytest.mark.timeout(120)
def test_red_lattice_deep_string(string_trap, ca40, k866):
    nu = 5e6
    red = LatticeConfig(depth_from_frequency(nu, ca40, k866), k866, -1.0)
    state = equilibrium(5, string_trap, red, seed=0)
    assert not state.is_saddle
    assert np.all(np.sin(k866 * state.positions[:, 2]) ** 2 > 0.95)
    modes = normal_modes(state, string_trap, red)
    _, axial = mode_weights(modes, string_trap)
    np.testing.assert_allclose(modes.frequencies_hz[axial > 0.5], nu, rtol=0.01)


def test_trap_config_validation():
    trap = TrapConfig.from_frequencies(85e3, 170e3)
    assert trap.omega_x > trap.omega_y
    assert trap.weak_radial_axis == 1
    with pytest.raises(DomainError):
        TrapConfig(omega_z=-1.0, omega_x=1.0, omega_y=1.0)
    with pytest.raises(DomainError):
        TrapConfig(omega_z=1.0, omega_x=1.0, omega_y=1.0, q_radial=2.0)


def test_crystal_state_scaling():
    state = CrystalState(np.array([[0.0, 0.0, 2e-6]]), 0.0, 0.0, 1e-6)
    assert state.n_ions == 1
    np.testing.assert_allclose(state.scaled_positions, [[0.0, 0.0, 2.0]])


# Add more tests for different scenarios and edge cases
