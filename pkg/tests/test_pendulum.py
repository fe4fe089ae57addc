import math
import warnings

import numpy as np
import pytest
from scipy import integrate

from ion_lattice import constants
from ion_lattice.errors import AdiabaticityWarning, DivergenceError, DomainError
from ion_lattice.pendulum import (
    EnergyEnsemble,
    IonSpecies,
    LatticeConfig,
    RampProfile,
    action_cdf,
    bunching,
    bunching_given_energy,
    delocalized_scattering_probability,
    dimensionless_action,
    energy_density,
    energy_normalization,
    far_detuned_antinode_rate,
    lattice_frequency,
    mean_scattering_rate,
    normalized_period,
    position_density_given_energy,
    position_weight,
    rabi_frequency,
    remap_energy,
    sample_energies,
    scattering_probability,
    scattering_rate,
    total_position_density,
)
from ion_lattice.specfun import integrate_with_endpoint_singularity

KB = constants.BOLTZMANN
U25 = KB * 25e-3


def test_lattice_frequency_anchor(ca40, k866):
    nu = lattice_frequency(25e-3, ca40, k866)
    assert nu == pytest.approx(3.7e6, rel=0.02)
    assert lattice_frequency(0.0, ca40, k866) == 0.0
    with pytest.raises(DomainError):
        lattice_frequency(-1e-3, ca40, k866)


def test_lattice_frequency_scales_with_sqrt_depth(ca40, k866):
    assert lattice_frequency(100e-3, ca40, k866) == pytest.approx(
        2 * lattice_frequency(25e-3, ca40, k866), rel=1e-12
    )


@pytest.mark.parametrize("x", [1e-9, 1e-4, 0.01])
def test_action_small_energy_limit(x):
    assert dimensionless_action(x * U25, U25) == pytest.approx(x, rel=2e-3)


def test_action_continuous_at_separatrix():
    below = dimensionless_action((1 - 1e-10) * U25, U25)
    at = dimensionless_action(U25, U25)
    above = dimensionless_action((1 + 1e-10) * U25, U25)
    assert at == pytest.approx(4 / math.pi, rel=1e-12)
    assert below == pytest.approx(at, abs=1e-6)
    assert above == pytest.approx(at, abs=1e-6)
    assert below < at < above


@pytest.mark.parametrize("x", [0.05, 0.3, 0.7, 0.95, 1.05, 1.5, 3.0, 10.0])
def test_period_is_derivative_of_action(x):
    h = 1e-6 * x
    ds = (dimensionless_action((x + h) * U25, U25) - dimensionless_action((x - h) * U25, U25)) / (
        2 * h
    )
    assert normalized_period(x * U25, U25) == pytest.approx(ds, rel=1e-6)


def test_period_limits():
    assert normalized_period(0.0, U25) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(DivergenceError):
        normalized_period(U25, U25)
    # fast rotation: the period shrinks like 1/sqrt(E)
    assert normalized_period(1e4 * U25, U25) == pytest.approx(0.01, rel=1e-3)


@pytest.mark.parametrize("T0,T_latt", [(3.6e-3, 25e-3), (3.1e-3, 25e-3), (1e-3, 50e-3), (20e-3, 5e-3)])
def test_energy_density_normalized(T0, T_latt):
    assert energy_normalization(T0, KB * T_latt) == pytest.approx(1.0, abs=1e-6)


def test_energy_density_matches_action_cdf():
    T0, U0 = 3.6e-3, U25
    below = integrate_with_endpoint_singularity(
        lambda x: energy_density(x * U0, T0, U0) * U0, 0.0, 0.5, tol=1e-10
    )
    assert below == pytest.approx(float(action_cdf(0.5 * U0, T0, U0)), abs=1e-8)


def _inside_density(kz, E):
    # rounding can put a point a hair beyond the turning point
    if math.sin(kz) ** 2 >= E / U25:
        return 0.0
    return position_density_given_energy(kz, E, U25)


@pytest.mark.parametrize("x", [0.1, 0.5, 0.99, 1.01, 2.0])
def test_position_density_normalized(x):
    E = x * U25
    if x < 1:
        turn = math.asin(math.sqrt(x))
        lo, hi, singular = -turn, turn, [-turn, turn]
    else:
        lo, hi, singular = -math.pi / 2, math.pi / 2, []
    total = integrate_with_endpoint_singularity(
        lambda kz: _inside_density(kz, E), lo, hi, singular
    )
    assert total == pytest.approx(1.0, abs=1e-6)


def test_position_density_domain():
    with pytest.raises(DomainError):
        position_density_given_energy(1.0, 0.1 * U25, U25)
    with pytest.raises(DomainError):
        position_density_given_energy(2.0, 3 * U25, U25)


@pytest.mark.timeout(60)
def test_total_position_density_normalized():
    total = integrate.quad(
        lambda kz: total_position_density(kz, 3.6e-3, U25), -math.pi / 2, math.pi / 2, limit=200
    )[0]
    assert total == pytest.approx(1.0, abs=1e-4)


def test_bunching_given_energy_limits():
    assert bunching_given_energy(0.0, U25) == 0.0
    assert bunching_given_energy(1e-8 * U25, U25) == pytest.approx(0.5e-8, rel=1e-6)
    assert bunching_given_energy(1e6 * U25, U25) == pytest.approx(0.5, abs=1e-6)


@pytest.mark.timeout(60)
@pytest.mark.parametrize("T0", [3.6e-3, 3.5e-3, 3.1e-3])
def test_bunching_anchor(T0):
    assert 0.19 <= bunching(T0, U25) <= 0.25


def test_bunching_decreases_with_depth():
    values = [bunching(3.6e-3, KB * t) for t in (1e-3, 5e-3, 25e-3, 100e-3)]
    assert all(a > b for a, b in zip(values, values[1:]))
    assert abs(bunching(3.6e-3, KB * 3.6e-5) - 0.5) < 0.05


@pytest.mark.timeout(120)
def test_bunching_matches_classical_trajectories():
    """Thermal particles in a slowly deepened lattice, integrated directly."""
    theta = 3.6 / 25
    n = 1500
    gen = np.random.default_rng(7)
    phi0 = gen.uniform(-math.pi / 2, math.pi / 2, n)
    v0 = gen.normal(0.0, math.sqrt(theta / 2), n)
    # time in units of the final small-oscillation period / 2 pi
    t_ramp = 2 * math.pi * 60
    t_hold = 2 * math.pi * 5

    def rhs(t, y):
        f = min(t / t_ramp, 1.0)
        return np.concatenate([y[n:], -0.5 * f * np.sin(2 * y[:n])])

    sol = integrate.solve_ivp(
        rhs,
        (0.0, t_ramp + t_hold),
        np.concatenate([phi0, v0]),
        rtol=1e-7,
        atol=1e-9,
        t_eval=np.linspace(t_ramp, t_ramp + t_hold, 40),
    )
    simulated = np.mean(np.sin(sol.y[:n]) ** 2)
    assert simulated == pytest.approx(bunching(3.6e-3, U25), abs=0.04)


def test_sampled_energies_follow_action_distribution():
    E = sample_energies(20000, 3.6e-3, U25, seed=3)
    trapped = np.mean(E < U25)
    assert trapped == pytest.approx(float(action_cdf(U25, 3.6e-3, U25)), abs=0.015)
    np.testing.assert_array_equal(E, sample_energies(20000, 3.6e-3, U25, seed=3))


def test_remap_energy_round_trip_and_harmonic_limit():
    E = np.array([1e-6, 0.3, 0.99, 1.5, 4.0]) * U25
    back = remap_energy(remap_energy(E, U25, 4 * U25), 4 * U25, U25)
    np.testing.assert_allclose(back, E, rtol=1e-9)
    # deep in the well the energy follows the oscillation frequency, E ~ sqrt(U0)
    assert remap_energy(1e-6 * U25, U25, 4 * U25) == pytest.approx(2e-6 * U25, rel=1e-4)


def test_energy_ensemble(ca40):
    ens = EnergyEnsemble(3.6e-3, U25)
    assert ens.theta == pytest.approx(3.6 / 25)
    assert ens.bunching() == bunching(3.6e-3, U25)
    assert ens.at_depth(2 * U25).theta == pytest.approx(1.8 / 25)
    with pytest.raises(DomainError):
        EnergyEnsemble(0.0, U25)


def test_ramp_profile():
    ramp = RampProfile()
    assert ramp.t_end == pytest.approx(3e-6)
    assert ramp.fraction_at(0.0) == 0.0
    assert ramp.fraction_at(1e-6) == pytest.approx(0.5)
    assert ramp.fraction_at(2.5e-6) == 1.0
    assert RampProfile(shape="cosine").fraction_at(1e-6) == pytest.approx(0.5)
    with pytest.raises(DomainError):
        ramp.fraction_at(4e-6)
    with pytest.raises(DomainError):
        RampProfile(shape="square")


def test_fast_ramp_warns(ca40, k866):
    nu = lattice_frequency(25e-3, ca40, k866)
    with pytest.warns(AdiabaticityWarning):
        assert not RampProfile().check_adiabatic(nu)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert RampProfile(ramp_duration=10e-6).check_adiabatic(nu)


def test_lattice_config_sign_convention(k866):
    blue = LatticeConfig(U25, k866, 1.0)
    red = LatticeConfig(U25, k866, -1.0)
    assert blue.is_blue and not red.is_blue
    assert blue.signed_depth == U25 and red.signed_depth == -U25
    assert position_weight(0.2, blue) == 0.2
    assert position_weight(0.2, red) == pytest.approx(0.8)
    with pytest.raises(DomainError):
        LatticeConfig(-U25, k866, 1.0)
    with pytest.raises(DomainError):
        LatticeConfig(U25, k866, 0.0)


def test_far_detuned_rate_matches_two_level_rate(ca40, blue_lattice):
    rabi = rabi_frequency(blue_lattice.depth, blue_lattice.detuning)
    full = scattering_rate(math.pi / 2, rabi, blue_lattice, ca40)
    simple = far_detuned_antinode_rate(blue_lattice.depth, blue_lattice, ca40)
    assert full == pytest.approx(simple, rel=5e-3)
    assert full < simple
    assert scattering_rate(0.0, rabi, blue_lattice, ca40) == 0.0


@pytest.mark.timeout(120)
def test_position_averaged_rate_matches_bunching_product(ca40, blue_lattice):
    T0 = 3.6e-3
    rabi = rabi_frequency(blue_lattice.depth, blue_lattice.detuning)
    # the density is even in kz, so one half-well suffices
    averaged = 2 * integrate.quad(
        lambda kz: scattering_rate(kz, rabi, blue_lattice, ca40)
        * total_position_density(kz, T0, blue_lattice.depth),
        0.0,
        math.pi / 2,
        limit=200,
    )[0]
    ramp = RampProfile()
    simple = mean_scattering_rate(ramp.t_end, T0, ramp, blue_lattice, ca40)
    assert simple == pytest.approx(
        far_detuned_antinode_rate(blue_lattice.depth, blue_lattice, ca40)
        * bunching(T0, blue_lattice.depth)
    )
    assert averaged == pytest.approx(simple, rel=5e-3)


def test_rate_from_intensity(ca40, k866):
    cfg = LatticeConfig(U25, k866, 1.0, antinode_intensity=1e7, cross_section_397=1e-20)
    photon_energy = constants.HBAR * constants.SPEED_OF_LIGHT * k866
    assert far_detuned_antinode_rate(U25, cfg, ca40) == pytest.approx(1e7 / photon_energy * 1e-20)
    assert far_detuned_antinode_rate(0.5 * U25, cfg, ca40) == pytest.approx(
        0.5e7 / photon_energy * 1e-20
    )


def test_p32_channel_increases_rate(blue_lattice):
    plain = IonSpecies.calcium40()
    with_p32 = IonSpecies.calcium40(p32_relative_strength=1.0)
    assert far_detuned_antinode_rate(U25, blue_lattice, with_p32) > far_detuned_antinode_rate(
        U25, blue_lattice, plain
    )


@pytest.mark.timeout(120)
def test_scattering_probability_matches_rate_equation(ca40, blue_lattice):
    ramp = RampProfile()
    T0 = 3.6e-3

    def rhs(t, y):
        return (1 - y) * mean_scattering_rate(min(t, ramp.t_end), T0, ramp, blue_lattice, ca40)

    sol = integrate.solve_ivp(
        rhs, (0.0, ramp.t_end), [0.0], rtol=1e-11, atol=1e-14, max_step=2e-8
    )
    with pytest.warns(AdiabaticityWarning):
        p = scattering_probability(ramp.t_end, T0, ramp, blue_lattice, ca40)
    assert p == pytest.approx(sol.y[0, -1], rel=1e-6)


@pytest.mark.timeout(120)
def test_red_scatters_more_than_blue(ca40, blue_lattice, red_lattice):
    ramp = RampProfile()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AdiabaticityWarning)
        p_blue = scattering_probability(ramp.t_end, 3.6e-3, ramp, blue_lattice, ca40)
        p_red = scattering_probability(ramp.t_end, 3.6e-3, ramp, red_lattice, ca40)
    p_deloc = delocalized_scattering_probability(ramp.t_end, ramp, blue_lattice, ca40)
    assert p_blue < p_deloc < p_red


def test_scattering_probability_trivial_cases(ca40, blue_lattice):
    ramp = RampProfile()
    assert scattering_probability(0.0, 3.6e-3, ramp, blue_lattice, ca40) == 0.0
    with pytest.raises(DomainError):
        scattering_probability(ramp.t_end, 3.6e-3, ramp, blue_lattice, ca40, occupancy=1.5)


# Add more tests for different scenarios and edge cases
