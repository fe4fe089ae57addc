import math
from dataclasses import replace

import numpy as np
import pandas as pd
import pytest

from ion_lattice import constants
from ion_lattice.crystal import equilibrium
from ion_lattice.ensemble import (
    SCAN_COLUMNS,
    BeamProfile,
    ScatteringScenario,
    mean_delocalized_probability,
    mean_scattering_probability_per_ion,
    per_ion_depths,
    scan_depth,
    scatter_count_pmf,
    scattering_probabilities,
    simulate_subsequent_fraction,
    subsequent_fraction,
    write_scan_csv,
)
from ion_lattice.errors import DomainError
from ion_lattice.pendulum import RampProfile, scattering_probability

KB = constants.BOLTZMANN


@pytest.fixture(scope="module")
def string8(string_trap):
    return equilibrium(8, string_trap)


@pytest.fixture(scope="module")
def zigzag4(zigzag_trap):
    return equilibrium(4, zigzag_trap)


def _scenario(crystal, species, lattice, T0=3.6e-3, **kwargs):
    return ScatteringScenario(
        crystal=crystal, species=species, lattice=lattice, ramp=RampProfile(), T0=T0, **kwargs
    )


def test_pmf_exact_values():
    np.testing.assert_allclose(scatter_count_pmf(2, 0.5), [0.25, 0.5, 0.25])
    np.testing.assert_array_equal(scatter_count_pmf(5, 0.0), [1, 0, 0, 0, 0, 0])
    with pytest.raises(DomainError):
        scatter_count_pmf(3, 1.2)


def test_pmf_mean_and_monte_carlo():
    pmf = scatter_count_pmf(8, 0.3)
    assert pmf.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.dot(np.arange(9), pmf) == pytest.approx(8 * 0.3, abs=1e-12)
    draws = np.random.default_rng(7).binomial(8, 0.3, size=4_000_000)
    empirical = np.bincount(draws, minlength=9) / draws.size
    np.testing.assert_allclose(empirical, pmf, atol=1e-3)


@pytest.mark.parametrize(
    "N, p, expected",
    [
        (1, 0.4, 0.0),
        (1, 1.0, 0.0),
        (8, 1.0, 1 - 1 / 8),
        (4, 1.0, 0.75),
        (8, 0.0, 0.0),
        (8, 0.3, 0.6073531),
    ],
)
def test_subsequent_fraction_values(N, p, expected):
    assert subsequent_fraction(N, p) == pytest.approx(expected, abs=1e-6)


def test_subsequent_fraction_small_p_limit():
    # f ~ (N - 1) p / 2 for p -> 0
    assert subsequent_fraction(8, 1e-9) == pytest.approx(3.5e-9, rel=1e-6)


def test_subsequent_fraction_matches_simulation():
    for N, p in [(8, 0.3), (4, 0.05), (2, 0.5)]:
        simulated = simulate_subsequent_fraction(N, p, 1_000_000, seed=3)
        assert simulated == pytest.approx(subsequent_fraction(N, p), abs=3e-3)


def test_subsequent_fraction_is_monotone():
    by_n = [subsequent_fraction(n, 0.1) for n in range(2, 12)]
    by_p = [subsequent_fraction(6, p) for p in np.linspace(0.01, 1.0, 20)]
    assert all(a < b for a, b in zip(by_n, by_n[1:]))
    assert all(a < b for a, b in zip(by_p, by_p[1:]))
    with pytest.raises(DomainError):
        subsequent_fraction(0, 0.5)


def test_beam_profile():
    beam = BeamProfile(37e-6)
    assert beam.depth_factor(0.0) == 1.0
    assert beam.depth_factor(37e-6) == pytest.approx(math.exp(-2))
    assert beam.depth_factor(5e-6) == pytest.approx(math.exp(-2 * 25 / 1369))
    with pytest.raises(DomainError):
        BeamProfile(0.0)


def test_per_ion_depths(string8, zigzag4, blue_lattice):
    beam = BeamProfile()
    np.testing.assert_allclose(per_ion_depths(string8, blue_lattice, beam), blue_lattice.depth)
    zigzag_depths = per_ion_depths(zigzag4, blue_lattice, beam)
    assert np.all(zigzag_depths < blue_lattice.depth)
    assert np.all(zigzag_depths > 0.9 * blue_lattice.depth)


def test_on_axis_crystal_matches_single_ion(string8, ca40, blue_lattice):
    scenario = _scenario(string8, ca40, blue_lattice)
    ramp = scenario.ramp
    single = scattering_probability(ramp.t_end, 3.6e-3, ramp, blue_lattice, ca40)
    per_ion = scattering_probabilities(scenario, BeamProfile())
    np.testing.assert_allclose(per_ion, single, rtol=1e-12)
    assert mean_scattering_probability_per_ion(scenario, BeamProfile()) == pytest.approx(single)


def test_pumping_efficiency_scales_linearly(zigzag4, ca40, blue_lattice):
    beam = BeamProfile()
    full = mean_scattering_probability_per_ion(_scenario(zigzag4, ca40, blue_lattice), beam)
    half = mean_scattering_probability_per_ion(
        _scenario(zigzag4, ca40, blue_lattice, pumping_efficiency_per_ion=0.5), beam
    )
    none = mean_scattering_probability_per_ion(
        _scenario(zigzag4, ca40, blue_lattice, pumping_efficiency_per_ion=[0, 0, 0, 0]), beam
    )
    assert half == pytest.approx(0.5 * full)
    assert none == 0.0


def test_ion_order_does_not_matter(zigzag4, ca40, blue_lattice):
    beam = BeamProfile()
    shuffled = replace(zigzag4, positions=zigzag4.positions[[2, 0, 3, 1]])
    a = mean_scattering_probability_per_ion(_scenario(zigzag4, ca40, blue_lattice), beam)
    b = mean_scattering_probability_per_ion(_scenario(shuffled, ca40, blue_lattice), beam)
    assert a == pytest.approx(b, rel=1e-12)


def test_narrow_beam_scatters_less(zigzag4, ca40, blue_lattice):
    scenario = _scenario(zigzag4, ca40, blue_lattice)
    wide = mean_delocalized_probability(scenario, BeamProfile(37e-6))
    narrow = mean_delocalized_probability(scenario, BeamProfile(5e-6))
    assert narrow < wide


def test_red_scatters_at_least_as_much_as_blue(zigzag4, ca40, blue_lattice, red_lattice):
    beam = BeamProfile()
    blue = mean_scattering_probability_per_ion(_scenario(zigzag4, ca40, blue_lattice), beam)
    red = mean_scattering_probability_per_ion(_scenario(zigzag4, ca40, red_lattice), beam)
    assert red >= blue


def test_scenario_validation(string8, ca40, blue_lattice):
    with pytest.raises(DomainError):
        _scenario(string8, ca40, blue_lattice, T0=0.0)
    with pytest.raises(DomainError):
        _scenario(string8, ca40, blue_lattice, pumping_efficiency_per_ion=1.5)
    with pytest.raises(DomainError):
        _scenario(string8, ca40, blue_lattice, pumping_efficiency_per_ion=[1.0, 1.0])


def test_scan_zero_depth_row(zigzag4, ca40, blue_lattice):
    table = scan_depth(_scenario(zigzag4, ca40, blue_lattice), BeamProfile(), [0.0, KB * 5e-3])
    first = table.iloc[0]
    assert first["p_per_ion"] == 0.0
    assert first["subsequent_fraction"] == 0.0
    assert first["bunching"] == 0.5
    assert first["nu_latt_MHz"] == 0.0
    assert table.iloc[1]["depth_mK"] == pytest.approx(5.0)
    assert table.iloc[1]["p_per_ion"] > 0


@pytest.mark.timeout(300)
def test_string_subsequent_fraction_stays_low(string8, ca40, blue_lattice):
    grid = np.linspace(0.0, blue_lattice.depth, 6)
    table = scan_depth(_scenario(string8, ca40, blue_lattice), BeamProfile(), grid)
    assert len(table) == 6
    assert np.all(table["subsequent_fraction"] < 0.15)
    assert np.all(np.diff(table["p_delocalized"]) > 0)
    assert 0.19 <= table["bunching"].iloc[-1] <= 0.25
    assert table["nu_latt_MHz"].iloc[-1] == pytest.approx(3.72, rel=0.01)
    # pinned at the nodes, blue-detuned ions scatter less than delocalized ones
    assert table["p_per_ion"].iloc[-1] < table["p_delocalized"].iloc[-1]


def test_scan_csv_layout(tmp_path, zigzag4, ca40, blue_lattice):
    table = scan_depth(_scenario(zigzag4, ca40, blue_lattice), BeamProfile(), [0.0, KB * 2e-3])
    path = tmp_path / "scatter.csv"
    write_scan_csv(table, path)
    raw = path.read_bytes()
    assert b"\r" not in raw
    assert raw.decode("utf-8").splitlines()[0] == ",".join(SCAN_COLUMNS)
    again = pd.read_csv(path)
    assert list(again.columns) == SCAN_COLUMNS
    assert len(again) == 2


@pytest.mark.parametrize("grid", [[], [KB * 2e-3, 0.0], [-1.0, 0.0]])
def test_scan_rejects_bad_grid(zigzag4, ca40, blue_lattice, grid):
    with pytest.raises(DomainError):
        scan_depth(_scenario(zigzag4, ca40, blue_lattice), BeamProfile(), grid)


# Add more tests for different scenarios and edge cases
