import math
import textwrap

import pytest

from ion_lattice import constants
from ion_lattice.crystal import TrapConfig
from ion_lattice.pendulum import IonSpecies, LatticeConfig


@pytest.fixture
def unexpected_param_msg():
    return "Error: Unexpected parameter(s): "


@pytest.fixture(scope="session")
def ca40():
    return IonSpecies.calcium40()


@pytest.fixture(scope="session")
def k866():
    return 2 * math.pi / constants.CA40_LATTICE_WAVELENGTH


@pytest.fixture(scope="session")
def string_trap():
    """8-ion linear string."""
    return TrapConfig.from_frequencies(70e3, 350e3)


@pytest.fixture(scope="session")
def zigzag_trap():
    """4-ion planar zigzag."""
    return TrapConfig.from_frequencies(85e3, 170e3)


@pytest.fixture(scope="session")
def octahedron_trap():
    """6-ion three-dimensional crystal."""
    return TrapConfig.from_frequencies(105e3, 190e3)


@pytest.fixture(scope="session")
def blue_lattice():
    return LatticeConfig.from_wavelength(
        constants.BOLTZMANN * 25e-3,
        constants.CA40_LATTICE_WAVELENGTH,
        constants.DEFAULT_DETUNING,
    )


@pytest.fixture(scope="session")
def red_lattice():
    return LatticeConfig.from_wavelength(
        constants.BOLTZMANN * 25e-3,
        constants.CA40_LATTICE_WAVELENGTH,
        -constants.DEFAULT_DETUNING,
    )


@pytest.fixture
def write_config(tmp_path):
    """Writes a TOML run configuration and returns its path."""

    def _write(body, name="run.toml"):
        path = tmp_path / name
        path.write_text(textwrap.dedent(body), encoding="utf-8")
        return path

    return _write
