import math

import numpy as np

from ..constants import BOLTZMANN
from ..crystal import TrapConfig, equilibrium
from ..ensemble import SCAN_COLUMNS, BeamProfile, ScatteringScenario, scan_depth
from ..errors import IonLatticeError
from ..pendulum import IonSpecies, LatticeConfig, RampProfile
from ..run_config import parse_quantity


class ToolScatteringScan:
    def __init__(self):
        self.name = "scattering_scan"

        self.tool_description = {
            "name": self.name,
            "description": f"""Scans the lattice depth and reports, for a crystal of N ions adiabatically loaded into the lattice, the mean probability per ion of scattering a lattice photon, the fraction of detected photons that are not the first one of a sequence and the bunching parameter.
The lattice is ramped up linearly in 2 us and held for 1 us. A positive detuning (blue) pins ions at the intensity nodes, a negative one (red) at the antinodes.

Use {self.name} in these <use_cases></use_cases>:
<use_cases>
<use_case>Predicting scattering probabilities versus lattice depth</use_case>
<use_case>Comparing red and blue detuned lattices</use_case>
<use_case>Checking that repeated scattering stays a small correction</use_case>
</use_cases>

Returns a CSV table with columns {", ".join(SCAN_COLUMNS)}.""",
            "input_schema": {
                "type": "object",
                "properties": {
                    "n_ions": {"type": "integer", "description": "Number of ions"},
                    "axial_frequency": {
                        "type": "string",
                        "description": "Axial secular frequency with unit, e.g. '70 kHz'",
                    },
                    "radial_frequency": {
                        "type": "string",
                        "description": "Mean radial secular frequency with unit, e.g. '350 kHz'",
                    },
                    "initial_temperature": {
                        "type": "string",
                        "description": "Crystal temperature before the ramp, e.g. '3.6 mK'",
                    },
                    "max_depth": {
                        "type": "string",
                        "description": "Deepest lattice of the scan as a temperature, e.g. '25 mK'",
                    },
                    "points": {
                        "type": "integer",
                        "description": "Number of depths from 0 to max_depth. Default: 6",
                    },
                    "detuning": {
                        "type": "string",
                        "description": "Lattice detuning with unit; positive is blue. Default: '0.76 THz'",
                    },
                },
                "required": [
                    "n_ions",
                    "axial_frequency",
                    "radial_frequency",
                    "initial_temperature",
                    "max_depth",
                ],
            },
        }

    def __call__(
        self,
        n_ions,
        axial_frequency,
        radial_frequency,
        initial_temperature,
        max_depth,
        points=6,
        detuning="0.76 THz",
        **kwargs,
    ):
        if len(kwargs) > 0:
            return f"Error: Unexpected parameter(s): {','.join([x for x in kwargs])}"

        try:
            points = int(points)
            if not 1 <= points <= 50:
                return "Error: points must be between 1 and 50"
            trap = TrapConfig.from_frequencies(
                parse_quantity(axial_frequency, "frequency", "axial_frequency"),
                parse_quantity(radial_frequency, "frequency", "radial_frequency"),
            )
            species = IonSpecies.calcium40()
            max_depth = BOLTZMANN * parse_quantity(max_depth, "temperature", "max_depth")
            lattice = LatticeConfig.from_wavelength(
                max_depth,
                species.lattice_transition_wavelength,
                2 * math.pi * parse_quantity(detuning, "frequency", "detuning"),
            )
            crystal = equilibrium(int(n_ions), trap, species=species)
            scenario = ScatteringScenario(
                crystal=crystal,
                species=species,
                lattice=lattice,
                ramp=RampProfile(),
                T0=parse_quantity(initial_temperature, "temperature", "initial_temperature"),
            )
            table = scan_depth(scenario, BeamProfile(), np.linspace(0.0, max_depth, points))
        except (IonLatticeError, ValueError) as e:
            return f"Error: {str(e)}"

        return table[SCAN_COLUMNS].to_csv(index=False, float_format="%.6g", lineterminator="\n")
