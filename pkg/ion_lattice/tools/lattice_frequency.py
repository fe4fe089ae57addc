import math

from ..constants import BOLTZMANN
from ..errors import IonLatticeError
from ..pendulum import IonSpecies, lattice_frequency
from ..run_config import parse_quantity


class ToolLatticeFrequency:
    def __init__(self):
        self.name = "lattice_frequency"

        self.tool_description = {
            "name": self.name,
            "description": f"""Computes the small-oscillation (vibrational) frequency of an ion at the bottom of one well of an optical lattice U0 sin^2(kz).
The depth is given as a temperature U0/kB with a unit, for example "25 mK". Use {self.name} instead of estimating the frequency manually.

Use {self.name} in these <use_cases></use_cases>:
<use_cases>
<use_case>Converting a lattice depth into the lattice vibrational frequency</use_case>
<use_case>Checking whether a ramp is slow compared to the lattice period</use_case>
</use_cases>

Returns the frequency in MHz and the lattice period in microseconds.""",
            "input_schema": {
                "type": "object",
                "properties": {
                    "lattice_depth": {
                        "type": "string",
                        "description": "Lattice depth as a temperature with unit, e.g. '25 mK'",
                    },
                    "wavelength": {
                        "type": "string",
                        "description": "Lattice wavelength with unit. Default: '866 nm'",
                    },
                    "mass": {
                        "type": "string",
                        "description": "Ion mass with unit ('u' or 'kg'). Default: '39.962591 u' (40Ca+)",
                    },
                },
                "required": ["lattice_depth"],
            },
        }

    def __call__(self, lattice_depth, wavelength="866 nm", mass="39.962591 u", **kwargs):
        if len(kwargs) > 0:
            return f"Error: Unexpected parameter(s): {','.join([x for x in kwargs])}"

        try:
            T_latt = parse_quantity(lattice_depth, "temperature", "lattice_depth")
            k = 2 * math.pi / parse_quantity(wavelength, "length", "wavelength")
            species = IonSpecies.calcium40(mass=parse_quantity(mass, "mass", "mass"))
            nu = lattice_frequency(T_latt, species, k)
        except IonLatticeError as e:
            return f"Error: {str(e)}"

        period = 1e6 / nu if nu > 0 else float("inf")
        return (
            f"nu_latt = {nu * 1e-6:.6g} MHz (lattice period {period:.6g} us, "
            f"U0 = {T_latt * BOLTZMANN:.6g} J)"
        )
