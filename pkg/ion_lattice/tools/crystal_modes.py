import math

import numpy as np

from ..constants import BOLTZMANN
from ..crystal import (
    TrapConfig,
    classify_structure,
    equilibrium,
    mode_weights,
    normal_modes,
    out_of_plane_count,
)
from ..errors import IonLatticeError
from ..pendulum import IonSpecies, LatticeConfig
from ..run_config import parse_quantity


class ToolCrystalModes:
    def __init__(self):
        self.name = "crystal_modes"

        self.tool_description = {
            "name": self.name,
            "description": f"""Finds the equilibrium structure of N laser-cooled ions in a linear Paul trap, optionally inside an optical lattice, and lists its 3N normal-mode frequencies.
Frequencies are secular trap frequencies in Hz with a unit, e.g. "70 kHz". The two radial frequencies are split by the asymmetry so that the crystal plane, if any, is well defined.

Use {self.name} in these <use_cases></use_cases>:
<use_cases>
<use_case>Checking whether a crystal is a string, a zigzag or three-dimensional</use_case>
<use_case>Finding the highest and lowest normal-mode frequencies of a crystal</use_case>
<use_case>Seeing how a lattice of given depth shifts the axial modes</use_case>
</use_cases>

Returns the structure, the ion positions in micrometers and the mode frequencies in kHz with their axial weights.""",
            "input_schema": {
                "type": "object",
                "properties": {
                    "n_ions": {
                        "type": "integer",
                        "description": "Number of ions, 1 to 30",
                    },
                    "axial_frequency": {
                        "type": "string",
                        "description": "Axial secular frequency with unit, e.g. '70 kHz'",
                    },
                    "radial_frequency": {
                        "type": "string",
                        "description": "Mean radial secular frequency with unit, e.g. '350 kHz'",
                    },
                    "asymmetry": {
                        "type": "number",
                        "description": "Relative splitting of the radial frequencies. Default: 0.03",
                    },
                    "lattice_depth": {
                        "type": "string",
                        "description": "Lattice depth as a temperature with unit. Default: '0 mK' (no lattice)",
                    },
                    "detuning": {
                        "type": "string",
                        "description": "Lattice detuning with unit; positive is blue. Default: '0.76 THz'",
                    },
                },
                "required": ["n_ions", "axial_frequency", "radial_frequency"],
            },
        }

    def __call__(
        self,
        n_ions,
        axial_frequency,
        radial_frequency,
        asymmetry=0.03,
        lattice_depth="0 mK",
        detuning="0.76 THz",
        **kwargs,
    ):
        if len(kwargs) > 0:
            return f"Error: Unexpected parameter(s): {','.join([x for x in kwargs])}"

        try:
            n_ions = int(n_ions)
            if not 1 <= n_ions <= 30:
                return "Error: n_ions must be between 1 and 30"
            trap = TrapConfig.from_frequencies(
                parse_quantity(axial_frequency, "frequency", "axial_frequency"),
                parse_quantity(radial_frequency, "frequency", "radial_frequency"),
                asymmetry=float(asymmetry),
            )
            species = IonSpecies.calcium40()
            depth = BOLTZMANN * parse_quantity(lattice_depth, "temperature", "lattice_depth")
            lattice = None
            if depth > 0:
                lattice = LatticeConfig.from_wavelength(
                    depth,
                    species.lattice_transition_wavelength,
                    2 * math.pi * parse_quantity(detuning, "frequency", "detuning"),
                )
            state = equilibrium(n_ions, trap, lattice, species=species)
            modes = normal_modes(state, trap, lattice, species)
            _, axial = mode_weights(modes, trap)
        except (IonLatticeError, ValueError) as e:
            return f"Error: {str(e)}"

        lines = [
            f"structure: {classify_structure(state)} "
            f"({out_of_plane_count(state, trap)} ions out of plane)",
            "positions_um (x, y, z):",
        ]
        for p in state.positions * 1e6:
            lines.append(f"  {p[0]:.4f}, {p[1]:.4f}, {p[2]:.4f}")
        lines.append("modes_kHz (axial weight):")
        for f, w in zip(modes.frequencies_hz * 1e-3, axial):
            lines.append(f"  {f:.4f} ({w:.3f})")
        lines.append(f"highest mode period: {1e6 / np.max(modes.frequencies_hz):.4g} us")
        return "\n".join(lines)
