import json

from ..crystal import TrapConfig, classify_structure, equilibrium
from ..errors import IonLatticeError
from ..micromotion import excess_micromotion
from ..run_config import parse_quantity


class ToolMicromotionReport:
    def __init__(self):
        self.name = "micromotion_report"

        self.tool_description = {
            "name": self.name,
            "description": f"""Computes the excess micromotion of every ion of an equilibrium crystal in a linear Paul trap.
Ions pushed off the rf-free axis oscillate at the drive frequency with amplitude r0 q / 2; the tool reports the amplitudes, the kinetic energies and the equivalent temperatures of that driven motion.

Use {self.name} in these <use_cases></use_cases>:
<use_cases>
<use_case>Estimating the micromotion heating of zigzag or three-dimensional crystals</use_case>
<use_case>Checking that a linear string has no excess micromotion</use_case>
</use_cases>

Returns a JSON report with per-ion amplitudes (nm) and temperatures (mK).""",
            "input_schema": {
                "type": "object",
                "properties": {
                    "n_ions": {"type": "integer", "description": "Number of ions"},
                    "axial_frequency": {
                        "type": "string",
                        "description": "Axial secular frequency with unit, e.g. '85 kHz'",
                    },
                    "radial_frequency": {
                        "type": "string",
                        "description": "Mean radial secular frequency with unit, e.g. '170 kHz'",
                    },
                    "rf_frequency": {
                        "type": "string",
                        "description": "Trap drive frequency with unit. Default: '3.98 MHz'",
                    },
                },
                "required": ["n_ions", "axial_frequency", "radial_frequency"],
            },
        }

    def __call__(
        self, n_ions, axial_frequency, radial_frequency, rf_frequency="3.98 MHz", **kwargs
    ):
        if len(kwargs) > 0:
            return f"Error: Unexpected parameter(s): {','.join([x for x in kwargs])}"

        try:
            trap = TrapConfig.from_frequencies(
                parse_quantity(axial_frequency, "frequency", "axial_frequency"),
                parse_quantity(radial_frequency, "frequency", "radial_frequency"),
                rf_hz=parse_quantity(rf_frequency, "frequency", "rf_frequency"),
            )
            state = equilibrium(int(n_ions), trap)
            report = excess_micromotion(state, trap)
        except (IonLatticeError, ValueError) as e:
            return f"Error: {str(e)}"

        ans = {"structure": classify_structure(state)}
        ans.update(report.to_dict())
        return json.dumps(ans, indent=2)
