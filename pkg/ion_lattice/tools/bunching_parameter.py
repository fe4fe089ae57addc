from ..errors import IonLatticeError
from ..constants import BOLTZMANN
from ..pendulum import action_cdf, bunching
from ..run_config import parse_quantity


class ToolBunchingParameter:
    def __init__(self):
        self.name = "bunching_parameter"

        self.tool_description = {
            "name": self.name,
            "description": f"""Computes the bunching parameter B = <sin^2(kz)> of thermal ions adiabatically loaded into an optical lattice.
The ions start as a one-dimensional thermal gas at temperature T0 and the lattice is raised slowly to the depth U0; B = 1/2 means no localization and B -> 0 means perfect pinning at the lattice nodes.

Use {self.name} in these <use_cases></use_cases>:
<use_cases>
<use_case>Estimating how strongly ions are localized by a lattice</use_case>
<use_case>Comparing bunching at different initial temperatures or depths</use_case>
</use_cases>

Returns B and the fraction of ions trapped below the separatrix.""",
            "input_schema": {
                "type": "object",
                "properties": {
                    "initial_temperature": {
                        "type": "string",
                        "description": "Temperature T0 before the lattice ramp, with unit, e.g. '3.6 mK'",
                    },
                    "lattice_depth": {
                        "type": "string",
                        "description": "Final lattice depth as a temperature with unit, e.g. '25 mK'",
                    },
                },
                "required": ["initial_temperature", "lattice_depth"],
            },
        }

    def __call__(self, initial_temperature, lattice_depth, **kwargs):
        if len(kwargs) > 0:
            return f"Error: Unexpected parameter(s): {','.join([x for x in kwargs])}"

        try:
            T0 = parse_quantity(initial_temperature, "temperature", "initial_temperature")
            U0 = BOLTZMANN * parse_quantity(lattice_depth, "temperature", "lattice_depth")
            if U0 == 0:
                return "B = 0.5; trapped fraction = 0 (no lattice)"
            B = bunching(T0, U0)
            trapped = float(action_cdf(U0, T0, U0))
        except IonLatticeError as e:
            return f"Error: {str(e)}"

        return f"B = {B:.6g}; trapped fraction = {trapped:.6g}"
