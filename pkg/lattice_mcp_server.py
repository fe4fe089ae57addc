"""
Local MCP Server for the ion-lattice tools

Launch this server with `python lattice_mcp_server.py`
Use this server by placing this JSON into the MCP Servers textbox:
{
	"mcpServers": {
		"ion_lattice": {
			"transport": "http",
			"url": "http://127.0.0.1:8000/mcp"
		}
	}
}
"""

from typing import Annotated

from fastmcp import FastMCP
from pydantic import Field

from ion_lattice.tools.bunching_parameter import ToolBunchingParameter
from ion_lattice.tools.crystal_modes import ToolCrystalModes
from ion_lattice.tools.lattice_frequency import ToolLatticeFrequency
from ion_lattice.tools.micromotion_report import ToolMicromotionReport
from ion_lattice.tools.scattering_scan import ToolScatteringScan

mcp = FastMCP("Ion lattice")


@mcp.tool()
def lattice_frequency(
    lattice_depth: Annotated[str, "Lattice depth as a temperature with unit, e.g. '25 mK'"],
    wavelength: str = Field(default="866 nm", description="Lattice wavelength with unit"),
) -> str:
    """Vibrational frequency at the bottom of a lattice well"""
    return ToolLatticeFrequency()(lattice_depth, wavelength=wavelength)


@mcp.tool()
def bunching_parameter(
    initial_temperature: Annotated[str, "Temperature before the ramp, e.g. '3.6 mK'"],
    lattice_depth: Annotated[str, "Final lattice depth as a temperature, e.g. '25 mK'"],
) -> str:
    """Bunching parameter <sin^2(kz)> after an adiabatic lattice ramp"""
    return ToolBunchingParameter()(initial_temperature, lattice_depth)


@mcp.tool()
def crystal_modes(
    n_ions: Annotated[int, "Number of ions"],
    axial_frequency: Annotated[str, "Axial secular frequency, e.g. '70 kHz'"],
    radial_frequency: Annotated[str, "Radial secular frequency, e.g. '350 kHz'"],
    lattice_depth: str = Field(default="0 mK", description="Lattice depth as a temperature"),
) -> str:
    """Equilibrium structure and normal-mode frequencies of an ion crystal"""
    return ToolCrystalModes()(
        n_ions, axial_frequency, radial_frequency, lattice_depth=lattice_depth
    )


@mcp.tool()
def scattering_scan(
    n_ions: Annotated[int, "Number of ions"],
    axial_frequency: Annotated[str, "Axial secular frequency, e.g. '70 kHz'"],
    radial_frequency: Annotated[str, "Radial secular frequency, e.g. '350 kHz'"],
    initial_temperature: Annotated[str, "Temperature before the ramp, e.g. '3.6 mK'"],
    max_depth: Annotated[str, "Deepest lattice of the scan, e.g. '25 mK'"],
    points: int = Field(default=6, description="Number of depths in the scan"),
    detuning: str = Field(default="0.76 THz", description="Detuning; positive is blue"),
) -> str:
    """Scattering probability per ion versus lattice depth, as CSV"""
    return ToolScatteringScan()(
        n_ions,
        axial_frequency,
        radial_frequency,
        initial_temperature,
        max_depth,
        points=points,
        detuning=detuning,
    )


@mcp.tool()
def micromotion_report(
    n_ions: Annotated[int, "Number of ions"],
    axial_frequency: Annotated[str, "Axial secular frequency, e.g. '85 kHz'"],
    radial_frequency: Annotated[str, "Radial secular frequency, e.g. '170 kHz'"],
) -> str:
    """Excess micromotion amplitudes and equivalent temperatures, as JSON"""
    return ToolMicromotionReport()(n_ions, axial_frequency, radial_frequency)


if __name__ == "__main__":
    print("Starting...")
    mcp.run(transport="http", host="127.0.0.1", port=8000)
