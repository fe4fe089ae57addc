"""Excess micromotion of ions pushed off the rf-free axis, and its error-budget terms."""

import math
from dataclasses import dataclass

import numpy as np

from . import constants
from .crystal import CrystalPotential, default_species
from .errors import DomainError


@dataclass(frozen=True, eq=False)
class MicromotionReport:
    """Per-ion (N x 3) amplitudes A = r0 q / 2 (m), energies (J) and temperatures (K)."""

    amplitude: np.ndarray
    kinetic_energy: np.ndarray
    equivalent_temperature: np.ndarray
    effective_q_axial: float
    variance_broadening_factor: np.ndarray
    q_parameters: tuple

    @property
    def radial_temperature(self):
        return self.equivalent_temperature[:, 0] + self.equivalent_temperature[:, 1]

    @property
    def axial_amplitude(self):
        return self.amplitude[:, 2]

    @property
    def radial_amplitude(self):
        return np.hypot(self.amplitude[:, 0], self.amplitude[:, 1])

    def to_dict(self):
        return {
            "amplitude_nm": (self.amplitude * 1e9).tolist(),
            "kinetic_energy_J": self.kinetic_energy.tolist(),
            "equivalent_temperature_mK": (self.equivalent_temperature * 1e3).tolist(),
            "radial_temperature_mK": (self.radial_temperature * 1e3).tolist(),
            "effective_q_axial": self.effective_q_axial,
            "variance_broadening_factor": self.variance_broadening_factor.tolist(),
            "q_parameters": list(self.q_parameters),
        }


def q_from_secular_frequency(omega_secular, omega_rf):
    """Lowest-order pseudo-potential q = 2 sqrt(2) w_sec / W_rf (a = 0)."""
    if omega_secular < 0 or not omega_rf > 0:
        raise DomainError("need omega_secular >= 0 and omega_rf > 0")
    if omega_secular >= 0.5 * omega_rf:
        raise DomainError(
            f"secular frequency {omega_secular:.4g} rad/s is not below half the drive "
            f"{omega_rf:.4g} rad/s; the trap is outside the stability region"
        )
    return 2 * math.sqrt(2) * omega_secular / omega_rf


def effective_axial_q(q_radial):
    """q'_z = (q_rad / 4)^2."""
    if q_radial < 0:
        raise DomainError(f"q must be >= 0, got {q_radial}")
    return (q_radial / 4.0) ** 2


def variance_broadening(q):
    """Micromotion broadening 1 + q^2/8 of a secular position variance."""
    if q < 0:
        raise DomainError(f"q must be >= 0, got {q}")
    return 1.0 + q * q / 8.0


def trap_q_parameters(trap):
    """(q_x, q_y, q_z) magnitudes; radial values fall back to the secular frequencies."""
    if trap.q_radial is not None:
        q_x = q_y = trap.q_radial
    else:
        q_x = q_from_secular_frequency(trap.omega_x, trap.omega_rf)
        q_y = q_from_secular_frequency(trap.omega_y, trap.omega_rf)
    return q_x, q_y, trap.q_axial


def _coulomb_axial_response(state, trap, species, q_x, q_y):
    """Axial amplitude (m) driven at W_rf by the radial micromotion of the other ions."""
    n = state.n_ions
    pot = CrystalPotential(n, trap, None, species)
    flat = pot.to_flat(state.positions)
    hess = pot.hessian(flat)
    x, y = flat[:n], flat[n : 2 * n]
    # x and y quiver in antiphase in a linear Paul trap
    drive_x = 0.5 * q_x * x
    drive_y = -0.5 * q_y * y
    force_z = -(hess[2 * n :, :n] @ drive_x + hess[2 * n :, n : 2 * n] @ drive_y)
    response = force_z * (trap.omega_z / trap.omega_rf) ** 2
    return np.abs(response) * pot.ell


def excess_micromotion(state, trap, species=None):
    """Excess-micromotion report of every ion of an equilibrium crystal.

    Radial amplitudes are |u0| q_u / 2. The axial amplitude adds a parasitic
    axial rf field (q_axial) to the Coulomb-mediated drive from off-axis ions.
    """
    species = species or default_species()
    q_x, q_y, q_z = trap_q_parameters(trap)
    pos = state.positions
    amplitude = np.zeros_like(pos)
    amplitude[:, 0] = 0.5 * q_x * np.abs(pos[:, 0])
    amplitude[:, 1] = 0.5 * q_y * np.abs(pos[:, 1])
    amplitude[:, 2] = 0.5 * q_z * np.abs(pos[:, 2])
    if state.n_ions > 1:
        amplitude[:, 2] += _coulomb_axial_response(state, trap, species, q_x, q_y)

    kinetic = 0.25 * species.mass * trap.omega_rf**2 * amplitude**2
    temperature = 2.0 * kinetic / constants.BOLTZMANN
    q_eff = effective_axial_q(0.5 * (q_x + q_y))
    q_axial_used = q_z if q_z > 0 else q_eff
    broadening = np.array(
        [variance_broadening(q_x), variance_broadening(q_y), variance_broadening(q_axial_used)]
    )
    return MicromotionReport(
        amplitude=amplitude,
        kinetic_energy=kinetic,
        equivalent_temperature=temperature,
        effective_q_axial=q_eff,
        variance_broadening_factor=broadening,
        q_parameters=(q_x, q_y, q_z),
    )
