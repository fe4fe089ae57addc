"""CODATA constants (via scipy.constants) and Ca-40 literature defaults, SI units."""

import numpy as np
from scipy import constants as sc

BOLTZMANN = sc.k
HBAR = sc.hbar
ELEMENTARY_CHARGE = sc.e
EPSILON_0 = sc.epsilon_0
ATOMIC_MASS = sc.atomic_mass
SPEED_OF_LIGHT = sc.c

# e^2 / (4 pi eps0), J m
COULOMB_CONSTANT = ELEMENTARY_CHARGE**2 / (4 * np.pi * EPSILON_0)

CA40_MASS = 39.962591 * ATOMIC_MASS
CA40_P12_LIFETIME = 7.1e-9
CA40_BRANCHING_S12 = 0.935
CA40_BRANCHING_D32 = 0.065
CA40_LATTICE_WAVELENGTH = 866e-9
CA40_DETECTION_WAVELENGTH = 397e-9
CA40_FINE_STRUCTURE = 2 * np.pi * 6.7e12

# experiment defaults
DEFAULT_WAIST = 37e-6
DEFAULT_ASYMMETRY = 0.03
DEFAULT_RF = 2 * np.pi * 3.98e6
DEFAULT_DETUNING = 2 * np.pi * 0.76e12
DEFAULT_SIGMA_RES_AXIAL = 2.23e-6
DEFAULT_SIGMA_RES_RADIAL = 2.09e-6
DEFAULT_PIXEL_PITCH = 0.92e-6
