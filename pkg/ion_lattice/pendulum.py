"""Single-ion adiabatic pendulum model of an ion in a ramped standing wave.

An ion starting as a free thermal particle keeps its action while the lattice
U(z) = U0 sin^2(kz) is ramped up slowly. Everything below is expressed with the
reduced energy x = E/U0, the reduced action s = (nu_latt/U0) S and the
temperature ratio theta = kB T0/U0.
"""

import functools
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate
from scipy.special import erf

from . import constants
from .errors import AdiabaticityWarning, DivergenceError, DomainError
from .specfun import elliptic_ke, integrate_with_endpoint_singularity

rng = np.random.default_rng()

_FOUR_OVER_PI = 4.0 / math.pi
_SERIES_LIMIT = 1e-6
_QUAD_TOL = 1e-11
# kB T0 / U0 above which the lattice is too shallow to bunch the ions
_DELOCALIZED_THETA = 1e4


@dataclass(frozen=True)
class IonSpecies:
    """Mass and optical constants of the trapped ion. Rates in rad/s (1/s)."""

    mass: float
    lattice_transition_wavelength: float = constants.CA40_LATTICE_WAVELENGTH
    detection_wavelength: float = constants.CA40_DETECTION_WAVELENGTH
    gamma_p_total: float = 1.0 / constants.CA40_P12_LIFETIME
    gamma_397: float = constants.CA40_BRANCHING_S12 / constants.CA40_P12_LIFETIME
    branching_leave: float = constants.CA40_BRANCHING_D32
    fine_structure_splitting: float = None
    p32_relative_strength: float = 0.0

    def __post_init__(self):
        if not self.mass > 0:
            raise DomainError(f"mass must be positive, got {self.mass}")
        if not 0 < self.gamma_397 <= self.gamma_p_total:
            raise DomainError("decay rates must satisfy 0 < gamma_397 <= gamma_p_total")
        if not 0 <= self.branching_leave <= 1:
            raise DomainError("branching_leave must be a probability")
        if self.p32_relative_strength < 0:
            raise DomainError("p32_relative_strength must be >= 0")
        if self.p32_relative_strength > 0 and self.fine_structure_splitting is None:
            raise DomainError("the P3/2 channel needs fine_structure_splitting")

    @classmethod
    def calcium40(cls, **overrides):
        """40Ca+ with literature defaults; keyword arguments override fields."""
        values = dict(
            mass=constants.CA40_MASS,
            fine_structure_splitting=constants.CA40_FINE_STRUCTURE,
        )
        values.update(overrides)
        return cls(**values)

    @property
    def resonant_cross_section(self):
        """3 lambda^2 / (2 pi) at the detection wavelength."""
        return 3 * self.detection_wavelength**2 / (2 * math.pi)


@dataclass(frozen=True)
class LatticeConfig:
    """Standing wave U(z) = U0 sin^2(kz).

    The sign of `detuning` selects the geometry: blue (> 0) pins ions at the
    intensity nodes, red (< 0) at the antinodes. `depth_U0` may be given as a
    magnitude or signed; a sign must then agree with the detuning.
    """

    depth_U0: float
    wavevector_k: float
    detuning: float
    antinode_intensity: float = None
    cross_section_397: float = None

    def __post_init__(self):
        if self.wavevector_k <= 0:
            raise DomainError(f"wavevector must be positive, got {self.wavevector_k}")
        if self.detuning == 0:
            raise DomainError("detuning must be nonzero")
        if self.depth_U0 < 0 and self.detuning > 0:
            raise DomainError("a negative depth needs a red (negative) detuning")
        if self.antinode_intensity is not None and self.antinode_intensity < 0:
            raise DomainError("antinode_intensity must be >= 0")

    @classmethod
    def from_wavelength(cls, depth_U0, wavelength, detuning, **kwargs):
        return cls(depth_U0, 2 * math.pi / wavelength, detuning, **kwargs)

    @property
    def is_blue(self):
        return self.detuning > 0

    @property
    def depth(self):
        return abs(self.depth_U0)

    @property
    def signed_depth(self):
        return math.copysign(self.depth, self.detuning)

    @property
    def lattice_temperature(self):
        return self.depth / constants.BOLTZMANN

    def with_depth(self, depth):
        """Same lattice at another depth magnitude; intensity scales along."""
        intensity = self.antinode_intensity
        if intensity is not None:
            intensity = intensity * depth / self.depth if self.depth > 0 else None
        return replace(self, depth_U0=abs(depth), antinode_intensity=intensity)


@dataclass(frozen=True)
class RampProfile:
    """Depth schedule: ramp from 0 to the lattice depth, then hold."""

    ramp_duration: float = 2e-6
    hold_duration: float = 1e-6
    shape: str = "linear"

    def __post_init__(self):
        if self.ramp_duration < 0 or self.hold_duration < 0:
            raise DomainError("ramp and hold durations must be >= 0")
        if self.shape not in ("linear", "cosine"):
            raise DomainError(f"unknown ramp shape {self.shape!r}")

    @property
    def t_end(self):
        return self.ramp_duration + self.hold_duration

    def fraction_at(self, t):
        """U0(t) / U0max in [0, 1]."""
        if t < 0 or t > self.t_end * (1 + 1e-12):
            raise DomainError(f"t={t} outside the schedule [0, {self.t_end}]")
        if self.ramp_duration == 0 or t >= self.ramp_duration:
            return 1.0
        u = t / self.ramp_duration
        if self.shape == "linear":
            return u
        return math.sin(0.5 * math.pi * u) ** 2

    def check_adiabatic(self, nu_final):
        """Warns when the ramp is shorter than ten final lattice periods."""
        if nu_final > 0 and self.ramp_duration < 10.0 / nu_final:
            warnings.warn(
                f"ramp of {self.ramp_duration:.3g} s is shorter than 10 lattice periods "
                f"({10.0 / nu_final:.3g} s); the adiabatic model may not hold",
                AdiabaticityWarning,
                stacklevel=3,
            )
            return False
        return True


def _theta(T0, U0):
    if not T0 > 0:
        raise DomainError(f"T0 must be positive, got {T0}")
    if not U0 > 0:
        raise DomainError(f"U0 must be positive, got {U0}")
    return constants.BOLTZMANN * T0 / U0


# reduced-variable closed forms


def _s_of_x(x):
    if x < _SERIES_LIMIT:
        return x + x * x / 8.0
    if x == 1.0:
        return _FOUR_OVER_PI
    if x < 1.0:
        k, e = elliptic_ke(x)
        return _FOUR_OVER_PI * (e - k * (1.0 - x))
    _, e = elliptic_ke(1.0 / x)
    return _FOUR_OVER_PI * math.sqrt(x) * e


def _s_of_x_array(x):
    x = np.asarray(x, dtype=float)
    below = x <= 1.0
    safe = np.where(x > 0, x, 1.0)
    m = np.where(below, x, 1.0 / safe)
    k, e = elliptic_ke(m)
    with np.errstate(invalid="ignore"):
        inner = np.where(x == 1.0, 1.0, e - k * (1.0 - x))
    return np.where(below, _FOUR_OVER_PI * inner, _FOUR_OVER_PI * np.sqrt(x) * e)


def _tau_of_x(x):
    if x == 1.0:
        raise DivergenceError("the period diverges on the separatrix E = U0")
    if x < 1.0:
        return 2.0 / math.pi * elliptic_ke(x)[0]
    return 2.0 / math.pi * math.sqrt(1.0 / x) * elliptic_ke(1.0 / x)[0]


def _sin2_of_x(x):
    if x < _SERIES_LIMIT:
        return 0.5 * x + x * x / 16.0
    if x <= 1.0:
        k, e = elliptic_ke(x)
        return 1.0 - e / k
    m = 1.0 / x
    if m < _SERIES_LIMIT:
        return 0.5 + m / 16.0
    k, e = elliptic_ke(m)
    return x * (1.0 - e / k)


def _density_x(x, theta):
    s = _s_of_x(x)
    return math.exp(-s * s / (4.0 * theta)) / math.sqrt(math.pi * theta) * _tau_of_x(x)


def _x_max(theta):
    return 2.0 + 60.0 * theta


# public operations


def lattice_frequency(T_latt, species, k):
    """nu_latt = (k / 2 pi) sqrt(2 kB T_latt / M), in Hz."""
    if T_latt < 0:
        raise DomainError(f"lattice temperature must be >= 0, got {T_latt}")
    return k / (2 * math.pi) * math.sqrt(2 * constants.BOLTZMANN * T_latt / species.mass)


def rabi_frequency(depth, detuning):
    """Omega = sqrt(4 |Delta| |U0| / hbar)."""
    return math.sqrt(4.0 * abs(detuning) * abs(depth) / constants.HBAR)


def action_density(s, T0, U0):
    """Half-Gaussian density of the reduced action s, unchanged by the ramp."""
    if s < 0:
        raise DomainError(f"action must be >= 0, got {s}")
    theta = _theta(T0, U0)
    return math.exp(-s * s / (4.0 * theta)) / math.sqrt(math.pi * theta)


def dimensionless_action(E, U0):
    if E < 0 or not U0 > 0:
        raise DomainError("need E >= 0 and U0 > 0")
    return _s_of_x(E / U0)


def normalized_period(E, U0):
    """Period at energy E over the small-oscillation period 1/nu_latt."""
    if E < 0 or not U0 > 0:
        raise DomainError("need E >= 0 and U0 > 0")
    return _tau_of_x(E / U0)


def energy_density(E, T0, U0):
    """P(E) per joule. Diverges (integrably) at the separatrix E = U0."""
    if E < 0:
        raise DomainError(f"energy must be >= 0, got {E}")
    theta = _theta(T0, U0)
    return _density_x(E / U0, theta) / U0


def position_density_given_energy(kz, E, U0):
    """P(kz | E) per radian, normalized over one well kz in [-pi/2, pi/2]."""
    if E < 0 or not U0 > 0:
        raise DomainError("need E >= 0 and U0 > 0")
    if abs(kz) > 0.5 * math.pi:
        raise DomainError(f"kz={kz} outside the well [-pi/2, pi/2]")
    x = E / U0
    sin2 = math.sin(kz) ** 2
    if sin2 >= x:
        raise DomainError(f"kz={kz} is beyond the turning point for E/U0={x}")
    return 1.0 / (math.pi * _tau_of_x(x) * math.sqrt(x - sin2))


def bunching_given_energy(E, U0):
    """<sin^2(kz)> along the trajectory of energy E."""
    if E < 0 or not U0 > 0:
        raise DomainError("need E >= 0 and U0 > 0")
    return _sin2_of_x(E / U0)


@functools.lru_cache(maxsize=4096)
def _bunching_theta(theta):
    return integrate_with_endpoint_singularity(
        lambda x: _density_x(x, theta) * _sin2_of_x(x),
        0.0,
        _x_max(theta),
        singular_points=[1.0],
        tol=_QUAD_TOL,
    )


def bunching(T0, U0):
    """Bunching parameter B = <sin^2(kz)>, 1/2 for delocalized ions."""
    theta = _theta(T0, U0)
    if theta > _DELOCALIZED_THETA:
        return 0.5
    return _bunching_theta(theta)


def energy_normalization(T0, U0):
    """int P(E) dE, which should be one."""
    theta = _theta(T0, U0)
    return integrate_with_endpoint_singularity(
        lambda x: _density_x(x, theta), 0.0, _x_max(theta), [1.0], tol=_QUAD_TOL
    )


def total_position_density(kz, T0, U0):
    """Ensemble density of kz over one well, int P(E) P(kz|E) dE."""
    if abs(kz) > 0.5 * math.pi:
        raise DomainError(f"kz={kz} outside the well [-pi/2, pi/2]")
    theta = _theta(T0, U0)
    sin2 = math.sin(kz) ** 2

    def integrand(x):
        if x == 1.0:
            return 0.0
        return _density_x(x, theta) / (math.pi * _tau_of_x(x) * math.sqrt(x - sin2))

    # P(E)/tau cancels the period, leaving the turning point at x = sin2
    return integrate_with_endpoint_singularity(
        integrand, sin2, max(_x_max(theta), sin2 + 2.0), [sin2, 1.0], tol=_QUAD_TOL
    )


def scattering_rate(kz, rabi, config, species):
    """Steady-state two-level scattering rate at phase kz of the standing wave."""
    if rabi < 0:
        raise DomainError(f"Rabi frequency must be >= 0, got {rabi}")
    drive = 0.5 * (rabi * math.sin(kz)) ** 2
    denom = 0.25 * species.gamma_p_total**2 + drive + config.detuning**2
    return 0.5 * species.gamma_397 * drive / denom


def far_detuned_antinode_rate(depth, config, species):
    """Far-detuned scattering rate at an intensity maximum for lattice depth `depth`."""
    depth = abs(depth)
    if depth == 0:
        return 0.0
    if config.antinode_intensity is not None and config.cross_section_397 is not None:
        intensity = config.antinode_intensity * depth / config.depth
        photon_energy = constants.HBAR * constants.SPEED_OF_LIGHT * config.wavevector_k
        rate = intensity / photon_energy * config.cross_section_397
    else:
        rate = species.gamma_397 * depth / (constants.HBAR * abs(config.detuning))
    if species.p32_relative_strength > 0:
        detuning_p32 = config.detuning - species.fine_structure_splitting
        rate *= 1.0 + species.p32_relative_strength * (config.detuning / detuning_p32) ** 2
    return rate


def position_weight(B, config):
    """Mean intensity seen by the ion in antinode units."""
    return B if config.is_blue else 1.0 - B


def mean_scattering_rate(t, T0, ramp, config, species):
    """Ensemble-averaged scattering rate at time t of the ramp."""
    depth = config.depth * ramp.fraction_at(t)
    if depth == 0:
        return 0.0
    B = bunching(T0, depth)
    return far_detuned_antinode_rate(depth, config, species) * position_weight(B, config)


def delocalized_scattering_rate(t, ramp, config, species):
    """Same rate for ions spread uniformly over the lattice (B = 1/2)."""
    depth = config.depth * ramp.fraction_at(t)
    return 0.5 * far_detuned_antinode_rate(depth, config, species)


def integrated_rate(t0, rate, ramp):
    """int_0^t0 rate(t) dt, splitting at the end of the ramp."""
    if t0 < 0:
        raise DomainError(f"t0 must be >= 0, got {t0}")
    t_ramp = min(t0, ramp.ramp_duration)
    total = 0.0
    if t_ramp > 0:
        total += integrate.quad(rate, 0.0, t_ramp, epsabs=0.0, epsrel=1e-10, limit=200)[0]
    if t0 > ramp.ramp_duration:
        # constant depth during the hold
        total += rate(ramp.ramp_duration) * (t0 - ramp.ramp_duration)
    return total


def scattering_probability(t0, T0, ramp, config, species, occupancy=1.0):
    """p(t0) = P(0) (1 - exp(-int_0^t0 <Gamma_sc> dt)).

    Arguments:
        t0: end of the detection window, within the ramp schedule
        T0: initial temperature, K
        ramp: RampProfile
        config: LatticeConfig at its maximal depth
        species: IonSpecies
        occupancy: initial population of the lattice-coupled state P(0)
    """
    if not 0 <= occupancy <= 1:
        raise DomainError(f"occupancy must be a probability, got {occupancy}")
    if config.depth == 0 or t0 == 0:
        return 0.0
    nu_final = lattice_frequency(config.lattice_temperature, species, config.wavevector_k)
    ramp.check_adiabatic(nu_final)
    total = integrated_rate(
        t0, lambda t: mean_scattering_rate(t, T0, ramp, config, species), ramp
    )
    return occupancy * -math.expm1(-total)


def delocalized_scattering_probability(t0, ramp, config, species, occupancy=1.0):
    """Reference probability for unpinned ions (B fixed at 1/2)."""
    if config.depth == 0 or t0 == 0:
        return 0.0
    total = integrated_rate(
        t0, lambda t: delocalized_scattering_rate(t, ramp, config, species), ramp
    )
    return occupancy * -math.expm1(-total)


def _x_from_s(s):
    """Vectorized inverse of s(x) by bisection."""
    s = np.asarray(s, dtype=float)
    lo = np.zeros_like(s)
    hi = np.full_like(s, max(2.0, float(np.max(s, initial=0.0)) ** 2))
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        above = _s_of_x_array(mid) > s
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    return 0.5 * (lo + hi)


def sample_energies(n, T0, U0, seed=None):
    """Draws n energies (J) from P(E) by sampling the conserved action."""
    theta = _theta(T0, U0)
    gen = rng if seed is None else np.random.default_rng(seed)
    s = np.abs(gen.normal(0.0, math.sqrt(2.0 * theta), size=n))
    return _x_from_s(s) * U0


def remap_energy(E, U0_from, U0_to):
    """Energy after an adiabatic depth change U0_from -> U0_to (same action)."""
    E = np.asarray(E, dtype=float)
    if not (U0_from > 0 and U0_to > 0):
        raise DomainError("depths must be positive")
    s_from = _s_of_x_array(E / U0_from)
    # s = nu_latt S / U0 and nu_latt ~ sqrt(U0)
    s_to = s_from * math.sqrt(U0_from / U0_to)
    return _x_from_s(s_to) * U0_to


def action_cdf(E, T0, U0):
    """Cumulative distribution of the energy, erf(s(E) / sqrt(4 theta))."""
    theta = _theta(T0, U0)
    return erf(_s_of_x_array(np.asarray(E, dtype=float) / U0) / math.sqrt(4.0 * theta))


@dataclass(frozen=True)
class EnergyEnsemble:
    """Thermal ensemble at initial temperature T0 seen at the current depth U0."""

    T0: float
    U0: float

    def __post_init__(self):
        _theta(self.T0, self.U0)

    @property
    def theta(self):
        return _theta(self.T0, self.U0)

    def action_density(self, s):
        return action_density(s, self.T0, self.U0)

    def energy_density(self, E):
        return energy_density(E, self.T0, self.U0)

    def bunching(self):
        return bunching(self.T0, self.U0)

    def at_depth(self, U0):
        return replace(self, U0=U0)
