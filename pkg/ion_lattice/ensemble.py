"""Scattering statistics of a whole crystal: per-ion depths, binomial counts,
subsequent-scattering fraction and depth scans."""

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import stats
from tqdm import tqdm

from . import constants
from .errors import DomainError
from .pendulum import (
    bunching,
    delocalized_scattering_probability,
    lattice_frequency,
    scattering_probability,
)

rng = np.random.default_rng()

SCAN_COLUMNS = ["depth_mK", "nu_latt_MHz", "p_per_ion", "subsequent_fraction", "bunching"]


@dataclass(frozen=True)
class BeamProfile:
    """Gaussian cavity mode along the trap axis with waist radius w (m)."""

    waist_radius: float = constants.DEFAULT_WAIST

    def __post_init__(self):
        if not self.waist_radius > 0:
            raise DomainError(f"waist radius must be positive, got {self.waist_radius}")

    def depth_factor(self, r):
        return np.exp(-2.0 * np.asarray(r) ** 2 / self.waist_radius**2)


@dataclass(frozen=True, eq=False)
class ScatteringScenario:
    crystal: object
    species: object
    lattice: object
    ramp: object
    T0: float
    pumping_efficiency_per_ion: object = 1.0

    def __post_init__(self):
        if not self.T0 > 0:
            raise DomainError(f"T0 must be positive, got {self.T0}")
        eff = np.asarray(self.pumping_efficiency_per_ion, dtype=float)
        if np.any(eff < 0) or np.any(eff > 1):
            raise DomainError("pumping efficiencies must be probabilities")
        if eff.ndim == 1 and eff.size != self.crystal.n_ions:
            raise DomainError("one pumping efficiency per ion is required")

    def efficiencies(self):
        return np.broadcast_to(
            np.asarray(self.pumping_efficiency_per_ion, dtype=float), (self.crystal.n_ions,)
        )

    def at_depth(self, depth):
        return ScatteringScenario(
            crystal=self.crystal,
            species=self.species,
            lattice=self.lattice.with_depth(depth),
            ramp=self.ramp,
            T0=self.T0,
            pumping_efficiency_per_ion=self.pumping_efficiency_per_ion,
        )


def per_ion_depths(crystal, lattice, beam):
    """U0 exp(-2 r^2 / w^2) for each ion, r the distance from the beam axis."""
    pos = crystal.positions
    r = np.hypot(pos[:, 0], pos[:, 1])
    return lattice.depth * beam.depth_factor(r)


def _per_ion(scenario, beam, t0, single_ion):
    depths = per_ion_depths(scenario.crystal, scenario.lattice, beam)
    cache = {}
    values = np.zeros(depths.size)
    for i, (depth, eff) in enumerate(zip(depths, scenario.efficiencies())):
        if depth == 0 or eff == 0:
            continue
        if depth not in cache:
            cache[depth] = single_ion(scenario.lattice.with_depth(depth))
        values[i] = eff * cache[depth]
    return values


def scattering_probabilities(scenario, beam, t0=None):
    """Per-ion scattering probabilities (array of N)."""
    t0 = scenario.ramp.t_end if t0 is None else t0
    return _per_ion(
        scenario,
        beam,
        t0,
        lambda lattice: scattering_probability(
            t0, scenario.T0, scenario.ramp, lattice, scenario.species
        ),
    )


def mean_scattering_probability_per_ion(scenario, beam, t0=None):
    """Scattering probability averaged over the ions, each at its own depth."""
    return float(np.mean(scattering_probabilities(scenario, beam, t0)))


def mean_delocalized_probability(scenario, beam, t0=None):
    t0 = scenario.ramp.t_end if t0 is None else t0
    values = _per_ion(
        scenario,
        beam,
        t0,
        lambda lattice: delocalized_scattering_probability(
            t0, scenario.ramp, lattice, scenario.species
        ),
    )
    return float(np.mean(values))


def scatter_count_pmf(N, p):
    """Binomial probabilities of 0..N scattered photons."""
    if not 0 <= p <= 1:
        raise DomainError(f"p must be a probability, got {p}")
    return stats.binom.pmf(np.arange(N + 1), N, p)


def subsequent_fraction(N, p):
    """f = 1 - (1 - (1-p)^N) / (N p): share of photons that are not the first one."""
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    if not 0 <= p <= 1:
        raise DomainError(f"p must be a probability, got {p}")
    if p == 0 or N == 1:
        return 0.0
    if p == 1:
        return 1.0 - 1.0 / N
    any_photon = -math.expm1(N * math.log1p(-p))
    return 1.0 - any_photon / (N * p)


def simulate_subsequent_fraction(N, p, n_sequences, seed=None):
    """Monte Carlo estimate of the subsequent fraction from binomial photon counts."""
    gen = rng if seed is None else np.random.default_rng(seed)
    counts = gen.binomial(N, p, size=n_sequences)
    total = counts.sum()
    if total == 0:
        return 0.0
    return 1.0 - np.count_nonzero(counts) / total


def _mean_bunching(scenario, beam):
    depths = per_ion_depths(scenario.crystal, scenario.lattice, beam)
    values = [0.5 if d == 0 else bunching(scenario.T0, d) for d in depths]
    return float(np.mean(values))


def scan_depth(scenario, beam, depth_grid, t0=None, progress=False):
    """One row per peak lattice depth (J) of the grid.

    Columns: depth_mK, nu_latt_MHz, p_per_ion, subsequent_fraction, bunching and
    the p_delocalized reference (B fixed at 1/2).
    """
    depth_grid = np.asarray(depth_grid, dtype=float)
    if depth_grid.size == 0 or np.any(np.diff(depth_grid) < 0) or np.any(depth_grid < 0):
        raise DomainError("depth grid must be non-empty, ascending and non-negative")
    n_ions = scenario.crystal.n_ions
    k = scenario.lattice.wavevector_k
    rows = []
    for depth in tqdm(depth_grid, disable=not progress, desc="depth scan"):
        t_latt = depth / constants.BOLTZMANN
        row = {
            "depth_mK": t_latt * 1e3,
            "nu_latt_MHz": lattice_frequency(t_latt, scenario.species, k) * 1e-6,
        }
        if depth == 0:
            row.update(p_per_ion=0.0, subsequent_fraction=0.0, bunching=0.5, p_delocalized=0.0)
        else:
            at_depth = scenario.at_depth(depth)
            p = mean_scattering_probability_per_ion(at_depth, beam, t0)
            row.update(
                p_per_ion=p,
                subsequent_fraction=subsequent_fraction(n_ions, p),
                bunching=_mean_bunching(at_depth, beam),
                p_delocalized=mean_delocalized_probability(at_depth, beam, t0),
            )
        rows.append(row)
    return pd.DataFrame(rows, columns=SCAN_COLUMNS + ["p_delocalized"])


def write_scan_csv(table, path):
    table[SCAN_COLUMNS].to_csv(path, index=False, float_format="%.9g", lineterminator="\n")
