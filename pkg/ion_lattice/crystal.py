"""Equilibrium structures and normal modes of an ion Coulomb crystal.

Internally lengths are in units of l = (e^2 / (4 pi eps0 M wz^2))^(1/3) and
energies in M wz^2 l^2, so the trap term is (ax x^2 + ay y^2 + z^2)/2 with
a_u = (w_u / w_z)^2, Coulomb pairs are 1/r and the lattice adds
u0 sin^2(kappa z). Coordinate vectors are block-stacked: x of every ion, then
y, then z, which is also the row order of the mode coordinates b_l^p.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import linalg, optimize
from scipy.optimize import linear_sum_assignment
from tqdm import tqdm

from . import constants
from .errors import (
    DivergenceError,
    DomainError,
    SaddleWarning,
    SingularConfigurationError,
    SolverError,
    TrackingWarning,
    UnstableConfigurationError,
)
from .pendulum import IonSpecies, LatticeConfig, lattice_frequency

_DEFAULT_SPECIES = None
_SADDLE_TOL = 1e-8
_TIE_TOL = 1e-3


def default_species():
    global _DEFAULT_SPECIES
    if _DEFAULT_SPECIES is None:
        _DEFAULT_SPECIES = IonSpecies.calcium40()
    return _DEFAULT_SPECIES


@dataclass(frozen=True)
class TrapConfig:
    """Pseudo-potential secular frequencies and rf drive, all in rad/s.

    q parameters left as None are derived from the secular frequencies when
    needed (see micromotion.trap_q_parameters).
    """

    omega_z: float
    omega_x: float
    omega_y: float
    omega_rf: float = constants.DEFAULT_RF
    q_radial: float = None
    q_axial: float = 0.0

    def __post_init__(self):
        for name in ("omega_z", "omega_x", "omega_y", "omega_rf"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("q_radial", "q_axial"):
            q = getattr(self, name)
            if q is not None and not 0 <= q <= 0.9:
                raise DomainError(f"{name}={q} outside the stability sanity range [0, 0.9]")

    @classmethod
    def from_frequencies(
        cls, axial_hz, radial_hz, rf_hz=3.98e6, asymmetry=constants.DEFAULT_ASYMMETRY, **kwargs
    ):
        """Builds a trap from frequencies in Hz; x is made stiffer than y by `asymmetry`."""
        omega_r = 2 * math.pi * radial_hz
        return cls(
            omega_z=2 * math.pi * axial_hz,
            omega_x=omega_r * (1 + 0.5 * asymmetry),
            omega_y=omega_r * (1 - 0.5 * asymmetry),
            omega_rf=2 * math.pi * rf_hz,
            **kwargs,
        )

    @property
    def radial_ratios(self):
        return (self.omega_x / self.omega_z) ** 2, (self.omega_y / self.omega_z) ** 2

    @property
    def weak_radial_axis(self):
        """0 for x, 1 for y: the radial axis a planar crystal spreads along."""
        return 1 if self.omega_y <= self.omega_x else 0

    @property
    def stiff_radial_axis(self):
        return 1 - self.weak_radial_axis


@dataclass(frozen=True, eq=False)
class CrystalState:
    positions: np.ndarray
    potential_value: float
    lattice_depth: float
    length_scale: float
    gradient_norm: float = 0.0
    is_saddle: bool = False

    @property
    def n_ions(self):
        return self.positions.shape[0]

    @property
    def scaled_positions(self):
        return self.positions / self.length_scale


@dataclass(frozen=True, eq=False)
class ModeDecomposition:
    eigenvalues: np.ndarray
    frequencies: np.ndarray
    coordinates: np.ndarray
    omega_z: float

    @property
    def n_ions(self):
        return self.coordinates.shape[0] // 3

    @property
    def frequencies_hz(self):
        return self.frequencies / (2 * math.pi)


@dataclass(frozen=True, eq=False)
class GammaTable:
    gamma: np.ndarray
    gamma_radial_projected: np.ndarray


@dataclass(eq=False)
class ContinuationResult:
    nu_latt: np.ndarray
    depth_grid: np.ndarray
    frequencies: np.ndarray
    coordinates: np.ndarray
    equilibrium_trajectory: np.ndarray
    plane_weight: np.ndarray
    axial_weight: np.ndarray
    flags: list = field(default_factory=list)

    @property
    def n_branches(self):
        return self.frequencies.shape[1]


def length_scale(trap, species):
    """l = (e^2 / (4 pi eps0 M wz^2))^(1/3), in m."""
    return (constants.COULOMB_CONSTANT / (species.mass * trap.omega_z**2)) ** (1.0 / 3.0)


class CrystalPotential:
    """Dimensionless potential with analytic gradient and Hessian."""

    def __init__(self, n_ions, trap, lattice=None, species=None):
        self.n_ions = n_ions
        self.species = species or default_species()
        self.trap = trap
        self.ell = length_scale(trap, self.species)
        self.alpha_x, self.alpha_y = trap.radial_ratios
        self.energy_unit = self.species.mass * trap.omega_z**2 * self.ell**2
        if lattice is None or lattice.depth == 0:
            self.u0 = 0.0
            self.kappa = 0.0
        else:
            self.u0 = lattice.signed_depth / self.energy_unit
            self.kappa = lattice.wavevector_k * self.ell
        self._iu = np.triu_indices(n_ions, 1)

    def _split(self, flat):
        return flat.reshape(3, self.n_ions)

    def _separations(self, flat):
        x, y, z = self._split(flat)
        d = np.stack(
            [x[:, None] - x[None, :], y[:, None] - y[None, :], z[:, None] - z[None, :]]
        )
        r = np.sqrt(np.sum(d**2, axis=0))
        return d, r

    def energy(self, flat):
        x, y, z = self._split(flat)
        _, r = self._separations(flat)
        with np.errstate(divide="ignore"):
            coulomb = np.sum(1.0 / r[self._iu])
        trap = 0.5 * np.sum(self.alpha_x * x**2 + self.alpha_y * y**2 + z**2)
        lattice = self.u0 * np.sum(np.sin(self.kappa * z) ** 2)
        return trap + coulomb + lattice

    def gradient(self, flat):
        x, y, z = self._split(flat)
        d, r = self._separations(flat)
        with np.errstate(divide="ignore"):
            inv_r3 = np.where(r > 0, r**-3, 0.0)
        push = np.sum(d * inv_r3, axis=2)
        gx = self.alpha_x * x - push[0]
        gy = self.alpha_y * y - push[1]
        gz = z - push[2] + self.u0 * self.kappa * np.sin(2 * self.kappa * z)
        return np.concatenate([gx, gy, gz])

    def hessian(self, flat):
        n = self.n_ions
        z = self._split(flat)[2]
        d, r = self._separations(flat)
        with np.errstate(divide="ignore"):
            inv_r5 = np.where(r > 0, r**-5, 0.0)
        hess = np.zeros((3 * n, 3 * n))
        for a in range(3):
            for b in range(3):
                block = ((a == b) * r**2 - 3 * d[a] * d[b]) * inv_r5
                block -= np.diag(np.sum(block, axis=1))
                hess[a * n : (a + 1) * n, b * n : (b + 1) * n] = block
        hess += np.diag(np.repeat([self.alpha_x, self.alpha_y, 1.0], n))
        zz = np.arange(2 * n, 3 * n)
        hess[zz, zz] += 2 * self.u0 * self.kappa**2 * np.cos(2 * self.kappa * z)
        return hess

    def to_flat(self, positions):
        return (np.asarray(positions, dtype=float) / self.ell).T.reshape(-1)

    def to_positions(self, flat):
        return self._split(flat).T * self.ell


def total_potential(positions, trap, lattice=None, species=None):
    """Trap + Coulomb + lattice energy of ions at `positions` (N x 3, m), in J."""
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    pot = CrystalPotential(positions.shape[0], trap, lattice, species)
    flat = pot.to_flat(positions)
    _, r = pot._separations(flat)
    if np.any(r[pot._iu] == 0):
        raise SingularConfigurationError("two ions occupy the same position")
    return pot.energy(flat) * pot.energy_unit


def _chain_guess(n_ions):
    if n_ions == 1:
        return np.zeros(3)
    half = 0.6 * (n_ions - 1) ** 0.7
    z = np.linspace(-half, half, n_ions)
    return np.concatenate([np.zeros(n_ions), np.zeros(n_ions), z])


def _minimize(pot, x0, tol, callback=None, max_newton=20):
    res = optimize.minimize(
        pot.energy,
        x0,
        jac=pot.gradient,
        method="BFGS",
        callback=callback,
        options={"gtol": tol, "maxiter": 50000},
    )
    x = res.x
    grad = pot.gradient(x)
    gnorm = np.max(np.abs(grad))
    # Newton polish once BFGS stalls on round-off near the stationary point
    for _ in range(max_newton):
        if gnorm <= tol:
            break
        evals, evecs = linalg.eigh(pot.hessian(x))
        if np.min(np.abs(evals)) < 1e-12:
            break
        step = evecs @ ((evecs.T @ grad) / evals)
        x_new = x - step
        if pot.energy(x_new) > pot.energy(x) + 1e-12 * max(1.0, abs(pot.energy(x))):
            break
        x = x_new
        grad = pot.gradient(x)
        gnorm = np.max(np.abs(grad))
        if callback is not None:
            callback(x)
    if gnorm > tol:
        # stiff lattice wells: retry with the exact Hessian
        res = optimize.minimize(
            pot.energy,
            x,
            jac=pot.gradient,
            hess=pot.hessian,
            method="trust-exact",
            callback=callback,
            options={"gtol": tol, "maxiter": 2000},
        )
        if pot.energy(res.x) <= pot.energy(x) + 1e-12 * max(1.0, abs(pot.energy(x))):
            x = res.x
            gnorm = np.max(np.abs(pot.gradient(x)))
    if gnorm > tol:
        raise SolverError(
            f"equilibrium search stopped at gradient norm {gnorm:.3g} > {tol:.1g}: {res.message}",
            last_iterate=pot.to_positions(x),
            gradient_norm=gnorm,
        )
    return x, gnorm


def _negative_curvature(pot, flat):
    evals, evecs = linalg.eigh(pot.hessian(flat))
    if evals[0] >= -_SADDLE_TOL:
        return None
    return evecs[:, 0]


def _step_off(pot, flat, direction):
    """Moves off a maximum or saddle along a negative-curvature direction."""
    direction = direction / np.max(np.abs(direction))
    reach = math.pi / (4 * pot.kappa) if pot.kappa > 0 else 0.1
    e0 = pot.energy(flat)
    for scale in reach * 0.5 ** np.arange(10):
        for sign in (1.0, -1.0):
            trial = flat + sign * scale * direction
            if pot.energy(trial) < e0:
                return trial
    return flat + reach * direction


def _descend(pot, x0, tol, max_escapes=8):
    """Local minimum reached from x0, stepping off stationary points that are not minima."""
    flat = np.asarray(x0, dtype=float)
    for _ in range(max_escapes):
        try:
            flat, gnorm = _minimize(pot, flat, tol)
        except SolverError as e:
            flat = pot.to_flat(e.last_iterate)
            direction = _negative_curvature(pot, flat)
            if direction is None:
                raise
            flat = _step_off(pot, flat, direction)
            continue
        direction = _negative_curvature(pot, flat)
        if direction is None:
            return flat, gnorm
        flat = _step_off(pot, flat, direction)
    return _minimize(pot, flat, tol)


def _make_state(pot, flat, gnorm, lattice):
    evals = linalg.eigh(pot.hessian(flat), eigvals_only=True)
    is_saddle = bool(evals[0] < -_SADDLE_TOL)
    if is_saddle:
        warnings.warn(
            f"equilibrium is a saddle point (lowest Hessian eigenvalue {evals[0]:.3g})",
            SaddleWarning,
            stacklevel=3,
        )
    return CrystalState(
        positions=pot.to_positions(flat),
        potential_value=pot.energy(flat) * pot.energy_unit,
        lattice_depth=0.0 if lattice is None else lattice.signed_depth,
        length_scale=pot.ell,
        gradient_norm=gnorm,
        is_saddle=is_saddle,
    )


def _multistart(pot, seed, n_starts, tol):
    gen = np.random.default_rng(seed)
    base = _chain_guess(pot.n_ions)
    starts = [base + 1e-3 * gen.normal(size=base.shape)]
    for _ in range(max(n_starts - 1, 0)):
        starts.append(base + 0.5 * gen.normal(size=base.shape))
    best = None
    last_error = None
    for x0 in starts:
        try:
            x, gnorm = _minimize(pot, x0, tol)
        except SolverError as e:
            last_error = e
            continue
        energy = pot.energy(x)
        if best is None or energy < best[0] - 1e-12:
            best = (energy, x, gnorm)
    if best is None:
        raise last_error
    return best[1], best[2]


def depth_from_frequency(nu_latt, species, k):
    """Lattice depth (J) whose vibrational frequency is nu_latt (Hz)."""
    return 0.5 * species.mass * (2 * math.pi * nu_latt / k) ** 2


def equilibrium(
    N,
    trap,
    lattice=None,
    initial_guess=None,
    species=None,
    seed=0,
    n_starts=8,
    tol=1e-10,
    callback=None,
):
    """Equilibrium positions of N ions.

    Arguments:
        N: number of ions
        trap: TrapConfig
        lattice: LatticeConfig or None
        initial_guess: N x 3 positions in m. When absent, the lattice-free
            crystal is found by seeded random multistart and, if a lattice is
            given, the depth is then raised step by step with warm starts.
        seed, n_starts: multistart controls
        tol: gradient max-norm in dimensionless units
        callback: called with the flat dimensionless iterate after each step
    """
    if N < 1:
        raise DomainError(f"need at least one ion, got {N}")
    species = species or default_species()
    pot = CrystalPotential(N, trap, lattice, species)

    if initial_guess is not None:
        guess = np.asarray(initial_guess, dtype=float)
        if guess.shape != (N, 3):
            raise DomainError(f"initial guess must have shape ({N}, 3), got {guess.shape}")
        flat, gnorm = _minimize(pot, pot.to_flat(guess), tol, callback)
        return _make_state(pot, flat, gnorm, lattice)

    free = CrystalPotential(N, trap, None, species)
    if N == 1:
        flat, gnorm = np.zeros(3), 0.0
    elif callback is None:
        flat, gnorm = _multistart(free, seed, n_starts, tol)
    else:
        flat, gnorm = _minimize(free, _chain_guess(N), tol, callback)
    if lattice is None or lattice.depth == 0:
        return _make_state(free, flat, gnorm, None)

    nu_max = lattice_frequency(lattice.lattice_temperature, species, lattice.wavevector_k)
    for nu in np.geomspace(nu_max * 1e-3, nu_max, 60):
        step_lattice = lattice.with_depth(depth_from_frequency(nu, species, lattice.wavevector_k))
        step_pot = CrystalPotential(N, trap, step_lattice, species)
        flat, gnorm = _descend(step_pot, flat, tol)
    return _make_state(pot, flat, gnorm, lattice)


def normal_modes(state, trap, lattice=None, species=None):
    """Eigen-decomposition of the Hessian normalized by M wz^2."""
    pot = CrystalPotential(state.n_ions, trap, lattice, species)
    evals, evecs = linalg.eigh(pot.hessian(pot.to_flat(state.positions)))
    if evals[0] < -_SADDLE_TOL:
        raise UnstableConfigurationError(
            f"Hessian has a negative eigenvalue {evals[0]:.3g}", eigenvalues=evals
        )
    freqs = trap.omega_z * np.sqrt(np.clip(evals, 0.0, None))
    return ModeDecomposition(
        eigenvalues=evals, frequencies=freqs, coordinates=evecs, omega_z=trap.omega_z
    )


def mode_weights(modes, trap):
    """Per-mode (plane_weight, axial_weight).

    The crystal plane is spanned by z and the weak radial axis.
    """
    n = modes.n_ions
    b2 = modes.coordinates**2
    weak = trap.weak_radial_axis
    axial = np.sum(b2[2 * n : 3 * n], axis=0)
    plane = axial + np.sum(b2[weak * n : (weak + 1) * n], axis=0)
    return plane, axial


def gamma_parameters(modes):
    """gamma^2_{m,u} = sum_p (b_{u,m}^p)^2 / lambda_p, plus the 45 degree radial projection."""
    n = modes.n_ions
    evals = modes.eigenvalues
    soft = np.flatnonzero(evals <= 1e-12)
    if soft.size:
        raise DivergenceError(
            f"mode {int(soft[0])} has eigenvalue {evals[soft[0]]:.3g}; gamma diverges"
        )
    b = modes.coordinates
    gamma2 = (b**2) @ (1.0 / evals)
    gamma = np.sqrt(gamma2.reshape(3, n).T)
    radial2 = ((b[:n] + b[n : 2 * n]) ** 2) @ (1.0 / evals) / 2.0
    return GammaTable(gamma=gamma, gamma_radial_projected=np.sqrt(radial2))


def spot_variance_model(T, gamma, trap, species, sigma_res):
    """sigma^2 = kB T gamma^2 / (M wz^2) + sigma_res^2, in m^2."""
    if T < 0:
        raise DomainError(f"temperature must be >= 0, got {T}")
    thermal = constants.BOLTZMANN * T / (species.mass * trap.omega_z**2)
    return thermal * np.asarray(gamma) ** 2 + sigma_res**2


def classify_structure(state, tol=1e-3):
    """"linear", "planar" or "3d" from the principal extents (in units of l)."""
    pos = state.scaled_positions
    if state.n_ions == 1:
        return "linear"
    centered = pos - pos.mean(axis=0)
    extents = linalg.svdvals(centered) / math.sqrt(state.n_ions)
    rank = int(np.sum(extents > tol))
    return {0: "linear", 1: "linear", 2: "planar"}.get(rank, "3d")


def out_of_plane_count(state, trap, tol=0.05):
    """Number of ions displaced along the stiff radial axis by more than tol * l."""
    axis = trap.stiff_radial_axis
    return int(np.sum(np.abs(state.scaled_positions[:, axis]) > tol))


def critical_radial_ratio(N, species=None, bracket=(0.5, 100.0)):
    """omega_r / omega_z below which the linear chain of N ions buckles into a zigzag."""
    if N < 2:
        raise DomainError("a single ion has no structural transition")
    species = species or default_species()
    stiff = TrapConfig(omega_z=1.0, omega_x=20.0, omega_y=20.0, omega_rf=1e3)
    pot = CrystalPotential(N, stiff, None, species)
    flat, _ = _minimize(pot, _chain_guess(N), 1e-12)
    coulomb = pot.hessian(flat) - np.diag(np.repeat([pot.alpha_x, pot.alpha_y, 1.0], N))
    radial = coulomb[:N, :N]

    def lowest(alpha):
        return linalg.eigh(radial + alpha * np.eye(N), eigvals_only=True)[0]

    alpha_c = optimize.brentq(lowest, bracket[0], bracket[1], xtol=1e-14)
    return math.sqrt(alpha_c)


def _aligned(prev_vecs, vecs):
    overlap = np.abs(prev_vecs.T @ vecs)
    rows, cols = linear_sum_assignment(-overlap)
    ordered = vecs[:, cols]
    signs = np.sign(np.sum(prev_vecs * ordered, axis=0))
    signs[signs == 0] = 1.0
    return ordered * signs, cols, overlap


def _ties(overlap, assigned_cols):
    ties = []
    for branch, row in enumerate(overlap):
        top = np.sort(row)[::-1]
        if top.size > 1 and top[0] - top[1] < _TIE_TOL and top[0] > 0:
            ties.append((branch, np.argsort(row)[::-1][:2].tolist(), top[:2].tolist()))
    return ties


class _Tracker:
    def __init__(self, N, trap, lattice_max, species, threshold, max_refine, tol):
        self.N = N
        self.trap = trap
        self.lattice_max = lattice_max
        self.species = species
        self.threshold = threshold
        self.max_refine = max_refine
        self.tol = tol
        self.flags = []

    def lattice_at(self, nu):
        depth = depth_from_frequency(nu, self.species, self.lattice_max.wavevector_k)
        return self.lattice_max.with_depth(depth)

    def solve(self, flat, nu):
        lattice = self.lattice_at(nu) if nu > 0 else None
        pot = CrystalPotential(self.N, self.trap, lattice, self.species)
        flat, gnorm = _descend(pot, flat, self.tol)
        evals, evecs = linalg.eigh(pot.hessian(flat))
        return flat, evals, evecs, pot

    def advance(self, flat, vecs, nu_a, nu_b, level=0):
        new_flat, evals, evecs, pot = self.solve(flat, nu_b)
        ordered, cols, overlap = _aligned(vecs, evecs)
        assigned = overlap[np.arange(len(cols)), cols]
        if np.min(assigned) < self.threshold and level < self.max_refine:
            nu_m = 0.5 * (nu_a + nu_b)
            mid_flat, mid_vecs, _, _ = self.advance(flat, vecs, nu_a, nu_m, level + 1)
            return self.advance(mid_flat, mid_vecs, nu_m, nu_b, level + 1)
        if level >= self.max_refine or np.min(assigned) < self.threshold:
            for branch, candidates, values in _ties(overlap, cols):
                self.flags.append(
                    {
                        "nu_latt_MHz": nu_b * 1e-6,
                        "branch_id": branch + 1,
                        "candidate_modes": candidates,
                        "overlaps": values,
                    }
                )
                warnings.warn(
                    f"ambiguous mode tracking for branch {branch + 1} at "
                    f"{nu_b * 1e-6:.4g} MHz (overlaps {values})",
                    TrackingWarning,
                    stacklevel=2,
                )
        return new_flat, ordered, evals[cols], pot


def frequency_grid(nu_max, steps, nu_min=None):
    """0 followed by a geometric grid from nu_min to nu_max (Hz), `steps` points in all."""
    if steps < 2:
        raise DomainError(f"need at least 2 grid points, got {steps}")
    nu_min = nu_max * 1e-3 if nu_min is None else nu_min
    return np.concatenate([[0.0], np.geomspace(nu_min, nu_max, steps - 1)])


def continuation(
    N,
    trap,
    lattice_max,
    steps=200,
    species=None,
    nu_grid=None,
    seed=0,
    n_starts=8,
    threshold=0.5,
    max_refine=6,
    tol=1e-10,
    progress=False,
):
    """Follows equilibrium and normal modes while the lattice is deepened.

    Each grid point re-converges the equilibrium from the previous one and
    stitches the 3N branches by maximal eigenvector overlap. An overlap below
    `threshold` triggers step halving (at most `max_refine` times); branches
    whose two best overlaps still tie within 1e-3 are recorded in `flags`.

    Arguments:
        N: number of ions
        trap: TrapConfig
        lattice_max: LatticeConfig at the deepest point (sets k and the detuning sign)
        steps: grid size when nu_grid is not given
        nu_grid: ascending lattice frequencies in Hz, overrides steps
    """
    species = species or default_species()
    if nu_grid is None:
        nu_max = lattice_frequency(lattice_max.lattice_temperature, species, lattice_max.wavevector_k)
        nu_grid = frequency_grid(nu_max, steps)
    nu_grid = np.asarray(nu_grid, dtype=float)
    if nu_grid.size < 2 or np.any(np.diff(nu_grid) <= 0) or nu_grid[0] < 0:
        raise DomainError("the frequency grid must be ascending, non-negative, >= 2 points")

    tracker = _Tracker(N, trap, lattice_max, species, threshold, max_refine, tol)
    start = equilibrium(N, trap, None, species=species, seed=seed, n_starts=n_starts, tol=tol)
    pot0 = CrystalPotential(N, trap, None, species)
    flat = pot0.to_flat(start.positions)
    if nu_grid[0] > 0:
        flat, evals, vecs, pot = tracker.solve(flat, nu_grid[0])
    else:
        evals, vecs = linalg.eigh(pot0.hessian(flat))
        pot = pot0

    n_steps = nu_grid.size
    freqs = np.zeros((n_steps, 3 * N))
    coords = np.zeros((n_steps, 3 * N, 3 * N))
    trajectory = np.zeros((n_steps, N, 3))
    plane = np.zeros((n_steps, 3 * N))
    axial = np.zeros((n_steps, 3 * N))

    def record(i, evals, vecs, pot, flat):
        modes = ModeDecomposition(
            evals, trap.omega_z * np.sqrt(np.clip(evals, 0.0, None)), vecs, trap.omega_z
        )
        freqs[i] = modes.frequencies_hz
        coords[i] = vecs
        trajectory[i] = pot.to_positions(flat)
        plane[i], axial[i] = mode_weights(modes, trap)

    record(0, evals, vecs, pot, flat)
    for i in tqdm(range(1, n_steps), disable=not progress, desc="continuation"):
        flat, vecs, evals, pot = tracker.advance(flat, vecs, nu_grid[i - 1], nu_grid[i])
        record(i, evals, vecs, pot, flat)

    depths = np.array(
        [depth_from_frequency(nu, species, lattice_max.wavevector_k) for nu in nu_grid]
    )
    return ContinuationResult(
        nu_latt=nu_grid,
        depth_grid=depths,
        frequencies=freqs,
        coordinates=coords,
        equilibrium_trajectory=trajectory,
        plane_weight=plane,
        axial_weight=axial,
        flags=tracker.flags,
    )


def continuation_table(result):
    """Long-format table: nu_latt_MHz, branch_id, freq_kHz, plane_weight, axial_weight."""
    n_steps, n_branches = result.frequencies.shape
    return pd.DataFrame(
        {
            "nu_latt_MHz": np.repeat(result.nu_latt * 1e-6, n_branches),
            "branch_id": np.tile(np.arange(1, n_branches + 1), n_steps),
            "freq_kHz": result.frequencies.reshape(-1) * 1e-3,
            "plane_weight": result.plane_weight.reshape(-1),
            "axial_weight": result.axial_weight.reshape(-1),
        }
    )
