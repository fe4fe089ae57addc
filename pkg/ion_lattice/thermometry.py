"""Temperature of a crystal from the widths of its fluorescence spots.

Each ion's spot, integrated along the orthogonal direction, is a Gaussian of
variance (kB T / M wz^2) gamma^2 + sigma_res^2. Spots are fitted one by one and
T is then the single free parameter of a weighted linear fit across ions.
"""

import io
import math
import re
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import optimize, stats
from scipy.optimize import linear_sum_assignment

from . import constants
from .crystal import default_species, equilibrium, length_scale, spot_variance_model
from .errors import (
    DegenerateFitError,
    DomainError,
    FitError,
    NegativeThermalVarianceError,
    OverlapWarning,
    SpotsFormatError,
)

AXES = ("axial", "radial")
SPOT_COLUMNS = ["ion_index", "axis", "pixel", "counts"]
Z95 = stats.norm.ppf(0.975)


@dataclass(frozen=True)
class ImagingConfig:
    sigma_res_axial: float = constants.DEFAULT_SIGMA_RES_AXIAL
    sigma_res_radial: float = constants.DEFAULT_SIGMA_RES_RADIAL
    pixel_pitch: float = constants.DEFAULT_PIXEL_PITCH

    def __post_init__(self):
        for name in ("sigma_res_axial", "sigma_res_radial", "pixel_pitch"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")

    def sigma_res(self, axis):
        return self.sigma_res_axial if axis == "axial" else self.sigma_res_radial


@dataclass(frozen=True, eq=False)
class GaussianFit:
    center: float
    sigma: float
    amplitude: float
    offset: float
    ci95: dict


@dataclass(frozen=True, eq=False)
class SpotMeasurement:
    ion_index: int
    axis: str
    profile: np.ndarray
    fitted_center: float
    fitted_sigma: float
    sigma_ci95: float
    overlapping: bool = False


@dataclass(frozen=True, eq=False)
class TemperatureEstimate:
    T: float
    ci95: float
    per_ion_residuals: np.ndarray
    gamma_used: np.ndarray

    def to_dict(self):
        return {
            "T_K": self.T,
            "T_mK": self.T * 1e3,
            "ci95_K": self.ci95,
            "ci95_mK": self.ci95 * 1e3,
            "per_ion_residuals_m2": self.per_ion_residuals.tolist(),
            "gamma_used": self.gamma_used.tolist(),
        }


def _gaussian(p, x):
    amplitude, center, sigma, offset = p
    return amplitude * np.exp(-0.5 * ((x - center) / sigma) ** 2) + offset


def _jacobian(p, x):
    amplitude, center, sigma, _ = p
    u = (x - center) / sigma
    g = np.exp(-0.5 * u**2)
    return np.column_stack(
        [g, amplitude * g * u / sigma, amplitude * g * u**2 / sigma, np.ones_like(x)]
    )


def _levenberg(p0, x, y, weight):
    res = optimize.least_squares(
        lambda p: (_gaussian(p, x) - y) / weight,
        p0,
        jac=lambda p: _jacobian(p, x) / weight[:, None],
        method="lm",
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
        max_nfev=5000,
    )
    if not res.success:
        raise FitError(f"Gaussian fit did not converge: {res.message}")
    return res


def fit_gaussian_profile(profile, pixel_pitch=1.0):
    """Fits A exp(-(x-c)^2 / 2 sigma^2) + B to (pixel, counts) samples.

    A first unweighted pass seeds a second pass weighted by the Poisson
    variance of the fitted model; the covariance is scaled by the reduced
    chi-square. Center and sigma are returned in units of `pixel_pitch`
    per pixel, with 95% half-widths in `ci95`.
    """
    data = np.asarray(profile, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise DomainError("profile must be a list of (pixel, counts) pairs")
    if data.shape[0] < 5:
        raise DomainError(f"need at least 5 samples, got {data.shape[0]}")
    x, y = data[:, 0], data[:, 1]
    if np.ptp(y) == 0:
        raise FitError("constant profile, nothing to fit")

    offset = float(np.min(y))
    signal = y - offset
    center = float(x[np.argmax(y)])
    spread = math.sqrt(max(np.sum(signal * (x - center) ** 2) / np.sum(signal), 0.25))
    p0 = np.array([float(np.max(y)) - offset, center, spread, offset])

    first = _levenberg(p0, x, y, np.ones_like(y))
    weight = np.sqrt(np.maximum(_gaussian(first.x, x), 1.0))
    res = _levenberg(first.x, x, y, weight)

    amplitude, center, sigma, offset = res.x
    sigma = abs(sigma)
    if sigma < 0.25:
        raise DegenerateFitError(f"fitted width {sigma:.3g} px is below a quarter pixel")

    dof = x.size - 4
    chi2 = float(np.sum(res.fun**2))
    scale = chi2 / dof if dof > 0 else 0.0
    cov = np.linalg.pinv(res.jac.T @ res.jac) * scale
    half = Z95 * np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return GaussianFit(
        center=center * pixel_pitch,
        sigma=sigma * pixel_pitch,
        amplitude=amplitude,
        offset=offset,
        ci95={
            "amplitude": half[0],
            "center": half[1] * pixel_pitch,
            "sigma": half[2] * pixel_pitch,
            "offset": half[3],
        },
    )


def measure_spot(ion_index, axis, profile, pixel_pitch, overlapping=False):
    if axis not in AXES:
        raise DomainError(f"axis must be one of {AXES}, got {axis!r}")
    profile = np.asarray(profile, dtype=float)
    fit = fit_gaussian_profile(profile, pixel_pitch)
    span = np.ptp(profile[:, 0]) * pixel_pitch
    if span < 4 * fit.sigma:
        raise FitError(
            f"ion {ion_index}: profile spans {span:.3g} m, less than 4 fitted sigma"
        )
    return SpotMeasurement(
        ion_index=int(ion_index),
        axis=axis,
        profile=profile,
        fitted_center=fit.center,
        fitted_sigma=fit.sigma,
        sigma_ci95=fit.ci95["sigma"],
        overlapping=overlapping,
    )


def _spot_gamma(spot, gamma):
    try:
        if spot.axis == "axial":
            return gamma.gamma[spot.ion_index, 2]
        return gamma.gamma_radial_projected[spot.ion_index]
    except IndexError:
        raise DomainError(f"no gamma entry for ion {spot.ion_index}")


def estimate_temperature(spots, gamma, trap, species, imaging, include_radial=False):
    """Weighted least-squares temperature from fitted spot widths.

    Only axial spots are used unless include_radial is set. Each spot enters
    with weight 1/var(sigma^2) derived from its 95% interval; spots without an
    uncertainty estimate share equal weights and the interval then comes from
    the scatter of the residuals.
    """
    use = [s for s in spots if s.axis == "axial" or (include_radial and s.axis == "radial")]
    if not use:
        raise DomainError("no spots to analyze")

    g = np.array([_spot_gamma(s, gamma) for s in use])
    sigma = np.array([s.fitted_sigma for s in use])
    res = np.array([imaging.sigma_res(s.axis) for s in use])
    thermal = sigma**2 - res**2
    if np.all(thermal < 0):
        raise NegativeThermalVarianceError(
            "every spot is narrower than the imaging resolution", deficits=-thermal
        )

    var = (2 * sigma * np.array([s.sigma_ci95 for s in use]) / Z95) ** 2
    finite = np.isfinite(var)
    positive = var[finite & (var > 0)]
    floored = bool(np.any(finite & (var <= 0)))
    floor = 1e-12 * positive.max() if positive.size else 1.0
    var = np.where(finite, np.maximum(var, floor), np.inf)
    w = 1.0 / var
    if not np.any(w > 0):
        w = np.ones_like(var)
        floored = True

    a = constants.BOLTZMANN / (species.mass * trap.omega_z**2)
    sxx = np.sum(w * g**4)
    slope = np.sum(w * thermal * g**2) / sxx
    residuals = thermal - slope * g**2
    if floored:
        n_used = int(np.count_nonzero(w))
        chi2 = np.sum(w * residuals**2)
        se = math.sqrt(chi2 / (n_used - 1) / sxx) if n_used > 1 else 0.0
    else:
        se = 1.0 / math.sqrt(sxx)
    return TemperatureEstimate(
        T=max(slope / a, 0.0),
        ci95=Z95 * se / a,
        per_ion_residuals=residuals,
        gamma_used=g,
    )


def _overlaps(coord, sigma):
    flags = np.zeros(coord.size, dtype=bool)
    order = np.argsort(coord)
    for a, b in zip(order[:-1], order[1:]):
        if abs(coord[b] - coord[a]) < 2 * max(sigma[a], sigma[b]):
            flags[a] = flags[b] = True
    return flags


def synthesize_spots(
    T,
    state,
    gamma,
    imaging,
    photon_budget,
    seed,
    trap,
    species=None,
    axes=("axial",),
    background=2.0,
    poisson=True,
):
    """Simulated and fitted spot profiles of every ion.

    Profiles are sampled at pixel centers around each ion's projected position
    (z for "axial", (x + y)/sqrt(2) for "radial") with `photon_budget` counts
    per spot plus a flat background. Spots closer than twice their width are
    flagged and reported with an OverlapWarning.
    """
    if T < 0:
        raise DomainError(f"temperature must be >= 0, got {T}")
    species = species or default_species()
    gen = np.random.default_rng(seed)
    pitch = imaging.pixel_pitch
    pos = state.positions
    spots = []
    for axis in axes:
        if axis == "axial":
            coord, g = pos[:, 2], gamma.gamma[:, 2]
        elif axis == "radial":
            coord, g = (pos[:, 0] + pos[:, 1]) / math.sqrt(2), gamma.gamma_radial_projected
        else:
            raise DomainError(f"axis must be one of {AXES}, got {axis!r}")
        sigma = np.sqrt(spot_variance_model(T, g, trap, species, imaging.sigma_res(axis)))
        overlap = _overlaps(coord, sigma)
        if np.any(overlap):
            warnings.warn(
                f"{int(overlap.sum())} {axis} spots overlap within 2 sigma",
                OverlapWarning,
                stacklevel=2,
            )
        for i in range(state.n_ions):
            center_px = coord[i] / pitch
            half = int(math.ceil(6 * sigma[i] / pitch))
            pixels = np.arange(round(center_px) - half, round(center_px) + half + 1, dtype=float)
            peak = photon_budget * pitch / (math.sqrt(2 * math.pi) * sigma[i])
            expected = peak * np.exp(-0.5 * ((pixels * pitch - coord[i]) / sigma[i]) ** 2)
            expected += background
            counts = gen.poisson(expected).astype(float) if poisson else expected
            spots.append(
                measure_spot(i, axis, np.column_stack([pixels, counts]), pitch, bool(overlap[i]))
            )
    return spots


def spots_to_frame(spots):
    rows = []
    for s in spots:
        for pixel, counts in s.profile:
            rows.append({"ion_index": s.ion_index, "axis": s.axis, "pixel": pixel, "counts": counts})
    return pd.DataFrame(rows, columns=SPOT_COLUMNS)


def read_spots_csv(path, pixel_pitch):
    """Reads `ion_index, axis, pixel, counts` rows and fits one spot per (ion, axis).

    Blank lines are skipped; error line numbers refer to the file as written.
    """
    raw = Path(path).read_text(encoding="utf-8").splitlines()
    file_lines = [n for n, text in enumerate(raw, start=1) if text.strip()]
    if not file_lines:
        raise SpotsFormatError("file is empty, a header is required", line=1)
    text = "\n".join(raw[n - 1] for n in file_lines)
    try:
        frame = pd.read_csv(io.StringIO(text), dtype=str, skipinitialspace=True)
    except pd.errors.ParserError as e:
        found = re.search(r"line (\d+)", str(e))
        line = file_lines[int(found.group(1)) - 1] if found else None
        raise SpotsFormatError("wrong number of fields", line=line) from e
    if list(frame.columns) != SPOT_COLUMNS:
        raise SpotsFormatError(
            f"header must be {','.join(SPOT_COLUMNS)}, got {','.join(map(str, frame.columns))}",
            line=file_lines[0],
        )

    def line_of(mask):
        return file_lines[int(np.flatnonzero(mask)[0]) + 1]

    numeric = {}
    for name in ("ion_index", "pixel", "counts"):
        numeric[name] = pd.to_numeric(frame[name], errors="coerce")
        bad = numeric[name].isna()
        if bad.any():
            raise SpotsFormatError(f"column {name} is not numeric", line=line_of(bad))
    bad_axis = ~frame["axis"].isin(AXES)
    if bad_axis.any():
        raise SpotsFormatError(f"axis must be one of {AXES}", line=line_of(bad_axis))
    frame = frame.assign(**numeric)
    spots = []
    for (ion, axis), group in frame.groupby(["ion_index", "axis"], sort=False):
        profile = group[["pixel", "counts"]].to_numpy(dtype=float)
        spots.append(measure_spot(int(ion), axis, profile, pixel_pitch))
    return spots


def ion_temperature_from_mode_temperatures(modes, mode_temperatures):
    """T_{m,u} = sum_p (b_{u,m}^p)^2 T_p, as an N x 3 array."""
    temps = np.asarray(mode_temperatures, dtype=float)
    n = modes.n_ions
    if temps.shape != (3 * n,):
        raise DomainError(f"need {3 * n} mode temperatures, got {temps.shape}")
    return ((modes.coordinates**2) @ temps).reshape(3, n).T


def fit_trap_frequencies(measured_positions, trap_guess, species=None, tol=1e-10):
    """Axial and radial trap frequencies that best reproduce measured ion positions.

    The radial frequencies are scaled together so the configured asymmetry is
    kept. Computed ions are matched to measured ones by minimal total distance.
    Returns (fitted TrapConfig, rms position residual in m).
    """
    species = species or default_species()
    measured = np.asarray(measured_positions, dtype=float)
    n = measured.shape[0]
    scale = length_scale(trap_guess, species)

    def trap_for(p):
        return replace(
            trap_guess,
            omega_z=trap_guess.omega_z * math.exp(p[0]),
            omega_x=trap_guess.omega_x * math.exp(p[1]),
            omega_y=trap_guess.omega_y * math.exp(p[1]),
        )

    def residuals(p):
        state = equilibrium(n, trap_for(p), initial_guess=measured, species=species, tol=tol)
        dist = np.linalg.norm(state.positions[:, None, :] - measured[None, :, :], axis=2)
        rows, cols = linear_sum_assignment(dist)
        return ((state.positions[rows] - measured[cols]) / scale).ravel()

    res = optimize.least_squares(residuals, np.zeros(2), diff_step=1e-6, xtol=1e-12)
    if not res.success:
        raise FitError(f"trap frequency fit did not converge: {res.message}")
    rms = math.sqrt(np.mean(res.fun**2)) * scale
    return trap_for(res.x), rms
