"""Command-line front end: ion-lattice <verb> --config run.toml --out results/

Verbs write CSV tables (9 significant digits, LF endings) and JSON sidecars
that carry the config hash, so identical config and seed give identical files.

Exit codes: 0 success, 2 configuration or domain error, 3 solver, fit or
quadrature failure, 4 I/O or spots-file error.
"""

import argparse
import json
import sys
from importlib import metadata
from pathlib import Path

import numpy as np
import pandas as pd
import scipy

from . import constants
from .crystal import (
    classify_structure,
    continuation,
    continuation_table,
    equilibrium,
    frequency_grid,
    gamma_parameters,
    normal_modes,
)
from .ensemble import scan_depth, write_scan_csv
from .errors import (
    ConfigError,
    DomainError,
    FitError,
    NegativeThermalVarianceError,
    QuadratureError,
    SingularConfigurationError,
    SolverError,
    SpotsFormatError,
    UnstableConfigurationError,
)
from .micromotion import excess_micromotion
from .pendulum import lattice_frequency
from .run_config import RunConfig, parse_grid
from .thermometry import (
    estimate_temperature,
    read_spots_csv,
    spots_to_frame,
    synthesize_spots,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4

FLOAT_FORMAT = "%.9g"

VERBS = ("equilibrium", "modes", "scatter", "thermometry", "micromotion", "synthesize")


def _version(package):
    try:
        return metadata.version(package)
    except metadata.PackageNotFoundError:
        return "unknown"


def _metadata(config, **extra):
    meta = {
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "versions": {
            "ion_lattice": _version("ion_lattice"),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "pandas": pd.__version__,
        },
    }
    meta.update(extra)
    return meta


def _write_csv(frame, path):
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def _write_json(payload, path):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(json.dumps(payload, indent=2, sort_keys=True))
        f.write("\n")


def _crystal(config, with_lattice=False):
    lattice = config.lattice() if with_lattice else None
    return equilibrium(
        config.n_ions,
        config.trap(),
        lattice,
        species=config.species(),
        seed=config.seed,
        n_starts=config.n_starts,
    )


def cmd_equilibrium(config, out, args):
    state = _crystal(config, with_lattice=args.with_lattice)
    pos_um = state.positions * 1e6
    table = pd.DataFrame(
        {
            "ion": np.arange(1, state.n_ions + 1),
            "x_um": pos_um[:, 0],
            "y_um": pos_um[:, 1],
            "z_um": pos_um[:, 2],
        }
    )
    _write_csv(table, out / "positions.csv")
    _write_json(
        _metadata(
            config,
            structure=classify_structure(state),
            length_scale_um=state.length_scale * 1e6,
            potential_energy_J=state.potential_value,
            is_saddle=state.is_saddle,
        ),
        out / "positions.json",
    )
    return [out / "positions.csv", out / "positions.json"]


def cmd_modes(config, out, args):
    species = config.species()
    lattice = config.lattice()
    grid_spec = args.grid or config.section("scan")["grid"]
    if grid_spec is not None:
        nu_grid = parse_grid(grid_spec) * 1e6
    else:
        nu_max = lattice_frequency(
            lattice.lattice_temperature, species, lattice.wavevector_k
        )
        nu_grid = frequency_grid(nu_max, config.section("scan")["steps"])
    result = continuation(
        config.n_ions,
        config.trap(),
        lattice,
        species=species,
        nu_grid=nu_grid,
        seed=config.seed,
        n_starts=config.n_starts,
        progress=args.progress,
    )
    _write_csv(continuation_table(result), out / "modes.csv")
    _write_json(_metadata(config, flags=result.flags), out / "modes_warnings.json")
    return [out / "modes.csv", out / "modes_warnings.json"]


def cmd_scatter(config, out, args):
    grid_spec = args.grid or config.section("scan")["grid"]
    if grid_spec is not None:
        depth_grid = parse_grid(grid_spec) * 1e-3 * constants.BOLTZMANN
    else:
        depth_grid = np.linspace(0.0, config.lattice_max_depth(), 26)
    state = _crystal(config)
    table = scan_depth(config.scenario(state), config.beam(), depth_grid, progress=args.progress)
    write_scan_csv(table, out / "scatter.csv")
    _write_json(
        _metadata(config, T0_mK=config.require("thermometry", "T0") * 1e3),
        out / "scatter.json",
    )
    return [out / "scatter.csv", out / "scatter.json"]


def _gamma(config, state):
    modes = normal_modes(state, config.trap(), species=config.species())
    return gamma_parameters(modes)


def cmd_thermometry(config, out, args):
    if args.spots is None:
        raise ConfigError("the thermometry verb needs a spots file", key="--spots")
    imaging = config.imaging()
    spots = read_spots_csv(args.spots, imaging.pixel_pitch)
    state = _crystal(config)
    estimate = estimate_temperature(
        spots,
        _gamma(config, state),
        config.trap(),
        config.species(),
        imaging,
        include_radial=config.section("thermometry")["include_radial"],
    )
    payload = _metadata(config, n_spots=len(spots))
    payload.update(estimate.to_dict())
    _write_json(payload, out / "temperature.json")
    return [out / "temperature.json"]


def cmd_micromotion(config, out, args):
    state = _crystal(config)
    report = excess_micromotion(state, config.trap(), config.species())
    payload = _metadata(config, structure=classify_structure(state))
    payload.update(report.to_dict())
    _write_json(payload, out / "micromotion.json")
    return [out / "micromotion.json"]


def cmd_synthesize(config, out, args):
    th = config.section("thermometry")
    T = config.require("thermometry", "T0")
    seed = config.require("thermometry", "seed")
    state = _crystal(config)
    axes = ("axial", "radial") if th["include_radial"] else ("axial",)
    spots = synthesize_spots(
        T,
        state,
        _gamma(config, state),
        config.imaging(),
        th["photon_budget"],
        seed,
        config.trap(),
        config.species(),
        axes=axes,
        background=th["background"],
    )
    _write_csv(spots_to_frame(spots), out / "spots.csv")
    _write_json(
        _metadata(
            config,
            T0_mK=T * 1e3,
            thermometry_seed=seed,
            n_spots=len(spots),
            axes=list(axes),
        ),
        out / "spots.json",
    )
    return [out / "spots.csv", out / "spots.json"]


COMMANDS = {
    "equilibrium": cmd_equilibrium,
    "modes": cmd_modes,
    "scatter": cmd_scatter,
    "thermometry": cmd_thermometry,
    "micromotion": cmd_micromotion,
    "synthesize": cmd_synthesize,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ion-lattice",
        description="Ion Coulomb crystals in an optical lattice: equilibria, modes, "
        "scattering and thermometry.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in VERBS:
        p = sub.add_parser(verb, help=COMMANDS[verb].__name__.replace("cmd_", "") + " run")
        p.add_argument("--config", type=Path, required=True, help="Run configuration (TOML or JSON)")
        p.add_argument(
            "--out",
            type=Path,
            default=None,
            help="Output directory (default: output.directory of the config)",
        )
        p.add_argument(
            "--grid",
            default=None,
            help="start:stop:count:{lin|geom}; depth in mK for scatter, nu_latt in MHz for modes",
        )
        p.add_argument("--no-progress", dest="progress", action="store_false")
        if verb == "thermometry":
            p.add_argument("--spots", type=Path, default=None, help="Spots CSV file")
        if verb == "equilibrium":
            p.add_argument(
                "--with-lattice",
                action="store_true",
                help="Solve at the configured maximum lattice depth",
            )
    return parser


def _exit_code(error):
    if isinstance(error, (SpotsFormatError, OSError)):
        return EXIT_IO
    if isinstance(error, (ConfigError, DomainError, SingularConfigurationError)):
        return EXIT_CONFIG
    if isinstance(
        error,
        (
            SolverError,
            UnstableConfigurationError,
            QuadratureError,
            FitError,
            NegativeThermalVarianceError,
        ),
    ):
        return EXIT_SOLVER
    return None


def main(argv=None):
    args = build_parser().parse_args(argv)
    args.spots = getattr(args, "spots", None)
    args.with_lattice = getattr(args, "with_lattice", False)
    try:
        config = RunConfig.from_file(args.config)
        out = args.out or Path(config.section("output")["directory"])
        out.mkdir(parents=True, exist_ok=True)
        written = COMMANDS[args.verb](config, out, args)
    except Exception as e:
        code = _exit_code(e)
        if code is None:
            raise
        print(f"[{args.verb}] error ({getattr(e, 'code', type(e).__name__)}): {e}", file=sys.stderr)
        return code
    for path in written:
        print(f"[{args.verb}] wrote {path}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
