"""
`generate`: build and store a simulated scattering dataset.
"""
import argparse
import logging
import math
from typing import List

from scipy import constants

from scatternet.commands.arguments import grid_size, non_negative_int, positive_int, snr
from scatternet.exceptions import ConfigurationError
from scatternet.models.fields import SolverSettings
from scatternet.models.geometry import ContrastMap, Grid
from scatternet.repositories.dataset_repository import write_dataset
from scatternet.services.dataset_service import (
    LETTER_BITMAPS,
    build_dataset,
    foam_dielectric_phantom,
    letter_phantom,
    mnist_contrasts,
    synth_shapes,
)
from scatternet.services.geometry_service import (
    DESK_ANTENNAS,
    DESK_GRID_CELLS,
    FULL_SCALE_DOMAIN_WAVELENGTHS,
    FULL_SCALE_EPS_R,
    FULL_SCALE_FREQUENCY,
    FULL_SCALE_RADIUS_WAVELENGTHS,
    make_ring_setup,
    make_square_grid,
)
from scatternet.utils.timing import timed_phase

logger = logging.getLogger(__name__)

SOURCES = "synth | letters | foam | idx:PATH"


def register(subparsers) -> argparse.ArgumentParser:
    parser = subparsers.add_parser(
        "generate",
        help="simulate a dataset of contrasts, measurements and BP images",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--grid", type=grid_size, default=(DESK_GRID_CELLS, DESK_GRID_CELLS),
                        help="grid size NxN")
    parser.add_argument("--cells-per-wavelength", type=float, default=None,
                        help=f"grid resolution; default spans {FULL_SCALE_DOMAIN_WAVELENGTHS} wavelengths")
    parser.add_argument("--tx", type=positive_int, default=DESK_ANTENNAS, help="transmitter count")
    parser.add_argument("--rx", type=positive_int, default=DESK_ANTENNAS, help="receiver count")
    parser.add_argument("--radius-wavelengths", type=float, default=FULL_SCALE_RADIUS_WAVELENGTHS,
                        help="antenna ring radius in wavelengths")
    parser.add_argument("--count", type=positive_int, default=10, help="number of samples")
    parser.add_argument("--source", default="synth", help=f"shape source: {SOURCES}")
    parser.add_argument("--snr", type=snr, default=math.inf, help="measurement SNR in dB, or inf")
    parser.add_argument("--seed", type=non_negative_int, default=0, help="shape and noise seed")
    parser.add_argument("--eps-r", type=float, default=FULL_SCALE_EPS_R, help="relative permittivity of the shapes")
    parser.add_argument("--frequency", type=float, default=FULL_SCALE_FREQUENCY, help="working frequency in Hz")
    parser.add_argument("--incidence", choices=("line", "plane"), default="line", help="transmitter model")
    parser.add_argument("--solver", choices=("krylov", "dense"), default=None,
                        help="linear solver; default from SCATTERNET_SOLVER")
    parser.add_argument("--oversample", type=positive_int, default=1,
                        help="forward-solve sub-cells per pixel side")
    parser.add_argument("--out", required=True, help="output NISD file")
    parser.set_defaults(handler=handle)
    return parser


def _grid(args: argparse.Namespace) -> Grid:
    nx, ny = args.grid
    if nx != ny:
        raise ConfigurationError(f"Only square grids are supported, got {nx}x{ny}")
    if args.frequency <= 0:
        raise ConfigurationError(f"--frequency must be positive, got {args.frequency}")
    wavelength = constants.c / args.frequency
    if args.cells_per_wavelength is None:
        side = FULL_SCALE_DOMAIN_WAVELENGTHS * wavelength
    elif args.cells_per_wavelength > 0:
        side = nx / args.cells_per_wavelength * wavelength
    else:
        raise ConfigurationError(f"--cells-per-wavelength must be positive, got {args.cells_per_wavelength}")
    return make_square_grid(nx, side, args.frequency)


def _shapes(args: argparse.Namespace, grid: Grid) -> List[ContrastMap]:
    chi_value = complex(args.eps_r - 1.0)
    source = args.source
    if source == "synth":
        return synth_shapes(args.seed, grid, args.count, chi_value)
    if source == "letters":
        letters = sorted(LETTER_BITMAPS)
        return [letter_phantom(letters[i % len(letters)], grid, chi_value) for i in range(args.count)]
    if source == "foam":
        return [foam_dielectric_phantom(grid, plastic_eps_r=args.eps_r) for _ in range(args.count)]
    if source.startswith("idx:") and len(source) > 4:
        return mnist_contrasts(source[4:], grid, args.count, chi_value, seed=args.seed)
    raise ConfigurationError(f"Unknown --source {source!r}; expected {SOURCES}")


def handle(args: argparse.Namespace) -> int:
    if args.radius_wavelengths <= 0:
        raise ConfigurationError(f"--radius-wavelengths must be positive, got {args.radius_wavelengths}")
    grid = _grid(args)
    setup = make_ring_setup(args.tx, args.rx, args.radius_wavelengths * grid.wavelength, args.frequency,
                            center=grid.center)
    solver = SolverSettings(method=args.solver) if args.solver else None

    with timed_phase("shapes"):
        shapes = _shapes(args, grid)
    with timed_phase("simulate"):
        dataset = build_dataset(shapes, grid, setup, snr_db=args.snr, seed=args.seed,
                                incidence=args.incidence, solver=solver, oversample=args.oversample)
    with timed_phase("write"):
        write_dataset(dataset, args.out)

    snr_text = "inf" if math.isinf(args.snr) else f"{args.snr:g}"
    print(f"generated count={len(dataset)} grid={grid.nx}x{grid.ny} snr={snr_text}")
    return 0
