"""
`invert`: reconstruct one stored sample with BP, CSI or proximal DBIM.
"""
import argparse
import logging
from typing import Tuple

import numpy as np

from scatternet.commands.arguments import non_negative_int, positive_int
from scatternet.exceptions import ConfigurationError, InversionError
from scatternet.models.geometry import ContrastMap
from scatternet.models.inversion import InversionConfig, InversionTrace
from scatternet.models.fields import Operators
from scatternet.repositories.dataset_repository import read_dataset
from scatternet.repositories.report_repository import write_pgm, write_trace_csv
from scatternet.services.backprop_service import backpropagate, normalize_for_display
from scatternet.services.forward_service import assemble
from scatternet.services.inversion_service import csi_solve, dbim_prox_solve
from scatternet.services.metrics_service import mse, ssim
from scatternet.utils.timing import timed_phase

logger = logging.getLogger(__name__)

DEFAULT_ITERS = {"csi": 50, "dbim": 10}


def register(subparsers) -> argparse.ArgumentParser:
    parser = subparsers.add_parser(
        "invert",
        help="reconstruct one sample of a dataset",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--method", choices=("bp", "csi", "dbim"), required=True, help="reconstruction method")
    parser.add_argument("--data", required=True, help="input NISD file")
    parser.add_argument("--index", type=non_negative_int, default=0, help="sample index")
    parser.add_argument("--iters", type=positive_int, default=None,
                        help=f"outer iterations; default {DEFAULT_ITERS['csi']} for csi, {DEFAULT_ITERS['dbim']} for dbim")
    parser.add_argument("--tau", type=float, default=0.0, help="soft-threshold level of dbim")
    parser.add_argument("--cg-iters", type=positive_int, default=50, help="inner CG iterations of dbim")
    parser.add_argument("--cg-tol", type=float, default=1e-6, help="inner CG relative tolerance of dbim")
    parser.add_argument("--tikhonov", type=float, default=0.0, help="Tikhonov damping of the dbim normal equations")
    parser.add_argument("--transform", choices=("identity", "haar"), default="identity",
                        help="sparsifying transform of dbim")
    parser.add_argument("--out", required=True, help="output prefix")
    parser.set_defaults(handler=handle)
    return parser


def _config(args: argparse.Namespace) -> InversionConfig:
    if args.tau < 0 or args.tikhonov < 0 or args.cg_tol <= 0:
        raise ConfigurationError("--tau and --tikhonov must be non-negative and --cg-tol positive")
    return InversionConfig(
        max_iters=args.iters or DEFAULT_ITERS.get(args.method, 1),
        threshold_tau=args.tau,
        cg_iters=args.cg_iters,
        cg_tol=args.cg_tol,
        tikhonov_eps=args.tikhonov,
        transform=args.transform,
    )


def _reconstruct(args: argparse.Namespace, ops: Operators, measurements: np.ndarray) -> Tuple[ContrastMap, InversionTrace]:
    if args.method == "bp":
        return backpropagate(ops, measurements), InversionTrace(method="bp")
    cfg = _config(args)
    if args.method == "csi":
        return csi_solve(ops, measurements, cfg=cfg)
    return dbim_prox_solve(ops, measurements, cfg=cfg)


def handle(args: argparse.Namespace) -> int:
    with timed_phase("read"):
        dataset = read_dataset(args.data)
    if args.index >= len(dataset):
        raise ConfigurationError(f"--index {args.index} out of range for {len(dataset)} samples")
    sample = dataset.samples[args.index]

    with timed_phase("assemble"):
        ops = assemble(dataset.grid, dataset.setup, incidence=dataset.header.incidence)
    with timed_phase(f"invert_{args.method}"):
        try:
            chi, trace = _reconstruct(args, ops, sample.measurements)
        except InversionError as e:
            if e.trace is not None:
                write_trace_csv(e.trace, f"{args.out}_trace.csv")
            raise

    recon = normalize_for_display(chi)
    truth = normalize_for_display(sample.chi)
    write_pgm(recon, f"{args.out}_recon.pgm")
    write_pgm(truth, f"{args.out}_truth.pgm")
    write_trace_csv(trace, f"{args.out}_trace.csv")

    residual = trace.final_residual
    residual_text = "nan" if residual is None else f"{residual:.6e}"
    print(f"method={args.method} index={args.index} ssim={ssim(recon, truth):.6f} "
          f"mse={mse(recon, truth):.6f} iterations={len(trace)} residual={residual_text}")
    return 0
