"""
`eval`: score cascade output and the BP input against ground truth.
"""
import argparse
import logging

from scatternet.commands.arguments import positive_int
from scatternet.exceptions import ConfigurationError
from scatternet.models.geometry import ContrastMap
from scatternet.repositories.dataset_repository import read_dataset
from scatternet.repositories.report_repository import write_pgm, write_report
from scatternet.repositories.weights_repository import load_weights
from scatternet.services.metrics_service import build_quality_report, image_grid
from scatternet.services.training_service import predict
from scatternet.utils.timing import timed_phase

logger = logging.getLogger(__name__)

GRID_COLUMNS = 4
GRID_SAMPLES = 16


def register(subparsers) -> argparse.ArgumentParser:
    parser = subparsers.add_parser(
        "eval",
        help="compare network output and BP input against the ground truth",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--weights", required=True, help="NISW weights file")
    parser.add_argument("--data", required=True, help="NISD dataset file")
    parser.add_argument("--modules", type=positive_int, default=None,
                        help="apply only the first K modules; default all")
    parser.add_argument("--residual", action="store_true", help="weights were trained with residual modules")
    parser.add_argument("--bins", type=positive_int, default=10, help="histogram bins")
    parser.add_argument("--batch", type=positive_int, default=32, help="inference batch size")
    parser.add_argument("--images", action="store_true", help="also write one PGM per sample")
    parser.add_argument("--out", required=True, help="output prefix")
    parser.set_defaults(handler=handle)
    return parser


def handle(args: argparse.Namespace) -> int:
    with timed_phase("read"):
        model = load_weights(args.weights, residual=args.residual)
        dataset = read_dataset(args.data)
    if args.modules is not None and args.modules > model.n_modules:
        raise ConfigurationError(f"--modules {args.modules} exceeds the {model.n_modules} modules in {args.weights}")

    with timed_phase("inference"):
        outputs = predict(model, dataset.inputs(), n_modules=args.modules, batch_size=args.batch)

    grid = dataset.grid
    truths = [sample.chi for sample in dataset.samples]
    bp = [sample.chi_bp for sample in dataset.samples]
    net = [ContrastMap(grid=grid, chi=output[0].ravel()) for output in outputs]

    with timed_phase("metrics"):
        bp_report = build_quality_report(truths, bp, n_bins=args.bins, label="bp")
        net_report = build_quality_report(truths, net, n_bins=args.bins, label="net")

    with timed_phase("write"):
        write_report(net_report, f"{args.out}_net", images=args.images)
        write_report(bp_report, f"{args.out}_bp", images=args.images)
        shown = min(GRID_SAMPLES, len(dataset))
        if shown:
            write_pgm(image_grid(net_report.truths[:shown], GRID_COLUMNS), f"{args.out}_grid_truth.pgm")
            write_pgm(image_grid(bp_report.reconstructions[:shown], GRID_COLUMNS), f"{args.out}_grid_bp.pgm")
            write_pgm(image_grid(net_report.reconstructions[:shown], GRID_COLUMNS), f"{args.out}_grid_net.pgm")

    print(f"bp_ssim={bp_report.mean_ssim:.6f} bp_mse={bp_report.mean_mse:.6f} "
          f"net_ssim={net_report.mean_ssim:.6f} net_mse={net_report.mean_mse:.6f}")
    return 0
