#!/usr/bin/env python3
"""
Desk-scale acceptance runs: forward accuracy, network-vs-BP ordering,
low-contrast CSI quality and inference speed.

Each check prints one `PASS <name> ...` or `FAIL <name> ...` line; the exit
status is 0 only when every requested check passes.
"""
import argparse
import logging
import sys
from pathlib import Path

import numpy as np

# Add the project root to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from scatternet.models.geometry import ContrastMap
from scatternet.models.inversion import InversionConfig
from scatternet.models.network import ModuleSpec, TrainConfig
from scatternet.services.backprop_service import backpropagate
from scatternet.services.dataset_service import build_dataset, foam_dielectric_phantom, synth_shapes
from scatternet.services.forward_service import analytic_cylinder, assemble, simulate, simulate_fields
from scatternet.services.geometry_service import (
    FULL_SCALE_EPS_R,
    FULL_SCALE_FREQUENCY,
    FULL_SCALE_WAVELENGTH,
    desk_configuration,
    make_ring_setup,
    make_square_grid,
    rasterize_disk,
    refine_grid,
)
from scatternet.services.inversion_service import csi_solve
from scatternet.services.metrics_service import build_quality_report
from scatternet.services.network_service import init_model
from scatternet.services.training_service import predict, train
from scatternet.settings import configure_logging, get_settings
from scatternet.utils.error_handler import safe_execute
from scatternet.utils.timing import timed_phase

logger = logging.getLogger(__name__)

FORWARD_TOLERANCE = 0.02
FORWARD_SUB_CELLS = 2
FORWARD_SECONDS = 30.0
SSIM_MARGIN = 0.2
MSE_RATIO = 0.5
SPEED_RATIO = 50.0
CSI_ITERATIONS = 50


def _report(name: str, passed: bool, details: str) -> bool:
    print(f"{'PASS' if passed else 'FAIL'} {name} {details}")
    return passed


def check_forward(args: argparse.Namespace) -> bool:
    """MoM scattered fields of an eps_r=3 cylinder against the harmonic series."""
    wavelength = FULL_SCALE_WAVELENGTH
    grid = make_square_grid(24, 1.2 * wavelength, FULL_SCALE_FREQUENCY)
    setup = make_ring_setup(16, 16, 10.0 * wavelength, FULL_SCALE_FREQUENCY)
    fine = refine_grid(grid, FORWARD_SUB_CELLS)
    chi = rasterize_disk(fine, grid.center, 0.5 * wavelength, FULL_SCALE_EPS_R - 1.0, supersample=8)

    get_settings().set_threads(1)
    with timed_phase("forward_mom") as timing:
        numeric = simulate(grid, setup, chi, oversample=FORWARD_SUB_CELLS)
    exact = analytic_cylinder(0.5 * wavelength, FULL_SCALE_EPS_R, grid, setup)

    error = float(np.linalg.norm(numeric - exact) / np.linalg.norm(exact))
    passed = error <= FORWARD_TOLERANCE and timing["seconds"] <= FORWARD_SECONDS
    return _report("forward", passed, f"relative_error={error:.4f} seconds={timing['seconds']:.2f}")


def check_ordering(args: argparse.Namespace) -> bool:
    """Train the 3-module cascade on 600 synthetic shapes and score it against BP."""
    grid, setup = desk_configuration()
    total = args.train + args.val + args.test
    with timed_phase("ordering_data"):
        shapes = synth_shapes(args.seed, grid, total, FULL_SCALE_EPS_R - 1.0)
        dataset = build_dataset(shapes, grid, setup, seed=args.seed)
    train_set = dataset.subset(range(args.train))
    val_set = dataset.subset(range(args.train, args.train + args.val))
    test_set = dataset.subset(range(args.train + args.val, total))

    cfg = TrainConfig(epochs=args.epochs, pretrain_epochs=args.pretrain_epochs, seed=args.seed, progress=True)
    model = init_model(ModuleSpec(), n_modules=3, init_std=cfg.init_std, seed=args.seed)
    with timed_phase("ordering_train"):
        model, _ = train(model, train_set, val_set, cfg)

    outputs = predict(model, test_set.inputs())
    truths = [s.chi for s in test_set.samples]
    net = build_quality_report(truths, [ContrastMap(grid=grid, chi=o[0].ravel()) for o in outputs], label="net")
    bp = build_quality_report(truths, [s.chi_bp for s in test_set.samples], label="bp")

    passed = net.mean_ssim >= bp.mean_ssim + SSIM_MARGIN and net.mean_mse <= MSE_RATIO * bp.mean_mse
    return _report(
        "ordering",
        passed,
        f"net_ssim={net.mean_ssim:.4f} bp_ssim={bp.mean_ssim:.4f} net_mse={net.mean_mse:.4f} bp_mse={bp.mean_mse:.4f}",
    )


def check_csi(args: argparse.Namespace) -> bool:
    """Low-contrast foam target: CSI resolves it, BP does not."""
    grid, setup = desk_configuration()
    truth = foam_dielectric_phantom(grid, foam_eps_r=1.2, plastic_eps_r=1.5)
    ops = assemble(grid, setup)
    data = simulate_fields(ops, truth).e_sca

    with timed_phase("csi"):
        chi, _ = csi_solve(ops, data, cfg=InversionConfig(max_iters=CSI_ITERATIONS))
    csi = build_quality_report([truth], [chi], label="csi")
    bp = build_quality_report([truth], [backpropagate(ops, data)], label="bp")

    passed = csi.mean_ssim > 0.7 and bp.mean_ssim < 0.2
    return _report("csi", passed, f"csi_ssim={csi.mean_ssim:.4f} bp_ssim={bp.mean_ssim:.4f}")


def check_speed(args: argparse.Namespace) -> bool:
    """Per-image cascade inference against a 50-iteration CSI run on the same sample."""
    grid, setup = desk_configuration()
    shape = synth_shapes(args.seed, grid, 1, FULL_SCALE_EPS_R - 1.0)
    sample = build_dataset(shape, grid, setup, seed=args.seed).samples[0]
    ops = assemble(grid, setup)
    model = init_model(ModuleSpec(), n_modules=3, seed=args.seed)

    with timed_phase("speed_csi") as csi_timing:
        csi_solve(ops, sample.measurements, cfg=InversionConfig(max_iters=CSI_ITERATIONS))
    image = sample.chi_bp.as_image()[None, None]
    with timed_phase("speed_net") as net_timing:
        predict(model, image)

    ratio = csi_timing["seconds"] / max(net_timing["seconds"], 1e-9)
    return _report(
        "speed",
        ratio >= SPEED_RATIO,
        f"csi_seconds={csi_timing['seconds']:.3f} net_seconds={net_timing['seconds']:.4f} ratio={ratio:.1f}",
    )


CHECKS = {
    "forward": check_forward,
    "ordering": check_ordering,
    "csi": check_csi,
    "speed": check_speed,
}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("checks", nargs="+", choices=sorted(CHECKS), help="checks to run")
    parser.add_argument("--train", type=int, default=600, help="ordering: training samples")
    parser.add_argument("--val", type=int, default=100, help="ordering: validation samples")
    parser.add_argument("--test", type=int, default=200, help="ordering: test samples")
    parser.add_argument("--epochs", type=int, default=TrainConfig().epochs, help="ordering: total epochs")
    parser.add_argument("--pretrain-epochs", type=int, default=TrainConfig().pretrain_epochs,
                        help="ordering: pretraining epochs per module")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--log-level", default="WARNING")
    args = parser.parse_args()
    configure_logging(args.log_level)

    all_passed = True
    for name in args.checks:
        ok, passed, error = safe_execute(CHECKS[name], args)
        if not ok:
            _report(name, False, f"error={type(error).__name__}: {error}")
        all_passed = all_passed and ok and bool(passed)
    return 0 if all_passed else 1


if __name__ == "__main__":
    sys.exit(main())
