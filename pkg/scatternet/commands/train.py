"""
`train`: two-stage training of the CNN cascade on a stored dataset.
"""
import argparse
import logging
from pathlib import Path

from scatternet.commands.arguments import fraction, non_negative_int, positive_int
from scatternet.exceptions import ConfigurationError
from scatternet.models.network import ModuleSpec, TrainConfig
from scatternet.repositories.dataset_repository import read_dataset
from scatternet.repositories.report_repository import write_history_csv
from scatternet.repositories.weights_repository import save_weights
from scatternet.services.dataset_service import split
from scatternet.services.network_service import init_model
from scatternet.services.training_service import train
from scatternet.utils.timing import timed_phase

logger = logging.getLogger(__name__)


def register(subparsers) -> argparse.ArgumentParser:
    defaults = TrainConfig()
    spec = ModuleSpec()
    parser = subparsers.add_parser(
        "train",
        help="train the cascade on back-propagation images",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--data", required=True, help="input NISD file")
    parser.add_argument("--val-frac", type=fraction, default=0.1, help="validation fraction")
    parser.add_argument("--test-frac", type=fraction, default=0.2, help="held-out test fraction")
    parser.add_argument("--modules", type=positive_int, default=3, help="cascade length")
    parser.add_argument("--epochs", type=non_negative_int, default=defaults.epochs,
                        help="total epochs (per-module pretraining plus fine-tuning)")
    parser.add_argument("--pretrain-epochs", type=non_negative_int, default=defaults.pretrain_epochs,
                        help="epochs each module is pretrained alone")
    parser.add_argument("--batch", type=positive_int, default=defaults.batch_size, help="mini-batch size")
    parser.add_argument("--seed", type=non_negative_int, default=defaults.seed, help="split, init and shuffle seed")
    parser.add_argument("--lr-early", type=float, default=defaults.lr_early, help="rate of the first two convolutions")
    parser.add_argument("--lr-last", type=float, default=defaults.lr_last, help="rate of the output convolution")
    parser.add_argument("--patience", type=positive_int, default=defaults.patience,
                        help="epochs without validation improvement before the rates are halved")
    parser.add_argument("--init-std", type=float, default=defaults.init_std, help="std of the initial weights")
    parser.add_argument("--kernels", default=f"{spec.kernel1},{spec.kernel2},{spec.kernel3}",
                        help="supports f1,f2,f3 of the three convolutions")
    parser.add_argument("--channels", default=f"{spec.channels1},{spec.channels2}",
                        help="filter counts n1,n2")
    parser.add_argument("--residual", action="store_true", help="add each module's input before its final CReLU")
    parser.add_argument("--progress", action="store_true", help="show progress bars")
    parser.add_argument("--history", default=None, help="history CSV; default <out stem>_history.csv")
    parser.add_argument("--out", required=True, help="output NISW weights file")
    parser.set_defaults(handler=handle)
    return parser


def _ints(text: str, count: int, flag: str):
    try:
        values = [int(v) for v in text.split(",")]
    except ValueError:
        raise ConfigurationError(f"{flag} expects {count} comma-separated integers, got {text!r}")
    if len(values) != count:
        raise ConfigurationError(f"{flag} expects {count} comma-separated integers, got {text!r}")
    return values


def _spec(args: argparse.Namespace) -> ModuleSpec:
    f1, f2, f3 = _ints(args.kernels, 3, "--kernels")
    n1, n2 = _ints(args.channels, 2, "--channels")
    try:
        return ModuleSpec(kernel1=f1, channels1=n1, kernel2=f2, channels2=n2, kernel3=f3, residual=args.residual)
    except ValueError as e:
        raise ConfigurationError(f"Invalid module shape: {e}") from e


def handle(args: argparse.Namespace) -> int:
    if args.val_frac + args.test_frac >= 1.0:
        raise ConfigurationError("--val-frac plus --test-frac must leave a training share")
    spec = _spec(args)
    try:
        cfg = TrainConfig(
            epochs=args.epochs,
            pretrain_epochs=args.pretrain_epochs,
            batch_size=args.batch,
            seed=args.seed,
            lr_early=args.lr_early,
            lr_last=args.lr_last,
            patience=args.patience,
            init_std=args.init_std,
            progress=args.progress,
        )
    except ValueError as e:
        raise ConfigurationError(f"Invalid training settings: {e}") from e

    with timed_phase("read"):
        dataset = read_dataset(args.data)
    train_set, val_set, _ = split(dataset, (1.0 - args.val_frac - args.test_frac, args.val_frac, args.test_frac),
                                  seed=args.seed)

    model = init_model(spec, n_modules=args.modules, init_std=cfg.init_std, seed=cfg.seed)
    with timed_phase("train"):
        model, history = train(model, train_set, val_set, cfg)

    out = Path(args.out)
    history_path = args.history or str(out.with_name(f"{out.stem}_history.csv"))
    save_weights(model, out)
    write_history_csv(history, history_path)

    last = history.records[-1] if len(history) else None
    losses = f"train_loss={last.train_loss:.6e} val_loss={last.val_loss:.6e}" if last else "train_loss=nan val_loss=nan"
    print(f"trained modules={model.n_modules} epochs={cfg.epochs} train={len(train_set)} "
          f"val={len(val_set)} {losses}")
    return 0
