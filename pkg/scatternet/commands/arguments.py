"""
Argument types shared by the subcommands.
"""
import argparse
import math
from typing import Tuple


def grid_size(text: str) -> Tuple[int, int]:
    """`NxM` -> (N, M), both positive."""
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected NxN, got {text!r}")
    try:
        nx, ny = int(parts[0]), int(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers in NxN, got {text!r}")
    if nx < 1 or ny < 1:
        raise argparse.ArgumentTypeError(f"grid sides must be positive, got {text!r}")
    return nx, ny


def snr(text: str) -> float:
    """A finite dB value or `inf` for noiseless data."""
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a dB value or inf, got {text!r}")
    if math.isnan(value) or value == -math.inf:
        raise argparse.ArgumentTypeError(f"SNR must be finite or +inf, got {text!r}")
    return value


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def non_negative_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {value}")
    return value


def fraction(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number in [0, 1), got {text!r}")
    if not 0.0 <= value < 1.0:
        raise argparse.ArgumentTypeError(f"expected a number in [0, 1), got {value}")
    return value
