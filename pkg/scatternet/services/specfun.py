"""
Cylindrical Bessel and Hankel functions of orders 0 and 1.

Thin, domain-checked wrappers over the Cephes routines in scipy.special;
these are the only special functions the 2D Green's function needs.
"""
import logging
from typing import Union

import numpy as np
from scipy import special

from scatternet.exceptions import SpecialFunctionDomainError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

_KERNELS = {
    ("J", 0): special.j0,
    ("J", 1): special.j1,
    ("Y", 0): special.y0,
    ("Y", 1): special.y1,
}


def _check_order(order: int) -> None:
    if order not in (0, 1):
        raise SpecialFunctionDomainError(f"Only orders 0 and 1 are supported, got {order}")


def _finite(values: np.ndarray, label: str) -> None:
    if not np.all(np.isfinite(values)):
        raise SpecialFunctionDomainError(f"{label} produced a non-finite value")


def bessel_cyl(kind: str, order: int, x: ArrayLike) -> ArrayLike:
    """
    Cylindrical Bessel function of the first (J) or second (Y) kind.

    Args:
        kind: "J" or "Y"
        order: 0 or 1
        x: Real argument(s); x >= 0 for J, x > 0 for Y

    Returns:
        Real value(s) with the shape of x
    """
    kind = kind.upper()
    if kind not in ("J", "Y"):
        raise SpecialFunctionDomainError(f"Unknown Bessel kind {kind!r}")
    _check_order(order)

    values = np.asarray(x, dtype=np.float64)
    if kind == "J" and np.any(values < 0):
        raise SpecialFunctionDomainError("J is only evaluated for x >= 0")
    if kind == "Y" and np.any(values <= 0):
        raise SpecialFunctionDomainError("Y has a logarithmic singularity at x <= 0")

    result = _KERNELS[(kind, order)](values)
    _finite(result, f"{kind}{order}")
    return float(result) if np.ndim(result) == 0 else result


def hankel1(order: int, x: ArrayLike) -> Union[complex, np.ndarray]:
    """Hankel function of the first kind, H(x) = J(x) + iY(x), for x > 0."""
    _check_order(order)
    values = np.asarray(x, dtype=np.float64)
    if np.any(values <= 0):
        raise SpecialFunctionDomainError("Hankel function requires x > 0")

    result = _KERNELS[("J", order)](values) + 1j * _KERNELS[("Y", order)](values)
    _finite(result, f"H{order}")
    return complex(result) if np.ndim(result) == 0 else result
