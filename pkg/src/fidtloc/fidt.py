"""Inverse and focal inverse distance transform maps."""
from dataclasses import dataclass

import numpy as np

from .types import as_map


@dataclass(frozen=True)
class FidtParams:
    alpha: float = 0.02
    beta: float = 0.75
    c: float = 1.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be non-negative, got {self.alpha}")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")


IDT_PARAMS = FidtParams(alpha=0.0, beta=1.0, c=1.0)


def is_idt(params: FidtParams) -> bool:
    return params.alpha == 0 and params.beta == 1


def _check_distance(distance):
    d = as_map(distance, "distance map")
    if np.any(d < 0):
        raise ValueError("distance map has negative entries")
    return d


def idt_map(distance, c=1.0) -> np.ndarray:
    """``1 / (P + c)`` pixelwise."""
    if not c > 0:
        raise ValueError(f"c must be positive, got {c}")
    return 1.0 / (_check_distance(distance) + c)


def _focal_power(d, alpha, beta):
    # d ** (alpha*d + beta), with 0 ** anything taken as 0
    out = np.zeros_like(d)
    pos = d > 0
    dp = d[pos]
    if alpha == 0:
        # constant exponent: np.power keeps beta == 1 bit-identical to the IDT map
        out[pos] = np.power(dp, beta)
    else:
        out[pos] = np.exp((alpha * dp + beta) * np.log(dp))
    return out


def fidt_map(distance, params: FidtParams = FidtParams()) -> np.ndarray:
    """``1 / (P ** (alpha*P + beta) + c)`` pixelwise; annotated pixels get ``1/c``."""
    d = _check_distance(distance)
    return 1.0 / (_focal_power(d, params.alpha, params.beta) + params.c)


def fidt_profile(params: FidtParams = FidtParams(), max_distance=100.0, step=1.0):
    """Tabulate both transforms along a 1-D distance axis.

    Returns a list of ``(distance, fidt_value, idt_value)`` tuples for
    distances ``0, step, 2*step, ...`` up to and including ``max_distance``.
    """
    if not max_distance > 0:
        raise ValueError(f"max_distance must be positive, got {max_distance}")
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    n = int(np.floor(max_distance / step + 1e-9)) + 1
    d = np.arange(n, dtype=np.float64) * step
    f = 1.0 / (_focal_power(d, params.alpha, params.beta) + params.c)
    i = 1.0 / (d + params.c)
    return [(float(a), float(b), float(e)) for a, b, e in zip(d, f, i)]
