"""Local maxima detection on predicted FIDT maps."""
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage

from .types import as_map


@dataclass(frozen=True)
class LmdsParams:
    threshold_ratio: float = 100 / 255.0
    negative_cutoff: float = 0.10
    pool_size: int = 3
    dedup_plateaus: bool = False

    def __post_init__(self):
        if not 0 < self.threshold_ratio < 1:
            raise ValueError(f"threshold_ratio must lie in (0, 1), got {self.threshold_ratio}")
        if not self.negative_cutoff > 0:
            raise ValueError(f"negative_cutoff must be positive, got {self.negative_cutoff}")
        if self.pool_size < 3 or self.pool_size % 2 == 0:
            raise ValueError(f"pool_size must be odd and >= 3, got {self.pool_size}")


@dataclass
class DetectionResult:
    coordinates: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=np.int64))
    is_negative: bool = False
    max_value: float = 0.0

    @property
    def count(self) -> int:
        return len(self.coordinates)


def max_filter(m, size=3):
    """Sliding ``size x size`` maximum, stride 1, edges replicated."""
    r = size // 2
    padded = np.pad(m, r, mode="edge")
    return sliding_window_view(padded, (size, size)).max(axis=(-2, -1))


def detect(fidt, params: LmdsParams = LmdsParams()) -> DetectionResult:
    """Extract head positions from a predicted map.

    Keeps pixels that equal their neighbourhood maximum and reach
    ``threshold_ratio`` times the largest such value. If that largest value is
    below ``negative_cutoff`` the map is declared a negative sample. Returned
    coordinates are ``(x, y)`` pixel pairs in row-major order.
    """
    m = as_map(fidt)
    candidates = (max_filter(m, params.pool_size) == m) * m
    top = float(candidates.max())
    if top < params.negative_cutoff:
        return DetectionResult(is_negative=True, max_value=top)
    keep = candidates >= params.threshold_ratio * top
    if params.dedup_plateaus:
        labels, n = ndimage.label(keep, structure=np.ones((3, 3), dtype=bool))
        flat = labels.ravel()
        _, first = np.unique(flat, return_index=True)
        keep = np.zeros_like(keep)
        keep.ravel()[first[1:] if flat[first[0]] == 0 else first] = True
    rows, cols = np.nonzero(keep)
    return DetectionResult(coordinates=np.stack([cols, rows], axis=1).astype(np.int64), max_value=top)


def count(fidt, params: LmdsParams = LmdsParams()) -> int:
    return detect(fidt, params).count
