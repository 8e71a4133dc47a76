"""Pseudo bounding boxes from nearest-neighbour spacing of detected heads."""
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .types import PointSet


@dataclass(frozen=True)
class BoxParams:
    k: int = 4
    f: float = 0.1
    cap_fraction: float = 0.05

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not self.f > 0:
            raise ValueError(f"f must be positive, got {self.f}")
        if not self.cap_fraction > 0:
            raise ValueError(f"cap_fraction must be positive, got {self.cap_fraction}")


@dataclass(frozen=True)
class PseudoBox:
    """Square box of side ``size`` centred on ``(x, y)``."""

    x: float
    y: float
    size: float

    def bounds(self, image_width, image_height):
        """``(x0, y0, x1, y1)`` clipped to the image."""
        r = self.size / 2
        return (
            max(self.x - r, 0.0),
            max(self.y - r, 0.0),
            min(self.x + r, float(image_width)),
            min(self.y + r, float(image_height)),
        )


def knn_mean_distance(points, k):
    """Mean distance from each point to its ``k`` nearest other points.

    With fewer than ``k`` other points the mean runs over all of them; a lone
    point gets NaN.
    """
    pts = np.asarray(points, dtype=np.float64)
    n = len(pts)
    kk = min(k, n - 1)
    if kk == 0:
        return np.full(n, np.nan)
    dist, _ = cKDTree(pts).query(pts, k=kk + 1)
    # the query includes a zero-distance hit for the point itself; drop it
    return dist[:, 1:].mean(axis=1)


def generate_boxes(points: PointSet, params: BoxParams = BoxParams()):
    if len(points) == 0:
        raise ValueError("cannot generate boxes for an empty point set")
    cap = params.cap_fraction * min(points.image_width, points.image_height)
    dbar = knn_mean_distance(points.points, params.k)
    sizes = np.where(np.isnan(dbar), cap, np.minimum(params.f * np.nan_to_num(dbar, nan=np.inf), cap))
    return [PseudoBox(float(x), float(y), float(s)) for (x, y), s in zip(points.points, sizes)]
