"""Shared data containers.

Dense maps are plain ``(height, width)`` float arrays; ``as_map`` is the
validation gate every public function goes through.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def as_map(values, name="map") -> np.ndarray:
    """Return ``values`` as a finite 2-D float64 array or raise ValueError."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


@dataclass(frozen=True)
class PointSet:
    """Head coordinates for one image.

    ``points`` is an ``(N, 2)`` array of ``(x, y)`` = (column, row) pairs and
    ``boxes`` an optional parallel ``(N, 2)`` array of ``(w, h)`` head extents.
    """

    image_width: int
    image_height: int
    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    boxes: np.ndarray | None = None
    image_id: str = ""

    def __post_init__(self):
        if int(self.image_width) != self.image_width or self.image_width < 1:
            raise ValueError(f"image_width must be a positive integer, got {self.image_width}")
        if int(self.image_height) != self.image_height or self.image_height < 1:
            raise ValueError(f"image_height must be a positive integer, got {self.image_height}")
        object.__setattr__(self, "image_width", int(self.image_width))
        object.__setattr__(self, "image_height", int(self.image_height))

        pts = np.asarray(self.points, dtype=np.float64)
        if pts.size == 0:
            pts = np.zeros((0, 2))
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"points must have shape (N, 2), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points contain non-finite coordinates")
        bad = (pts[:, 0] < 0) | (pts[:, 0] >= self.image_width) | (pts[:, 1] < 0) | (pts[:, 1] >= self.image_height)
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise ValueError(
                f"point {i} ({pts[i, 0]}, {pts[i, 1]}) outside {self.image_width}x{self.image_height} grid"
            )
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

        if self.boxes is not None:
            bx = np.asarray(self.boxes, dtype=np.float64)
            if bx.size == 0:
                bx = np.zeros((0, 2))
            if bx.ndim != 2 or bx.shape[1] != 2:
                raise ValueError(f"boxes must have shape (N, 2), got {bx.shape}")
            if len(bx) != len(pts):
                raise ValueError(f"{len(bx)} boxes for {len(pts)} points")
            if not np.all(np.isfinite(bx)) or np.any(bx <= 0):
                raise ValueError("box extents must be finite and positive")
            bx.setflags(write=False)
            object.__setattr__(self, "boxes", bx)

    def __len__(self):
        return len(self.points)

    @property
    def shape(self):
        return (self.image_height, self.image_width)

    def pixels(self) -> np.ndarray:
        """Integer ``(N, 2)`` pixel positions (x, y), rounding half up and clamping to the grid."""
        px = np.floor(self.points + 0.5).astype(np.int64)
        px[:, 0] = np.clip(px[:, 0], 0, self.image_width - 1)
        px[:, 1] = np.clip(px[:, 1], 0, self.image_height - 1)
        return px
