"""MSE + independent-SSIM objective and its gradient w.r.t. the estimate.

SSIM here uses one set of scalar statistics per patch (population variance
and covariance), not a sliding Gaussian window.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import PointSet, as_map


@dataclass(frozen=True)
class SsimParams:
    lambda1: float = 1e-4
    lambda2: float = 9e-4
    window: int = 30

    def __post_init__(self):
        if not (self.lambda1 > 0 and self.lambda2 > 0):
            raise ValueError("stabilizers must be positive")
        if self.window < 2:
            raise ValueError(f"window must be >= 2, got {self.window}")


@dataclass
class LossReport:
    mse: float
    issim: float | None  # None when the I-SSIM term was skipped (no annotations)
    gradient: np.ndarray | None = None

    @property
    def total(self) -> float:
        return self.mse + (self.issim or 0.0)


def _pair(estimated, truth):
    e = as_map(estimated, "estimated")
    g = as_map(truth, "truth")
    if e.shape != g.shape:
        raise ValueError(f"shape mismatch: {e.shape} vs {g.shape}")
    return e, g


def mse_loss(estimated, truth) -> float:
    e, g = _pair(estimated, truth)
    return float(np.mean((e - g) ** 2))


def _ssim_terms(e, g, params):
    n = e.size
    mu_e = e.sum() / n
    mu_g = g.sum() / n
    de = e - mu_e
    dg = g - mu_g
    var_e = (de * de).sum() / n
    var_g = (dg * dg).sum() / n
    cov = (de * dg).sum() / n
    a1 = 2 * mu_e * mu_g + params.lambda1
    a2 = 2 * cov + params.lambda2
    b1 = mu_e * mu_e + mu_g * mu_g + params.lambda1
    b2 = var_e + var_g + params.lambda2
    return a1, a2, b1, b2, mu_e, mu_g, de, dg


def ssim(estimated_patch, truth_patch, params: SsimParams = SsimParams()) -> float:
    e, g = _pair(estimated_patch, truth_patch)
    if e.size < 2:
        raise ValueError("SSIM needs at least 2 pixels")
    return _ssim_value(e, g, params)


def _ssim_value(e, g, params):
    a1, a2, b1, b2, *_ = _ssim_terms(e, g, params)
    return float(a1 * a2 / (b1 * b2))


def _ssim_grad(e, g, params):
    """SSIM of a patch and d SSIM / d e."""
    n = e.size
    a1, a2, b1, b2, mu_e, mu_g, de, dg = _ssim_terms(e, g, params)
    s = a1 * a2 / (b1 * b2)
    grad = (2 / n) * (mu_g * a2 / (b1 * b2) + a1 * dg / (b1 * b2) - s * (mu_e / b1 + de / b2))
    return s, grad


def instance_windows(annotations: PointSet, window):
    """Row/column slices of the ``window``-sided region around each rounded point, clipped to the image."""
    lo = window // 2
    h, w = annotations.shape
    out = []
    for x, y in annotations.pixels():
        r0, c0 = y - lo, x - lo
        out.append((slice(max(r0, 0), min(r0 + window, h)), slice(max(c0, 0), min(c0 + window, w))))
    return out


def _check_annotations(e, annotations):
    if annotations.shape != e.shape:
        raise ValueError(f"annotation grid {annotations.shape} does not match map {e.shape}")


def issim_loss(estimated, truth, annotations: PointSet, params: SsimParams = SsimParams()) -> float:
    """Mean of ``1 - SSIM`` over the instance window of every annotation."""
    e, g = _pair(estimated, truth)
    _check_annotations(e, annotations)
    if len(annotations) == 0:
        raise ValueError("I-SSIM is undefined without annotations")
    vals = [1.0 - _ssim_value(e[win], g[win], params) for win in instance_windows(annotations, params.window)]
    return float(np.mean(vals))


def total_loss(estimated, truth, annotations: PointSet, params: SsimParams = SsimParams(),
               want_gradient=False) -> LossReport:
    """MSE plus I-SSIM; the I-SSIM term is skipped for negative samples.

    With ``want_gradient`` the report carries d total / d estimated.
    """
    e, g = _pair(estimated, truth)
    _check_annotations(e, annotations)
    diff = e - g
    mse = float(np.mean(diff ** 2))
    grad = 2.0 * diff / e.size if want_gradient else None
    if len(annotations) == 0:
        return LossReport(mse=mse, issim=None, gradient=grad)

    windows = instance_windows(annotations, params.window)
    n = len(windows)
    losses = []
    for win in windows:
        pe, pg = e[win], g[win]
        if want_gradient:
            s, gs = _ssim_grad(pe, pg, params)
            grad[win] -= gs / n
        else:
            s = _ssim_value(pe, pg, params)
        losses.append(1.0 - s)
    return LossReport(mse=mse, issim=float(np.mean(losses)), gradient=grad)


def finite_difference_gradient(estimated, truth, annotations: PointSet, params: SsimParams = SsimParams(),
                               step=1e-4, pixels=None):
    """Central differences of the total loss; ``pixels`` optionally restricts to ``(row, col)`` pairs."""
    e, g = _pair(estimated, truth)
    e = e.copy()
    if pixels is None:
        pixels = [(r, c) for r in range(e.shape[0]) for c in range(e.shape[1])]
    out = np.full(e.shape, np.nan)
    for r, c in pixels:
        old = e[r, c]
        e[r, c] = old + step
        up = total_loss(e, g, annotations, params).total
        e[r, c] = old - step
        down = total_loss(e, g, annotations, params).total
        e[r, c] = old
        out[r, c] = (up - down) / (2 * step)
    return out


def max_relative_error(analytic, numeric, floor=1e-8):
    """Largest ``|a - n| / max(|a|, |n|)`` over entries where ``|a| > floor`` and ``n`` was computed."""
    a = np.asarray(analytic)
    nm = np.asarray(numeric)
    sel = (np.abs(a) > floor) & np.isfinite(nm)
    if not np.any(sel):
        return 0.0
    a, nm = a[sel], nm[sel]
    return float(np.max(np.abs(a - nm) / np.maximum(np.abs(a), np.abs(nm))))
