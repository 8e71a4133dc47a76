"""Counting and localization metrics.

Localization pairs predictions with ground truth one-to-one under a distance
threshold. The default solver maximises the number of matched pairs and,
among maximum matchings, minimises the total matched distance.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .types import PointSet

MODES = ("fixed", "box_small", "box_large", "sweep")
SCENE_LABELS = ("S0", "S1", "S2", "S3", "S4")


@dataclass(frozen=True)
class SigmaPolicy:
    mode: str = "fixed"
    fixed_sigma: float = 4.0
    sweep_range: tuple = (1, 100)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown sigma mode {self.mode!r}; expected one of {MODES}")
        if not self.fixed_sigma > 0:
            raise ValueError(f"fixed_sigma must be positive, got {self.fixed_sigma}")
        lo, hi = self.sweep_range
        if int(lo) != lo or int(hi) != hi or lo > hi:
            raise ValueError(f"sweep_range must be a non-empty integer range, got {self.sweep_range}")

    @classmethod
    def box_small(cls):
        return cls(mode="box_small")

    @classmethod
    def box_large(cls):
        return cls(mode="box_large")

    @classmethod
    def sweep(cls, lo=1, hi=100):
        return cls(mode="sweep", sweep_range=(lo, hi))

    def thresholds(self, truth: PointSet) -> np.ndarray:
        """Per-ground-truth matching radius (not defined for sweep mode)."""
        n = len(truth)
        if self.mode == "fixed":
            return np.full(n, float(self.fixed_sigma))
        if self.mode == "sweep":
            raise ValueError("sweep policies have no single threshold; use evaluate_localization_sweep")
        if truth.boxes is None:
            raise ValueError(f"sigma mode {self.mode!r} needs ground-truth boxes")
        w, h = truth.boxes[:, 0], truth.boxes[:, 1]
        if self.mode == "box_small":
            return np.minimum(w, h) / 2
        return np.hypot(w, h) / 2


def precision_recall_f1(tp, fp, fn):
    """Ratios with explicit empty-set conventions.

    Nothing predicted and nothing to find scores 1/1/1. Any other 0/0 ratio is
    reported as 0.
    """
    if tp == 0 and fp == 0 and fn == 0:
        return 1.0, 1.0, 1.0
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


@dataclass
class MatchReport:
    true_positives: int
    false_positives: int
    false_negatives: int
    pairs: list = field(default_factory=list)  # (pred_index, gt_index, distance)

    @property
    def precision(self):
        return precision_recall_f1(self.true_positives, self.false_positives, self.false_negatives)[0]

    @property
    def recall(self):
        return precision_recall_f1(self.true_positives, self.false_positives, self.false_negatives)[1]

    @property
    def f1(self):
        return precision_recall_f1(self.true_positives, self.false_positives, self.false_negatives)[2]


def _coords(points):
    if isinstance(points, PointSet):
        return points.points
    arr = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if np.any(arr < 0):
        raise ValueError("negative coordinates")
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite coordinates")
    return arr


def _candidate_pairs(pred, gt, sigma):
    """All (pred, gt, distance) with distance <= sigma[gt], sorted for determinism."""
    if len(pred) == 0 or len(gt) == 0:
        return np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0)
    pairs = cKDTree(gt).query_ball_tree(cKDTree(pred), r=float(sigma.max()) + 1e-9)
    gi = np.fromiter((g for g, ps in enumerate(pairs) for _ in ps), dtype=np.int64)
    pi = np.fromiter((p for ps in pairs for p in ps), dtype=np.int64)
    d = np.hypot(*(pred[pi] - gt[gi]).T) if len(pi) else np.zeros(0)
    ok = d <= sigma[gi]
    pi, gi, d = pi[ok], gi[ok], d[ok]
    order = np.lexsort((gi, pi, d))
    return pi[order], gi[order], d[order]


def _greedy(pi, gi, d):
    used_p, used_g, out = set(), set(), []
    for p, g, dist in zip(pi.tolist(), gi.tolist(), d.tolist()):
        if p not in used_p and g not in used_g:
            used_p.add(p)
            used_g.add(g)
            out.append((p, g, dist))
    return out


def _optimal(pi, gi, d, n_pred):
    if len(pi) == 0:
        return []
    # solve each connected component of the candidate graph separately
    n_gt = int(gi.max()) + 1
    graph = coo_matrix((np.ones(len(pi)), (pi, n_pred + gi)), shape=(n_pred + n_gt,) * 2)
    _, comp = connected_components(graph, directed=False)
    out = []
    pair_comp = comp[pi]
    for c in np.unique(pair_comp):
        sel = pair_comp == c
        cp, cg, cd = pi[sel], gi[sel], d[sel]
        rows, ri = np.unique(cp, return_inverse=True)
        cols, ci = np.unique(cg, return_inverse=True)
        big = float(cd.sum()) + 1.0
        cost = np.zeros((len(rows), len(cols)))
        cost[ri, ci] = cd - big
        dist = np.full(cost.shape, np.nan)
        dist[ri, ci] = cd
        r, k = linear_sum_assignment(cost)
        for a, b in zip(r, k):
            if not np.isnan(dist[a, b]):
                out.append((int(rows[a]), int(cols[b]), float(dist[a, b])))
    out.sort()
    return out


def match_points(predicted, truth: PointSet, policy: SigmaPolicy = SigmaPolicy(), matching="optimal") -> MatchReport:
    """One-to-one matching of predictions to ground truth under ``policy``.

    ``matching`` is ``"optimal"`` (maximum cardinality, then minimum total
    distance) or ``"greedy"`` (closest available pair first).
    """
    pred = _coords(predicted)
    gt = _coords(truth)
    sigma = policy.thresholds(truth)
    pi, gi, d = _candidate_pairs(pred, gt, sigma)
    if matching == "optimal":
        pairs = _optimal(pi, gi, d, len(pred))
    elif matching == "greedy":
        pairs = _greedy(pi, gi, d)
    else:
        raise ValueError(f"unknown matching {matching!r}")
    tp = len(pairs)
    return MatchReport(tp, len(pred) - tp, len(gt) - tp, pairs)


def evaluate_localization_sweep(predicted, truth: PointSet, sweep_range=(1, 100), matching="optimal"):
    """Average precision and recall over integer thresholds; F1 of the averages."""
    lo, hi = sweep_range
    ps, rs = [], []
    for s in range(int(lo), int(hi) + 1):
        rep = match_points(predicted, truth, SigmaPolicy(fixed_sigma=s), matching)
        ps.append(rep.precision)
        rs.append(rep.recall)
    p, r = float(np.mean(ps)), float(np.mean(rs))
    return p, r, (2 * p * r / (p + r) if p + r else 0.0)


def counting_errors(predicted_counts, truth_counts):
    """``(MAE, MSE)`` where MSE is the root of the mean squared error."""
    p = np.asarray(predicted_counts, dtype=np.float64)
    g = np.asarray(truth_counts, dtype=np.float64)
    if p.shape != g.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {g.shape}")
    if p.size == 0:
        raise ValueError("no counts given")
    err = p - g
    return float(np.mean(np.abs(err))), float(np.sqrt(np.mean(err ** 2)))


def scene_bucket(truth_count) -> str:
    """Density category: S0 = 0, S1 = (0, 100], S2 = (100, 500], S3 = (500, 5000], S4 = > 5000."""
    if truth_count < 0:
        raise ValueError(f"negative count {truth_count}")
    if truth_count == 0:
        return "S0"
    if truth_count <= 100:
        return "S1"
    if truth_count <= 500:
        return "S2"
    if truth_count <= 5000:
        return "S3"
    return "S4"


def scene_level_report(per_image):
    """Per-bucket MAE and their unweighted average.

    ``per_image`` holds ``(predicted, truth)`` or ``(predicted, truth, label)``
    tuples; missing labels come from :func:`scene_bucket`. Buckets with no
    images map to None and are left out of ``"avg"``.
    """
    rows = list(per_image)
    if not rows:
        raise ValueError("no images given")
    errs = {lab: [] for lab in SCENE_LABELS}
    for row in rows:
        pred, truth = row[0], row[1]
        label = row[2] if len(row) > 2 and row[2] is not None else scene_bucket(truth)
        if label not in errs:
            raise ValueError(f"unknown scene label {label!r}")
        errs[label].append(abs(pred - truth))
    out = {lab: (float(np.mean(v)) if v else None) for lab, v in errs.items()}
    filled = [v for v in out.values() if v is not None]
    out["avg"] = float(np.mean(filled))
    return out
