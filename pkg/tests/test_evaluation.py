import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fidtloc import (
    PointSet,
    SigmaPolicy,
    counting_errors,
    evaluate_localization_sweep,
    match_points,
    scene_bucket,
    scene_level_report,
)
from fidtloc.evaluation import precision_recall_f1


def exhaustive_match(pred, gt, sigma):
    """(max matched pairs, min total distance among maximum matchings) by enumeration."""
    pred, gt = np.asarray(pred, float).reshape(-1, 2), np.asarray(gt, float).reshape(-1, 2)
    if len(pred) == 0 or len(gt) == 0:
        return 0, 0.0
    swap = len(pred) > len(gt)
    a, b = (gt, pred) if swap else (pred, gt)
    d = np.hypot(a[:, None, 0] - b[None, :, 0], a[:, None, 1] - b[None, :, 1])
    sig = np.asarray(sigma, float)
    allowed = d <= (sig[None, :] if not swap else sig[:, None])
    best = (0, 0.0)
    for perm in itertools.permutations(range(len(b)), len(a)):
        ok = allowed[np.arange(len(a)), perm]
        cand = (int(ok.sum()), float(d[np.arange(len(a)), perm][ok].sum()))
        if cand[0] > best[0] or (cand[0] == best[0] and cand[1] < best[1]):
            best = cand
    return best


def random_instance(rng, max_pts=8, side=30):
    n_p, n_g = int(rng.integers(0, max_pts + 1)), int(rng.integers(0, max_pts + 1))
    pred = rng.integers(0, side, (n_p, 2)).astype(float)
    gt = PointSet(side, side, rng.integers(0, side, (n_g, 2)).astype(float))
    return pred, gt


def test_identical_sets_perfect(rng):
    gt = PointSet(50, 50, rng.uniform(0, 49, (10, 2)))
    rep = match_points(gt, gt, SigmaPolicy(fixed_sigma=4))
    assert (rep.precision, rep.recall, rep.f1) == (1.0, 1.0, 1.0)
    assert all(d == 0 for _, _, d in rep.pairs)


def test_two_point_worked_example():
    rep = match_points(PointSet(64, 64, [(1, 0), (50, 50)]), PointSet(64, 64, [(0, 0), (10, 10)]), SigmaPolicy(fixed_sigma=4))
    assert (rep.true_positives, rep.false_positives, rep.false_negatives) == (1, 1, 1)
    assert (rep.precision, rep.recall, rep.f1) == (0.5, 0.5, 0.5)
    assert rep.pairs == [(0, 0, 1.0)]


def test_empty_conventions():
    empty = PointSet(10, 10, [])
    full = PointSet(10, 10, [(1, 1)])
    rep = match_points(empty, empty)
    assert (rep.precision, rep.recall, rep.f1) == (1.0, 1.0, 1.0)
    rep = match_points(empty, full)
    assert (rep.false_negatives, rep.precision, rep.recall, rep.f1) == (1, 0.0, 0.0, 0.0)
    rep = match_points(full, empty)
    assert (rep.false_positives, rep.precision, rep.recall, rep.f1) == (1, 0.0, 0.0, 0.0)
    assert precision_recall_f1(0, 0, 0) == (1.0, 1.0, 1.0)


def test_optimal_beats_greedy_on_contested_pair():
    # greedy grabs the closest pair and strands the other ground truth point
    gt = PointSet(20, 20, [(0, 0), (4, 0)])
    pred = [(3, 0), (7, 0)]
    assert match_points(pred, gt, SigmaPolicy(fixed_sigma=3.5), "optimal").true_positives == 2
    assert match_points(pred, gt, SigmaPolicy(fixed_sigma=3.5), "greedy").true_positives == 1


def test_box_modes():
    gt = PointSet(100, 100, [(10, 10), (50, 50)], boxes=[(6, 8), (20, 20)])
    pred = [(14, 10), (50, 62)]
    small = match_points(pred, gt, SigmaPolicy.box_small())  # sigma 3 and 10
    large = match_points(pred, gt, SigmaPolicy.box_large())  # sigma 5 and 14.14
    assert small.true_positives == 0
    assert large.true_positives == 2
    with pytest.raises(ValueError):
        match_points(pred, PointSet(100, 100, [(1, 1)]), SigmaPolicy.box_small())


def test_per_gt_sigma_governs():
    gt = PointSet(100, 100, [(0, 0), (30, 0)], boxes=[(2, 2), (38, 38)])
    # 10 px from gt 0 (sigma 1) and 20 px from gt 1 (sigma 19): no match either way
    assert match_points([(10, 0)], gt, SigmaPolicy.box_small()).pairs == []
    assert match_points([(12, 0)], gt, SigmaPolicy.box_small()).pairs == [(0, 1, 18.0)]


def test_policy_validation():
    with pytest.raises(ValueError):
        SigmaPolicy(mode="bogus")
    with pytest.raises(ValueError):
        SigmaPolicy(fixed_sigma=0)
    with pytest.raises(ValueError):
        SigmaPolicy(mode="sweep", sweep_range=(5, 4))
    with pytest.raises(ValueError):
        match_points([(-1, 0)], PointSet(5, 5, [(1, 1)]))
    with pytest.raises(ValueError):
        match_points([(1, 0)], PointSet(5, 5, [(1, 1)]), matching="nearest")


def test_against_exhaustive_oracle(rng):
    for _ in range(150):
        pred, gt = random_instance(rng)
        sigma = float(rng.integers(1, 12))
        rep = match_points(pred, gt, SigmaPolicy(fixed_sigma=sigma))
        tp, dist = exhaustive_match(pred, gt.points, np.full(len(gt), sigma))
        assert rep.true_positives == tp
        assert sum(d for _, _, d in rep.pairs) == pytest.approx(dist, abs=1e-9)


def test_box_mode_against_oracle(rng):
    for _ in range(60):
        pred, gt = random_instance(rng)
        boxes = rng.uniform(1, 20, (len(gt), 2))
        gt = PointSet(30, 30, gt.points, boxes=boxes)
        rep = match_points(pred, gt, SigmaPolicy.box_large())
        tp, _ = exhaustive_match(pred, gt.points, np.hypot(boxes[:, 0], boxes[:, 1]) / 2)
        assert rep.true_positives == tp


@given(st.integers(0, 2**32 - 1), st.sampled_from(["optimal", "greedy"]))
def test_one_to_one_and_within_threshold(seed, matching):
    rng = np.random.default_rng(seed)
    pred, gt = random_instance(rng, max_pts=30)
    sigma = float(rng.uniform(0.5, 10))
    rep = match_points(pred, gt, SigmaPolicy(fixed_sigma=sigma), matching)
    ps = [p for p, _, _ in rep.pairs]
    gs = [g for _, g, _ in rep.pairs]
    assert len(set(ps)) == len(ps) and len(set(gs)) == len(gs)
    assert all(d <= sigma for _, _, d in rep.pairs)
    assert rep.true_positives + rep.false_positives == len(pred)
    assert rep.true_positives + rep.false_negatives == len(gt)


@given(st.integers(0, 2**32 - 1))
def test_threshold_monotone(seed):
    rng = np.random.default_rng(seed)
    pred, gt = random_instance(rng, max_pts=15)
    tps = [match_points(pred, gt, SigmaPolicy(fixed_sigma=s)).true_positives for s in range(1, 21)]
    assert tps == sorted(tps)


def test_sweep_examples():
    gt = PointSet(200, 200, [(10, 10), (100, 150)])
    assert evaluate_localization_sweep(gt, gt) == (1.0, 1.0, 1.0)
    one = PointSet(200, 200, [(0, 0)])
    p, r, f = evaluate_localization_sweep([(50.5, 0)], one)
    assert (p, r) == (0.5, 0.5) and f == pytest.approx(0.5)
    assert evaluate_localization_sweep([(199, 199)], one) == (0.0, 0.0, 0.0)


def test_counting_errors():
    assert counting_errors([3, 4], [3, 4]) == (0.0, 0.0)
    mae, mse = counting_errors([10, 20], [12, 16])
    assert mae == 3.0 and abs(mse - np.sqrt(10)) < 1e-12
    assert counting_errors([0], [5]) == (5.0, 5.0)
    with pytest.raises(ValueError):
        counting_errors([1, 2], [1])
    with pytest.raises(ValueError):
        counting_errors([], [])


@pytest.mark.parametrize("n, label", [(0, "S0"), (1, "S1"), (100, "S1"), (101, "S2"), (500, "S2"),
                                      (501, "S3"), (5000, "S3"), (5001, "S4")])
def test_scene_buckets(n, label):
    assert scene_bucket(n) == label


def test_scene_report():
    rows = [(12, 10), (7, 10), (60, 50)]
    rep = scene_level_report(rows)
    assert rep["S1"] == counting_errors([12, 7, 60], [10, 10, 50])[0]
    assert rep["avg"] == rep["S1"] and rep["S0"] is None
    rep = scene_level_report([(2, 0), (204, 200), (196, 200)])
    assert rep["S0"] == 2 and rep["S2"] == 4 and rep["avg"] == 3
    assert scene_level_report([(5, 50, "S3")])["S3"] == 45
    with pytest.raises(ValueError):
        scene_level_report([])
