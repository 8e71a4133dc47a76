import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fidtloc import PointSet, SsimParams, issim_loss, mse_loss, ssim, total_loss
from fidtloc.losses import finite_difference_gradient, instance_windows, max_relative_error

L1, L2 = 1e-4, 9e-4


def loop_ssim(e, g):
    """Scalar-statistics SSIM written out element by element."""
    vals = [(float(a), float(b)) for a, b in zip(np.ravel(e), np.ravel(g))]
    n = len(vals)
    me = sum(a for a, _ in vals) / n
    mg = sum(b for _, b in vals) / n
    ve = sum((a - me) ** 2 for a, _ in vals) / n
    vg = sum((b - mg) ** 2 for _, b in vals) / n
    cv = sum((a - me) * (b - mg) for a, b in vals) / n
    return (2 * me * mg + L1) * (2 * cv + L2) / ((me * me + mg * mg + L1) * (ve + vg + L2))


def test_mse_examples(rng):
    g = rng.random((16, 16))
    assert mse_loss(g, g) == 0.0
    assert mse_loss(g + 0.1, g) == pytest.approx(0.01, abs=1e-15)
    e = rng.random((16, 16))
    acc = 0.0
    for r in range(16):
        for c in range(16):
            acc += (e[r, c] - g[r, c]) ** 2
    assert mse_loss(e, g) == pytest.approx(acc / 256, abs=1e-12)


def test_mse_shape_mismatch():
    with pytest.raises(ValueError):
        mse_loss(np.zeros((3, 3)), np.zeros((3, 4)))


def test_ssim_identical_and_constant(rng):
    a = rng.random((30, 30))
    assert ssim(a, a) == pytest.approx(1.0, abs=1e-9)
    assert ssim(np.zeros((5, 5)), np.zeros((5, 5))) == 1.0


def test_ssim_anticorrelated_negative(rng):
    g = rng.standard_normal((10, 10))
    g -= g.mean()
    assert ssim(-g, g) < 0


def test_ssim_rejects_degenerate():
    with pytest.raises(ValueError):
        ssim(np.zeros((1, 1)), np.zeros((1, 1)))
    with pytest.raises(ValueError):
        ssim(np.zeros((2, 2)), np.zeros((2, 3)))


def test_ssim_matches_loop_oracle(rng):
    for _ in range(10):
        e, g = rng.random((7, 9)), rng.random((7, 9))
        assert ssim(e, g) == pytest.approx(loop_ssim(e, g), abs=1e-12)


@given(st.integers(0, 2**32 - 1))
def test_ssim_symmetric_and_bounded(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.random((6, 6)), rng.random((6, 6))
    assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-15)
    assert -1 <= ssim(a, b) <= 1


def test_windows_centered_and_clipped():
    ps = PointSet(64, 64, [(32, 32), (0, 0), (63, 10)])
    (r0, c0), (r1, c1), (r2, c2) = instance_windows(ps, 30)
    assert (r0.start, r0.stop, c0.start, c0.stop) == (17, 47, 17, 47)
    assert (r1.start, r1.stop, c1.start, c1.stop) == (0, 15, 0, 15)
    assert (r2.start, r2.stop, c2.start, c2.stop) == (0, 25, 48, 64)


def test_issim_identical_zero(rng):
    g = rng.random((40, 40))
    assert issim_loss(g, g, PointSet(40, 40, [(5, 5), (30, 20)])) == pytest.approx(0.0, abs=1e-12)


def test_issim_center_window_oracle(rng):
    e, g = rng.random((64, 64)), rng.random((64, 64))
    expected = 1 - loop_ssim(e[17:47, 17:47], g[17:47, 17:47])
    assert issim_loss(e, g, PointSet(64, 64, [(32, 32)])) == pytest.approx(expected, abs=1e-9)


def test_issim_blind_to_background(rng):
    g = rng.random((80, 80))
    ann = PointSet(80, 80, [(10, 10), (60, 60)])
    bump = np.zeros_like(g)
    bump[40:45, :] = rng.random((5, 80))  # rows 40..44 lie outside both windows
    assert issim_loss(g + bump, g, ann) == issim_loss(g, g, ann) == pytest.approx(0.0, abs=1e-12)
    e = rng.random((80, 80))
    assert issim_loss(e + bump, g, ann) == issim_loss(e, g, ann)


def test_issim_requires_annotations():
    with pytest.raises(ValueError):
        issim_loss(np.zeros((5, 5)), np.zeros((5, 5)), PointSet(5, 5, []))


def test_total_negative_sample_skips_issim(rng):
    e, g = rng.random((8, 8)), rng.random((8, 8))
    rep = total_loss(e, g, PointSet(8, 8, []), want_gradient=True)
    assert rep.issim is None
    assert rep.total == rep.mse == mse_loss(e, g)
    np.testing.assert_allclose(rep.gradient, 2 * (e - g) / 64)


def test_total_at_minimum(rng):
    g = rng.random((32, 32))
    rep = total_loss(g, g, PointSet(32, 32, [(3, 4), (20, 25)]), want_gradient=True)
    assert rep.mse == 0 and rep.issim == pytest.approx(0, abs=1e-12)
    assert rep.total == rep.mse + rep.issim
    assert np.max(np.abs(rep.gradient)) < 1e-12


def test_gradient_matches_finite_differences(rng):
    for _ in range(3):
        e, g = rng.random((32, 32)), rng.random((32, 32))
        ann = PointSet(32, 32, rng.uniform(0, 31, (3, 2)))
        rep = total_loss(e, g, ann, want_gradient=True)
        fd = finite_difference_gradient(e, g, ann, step=1e-4)
        assert max_relative_error(rep.gradient, fd) < 1e-4


def test_gradient_locality_disjoint_windows(rng):
    e, g = rng.random((100, 100)), rng.random((100, 100))
    pts = [(15, 15), (80, 70)]
    both = total_loss(e, g, PointSet(100, 100, pts), want_gradient=True).gradient
    mse_grad = 2 * (e - g) / e.size
    for p in pts:
        single = total_loss(e, g, PointSet(100, 100, [p]), want_gradient=True).gradient
        (win,) = instance_windows(PointSet(100, 100, [p]), 30)
        # with two instances each window carries half the weight of the single-instance case
        np.testing.assert_allclose(both[win] - mse_grad[win], (single[win] - mse_grad[win]) / 2, atol=1e-15)


def test_gradient_outside_windows_is_mse_only(rng):
    e, g = rng.random((70, 70)), rng.random((70, 70))
    ann = PointSet(70, 70, [(10, 10), (50, 55)])
    grad = total_loss(e, g, ann, want_gradient=True).gradient
    mask = np.zeros((70, 70), dtype=bool)
    for win in instance_windows(ann, 30):
        mask[win] = True
    np.testing.assert_array_equal(grad[~mask], (2 * (e - g) / e.size)[~mask])


def test_overlapping_windows_accumulate(rng):
    e, g = rng.random((40, 40)), rng.random((40, 40))
    ann = PointSet(40, 40, [(18, 18), (22, 20)])
    rep = total_loss(e, g, ann, want_gradient=True)
    pix = [(19, 20), (0, 0), (5, 33)]
    fd = finite_difference_gradient(e, g, ann, pixels=pix)
    for r, c in pix:
        assert rep.gradient[r, c] == pytest.approx(fd[r, c], rel=1e-5)


@given(st.integers(0, 2**32 - 1))
def test_total_nonnegative_and_issim_range(seed):
    rng = np.random.default_rng(seed)
    e, g = rng.random((20, 20)) * 3 - 1, rng.random((20, 20))
    ann = PointSet(20, 20, rng.uniform(0, 19, (int(rng.integers(1, 5)), 2)))
    rep = total_loss(e, g, ann)
    assert 0 <= rep.issim <= 2
    assert rep.total >= 0
    assert math.isclose(rep.total, rep.mse + rep.issim)
