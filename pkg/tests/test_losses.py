import warnings

import numpy as np
import pytest

from holocgh._validation import DataError
from holocgh.losses import (
    SupervisionLoss,
    SupervisionSpec,
    fit_scale,
    loss_2p5d,
    loss_3d,
    loss_4d,
)
from holocgh.optics import OpticalConfig
from holocgh.quantization import quantize_relaxed


def small_cfg(rows, cols, frames=2, channels=1):
    lams = (520e-9, 638e-9, 450e-9)[:channels]
    return OpticalConfig(wavelengths=lams, slm_resolution=(cols, rows),
                         active_resolution=(cols, rows), half_depth=1e-3, wrp_distance=2e-3,
                         num_frames=frames)


def central_difference(fn, q, eps=1e-6):
    g = np.zeros_like(q)
    for idx in np.ndindex(q.shape):
        qp, qm = q.copy(), q.copy()
        qp[idx] += eps
        qm[idx] -= eps
        g[idx] = (fn(qp) - fn(qm)) / (2 * eps)
    return g


def check_gradient(spec, cfg, q, **kw):
    loss = SupervisionLoss(spec, cfg, dtype=np.float64, **kw)
    _, g, _ = loss.evaluate(q)
    fd = central_difference(lambda x: loss.evaluate(x, grad=False)[0], q)
    err = np.max(np.abs(g - fd))
    assert err <= 1e-4
    # the loss is normalized, so also hold the error small relative to the gradient
    assert err <= 1e-5 * np.max(np.abs(fd))
    return g


def spec_2p5d(rng, cfg, k=2):
    h, w = cfg.shape
    idx = rng.integers(0, k, (h, w))
    masks = (idx[None] == np.arange(k)[:, None, None]).astype(float)
    return SupervisionSpec("2.5d", rng.random((cfg.n_channels, h, w)),
                           np.linspace(1.5e-3, 2.5e-3, k), masks=masks)


def spec_3d(rng, cfg, k=2):
    h, w = cfg.shape
    return SupervisionSpec("3d", rng.random((cfg.n_channels, k, h, w)),
                           np.linspace(1.5e-3, 2.5e-3, k))


def spec_4d(rng, cfg, views=(3, 3), window=8):
    h, w = cfg.shape
    grid = (h // window, w // window)
    tgt = rng.random((cfg.n_channels, views[1], views[0]) + grid)
    return SupervisionSpec("4d", tgt, (cfg.wrp_distance,), n_views=views, window=window,
                           hop=window)


def test_gradient_2p5d():
    rng = np.random.default_rng(0)
    cfg = small_cfg(8, 8)
    check_gradient(spec_2p5d(rng, cfg), cfg, rng.random((1, 2, 8, 8)))


def test_gradient_2p5d_two_channels_fixed_scale():
    rng = np.random.default_rng(1)
    cfg = small_cfg(8, 8, channels=2)
    check_gradient(spec_2p5d(rng, cfg, k=3), cfg, rng.random((2, 2, 8, 8)), scale=0.7)


def test_gradient_3d():
    rng = np.random.default_rng(2)
    cfg = small_cfg(8, 8)
    check_gradient(spec_3d(rng, cfg, k=3), cfg, rng.random((1, 2, 8, 8)))


def test_gradient_4d():
    rng = np.random.default_rng(3)
    cfg = small_cfg(16, 16)
    check_gradient(spec_4d(rng, cfg), cfg, rng.random((1, 2, 16, 16)))


def test_gradient_through_soft_quantizer():
    rng = np.random.default_rng(4)
    cfg = small_cfg(8, 8)
    spec = spec_3d(rng, cfg)
    loss = SupervisionLoss(spec, cfg)
    a = rng.random((1, 2, 8, 8))

    def f(x):
        _, _, soft = quantize_relaxed(x, 0.7, seed=9, return_soft=True)
        return loss.evaluate(soft, grad=False)[0]

    _, dsoft, soft = quantize_relaxed(a, 0.7, seed=9, return_soft=True)
    g = loss.evaluate(soft)[1] * dsoft
    fd = central_difference(f, a)
    assert np.max(np.abs(g - fd)) <= 1e-4
    assert np.max(np.abs(g - fd)) <= 1e-5 * np.max(np.abs(fd))


def test_wrappers_check_mode():
    rng = np.random.default_rng(5)
    cfg = small_cfg(8, 8)
    q = rng.random((1, 2, 8, 8))
    l2, g2 = loss_2p5d(q, spec_2p5d(rng, cfg), cfg)
    l3, g3 = loss_3d(q, spec_3d(rng, cfg), cfg)
    assert g2.shape == g3.shape == q.shape and l2 > 0 and l3 > 0
    with pytest.raises(ValueError):
        loss_4d(q, spec_3d(rng, cfg), cfg)


def test_perfect_reconstruction():
    rng = np.random.default_rng(6)
    cfg = small_cfg(8, 8)
    q = rng.integers(0, 2, (1, 2, 8, 8)).astype(float)
    base = spec_3d(rng, cfg)
    amp = SupervisionLoss(base, cfg).amplitude(q)
    spec = SupervisionSpec("3d", amp, base.distances)
    loss, g, s = SupervisionLoss(spec, cfg).evaluate(q)
    assert loss == pytest.approx(0, abs=1e-20)
    assert np.max(np.abs(g)) < 1e-12
    assert s[0] == pytest.approx(1.0)


def test_zero_masks_give_zero_loss():
    rng = np.random.default_rng(7)
    cfg = small_cfg(8, 8)
    spec = SupervisionSpec("2.5d", rng.random((1, 8, 8)), (2e-3, 3e-3),
                           masks=np.zeros((2, 8, 8)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        loss, g, _ = SupervisionLoss(spec, cfg).evaluate(rng.random((1, 2, 8, 8)))
    assert loss == 0 and np.all(g == 0)


def test_3d_single_plane_equals_2p5d_all_ones():
    rng = np.random.default_rng(8)
    cfg = small_cfg(8, 8)
    tgt = rng.random((1, 8, 8))
    q = rng.random((1, 2, 8, 8))
    s2 = SupervisionSpec("2.5d", tgt, (2e-3,), masks=np.ones((1, 8, 8)))
    s3 = SupervisionSpec("3d", tgt[:, None], (2e-3,))
    l2, g2 = loss_2p5d(q, s2, cfg)
    l3, g3 = loss_3d(q, s3, cfg)
    assert abs(l2 - l3) <= 1e-12
    np.testing.assert_allclose(g2, g3, atol=1e-12)


def test_4d_zero_target():
    rng = np.random.default_rng(9)
    cfg = small_cfg(16, 16)
    spec = spec_4d(rng, cfg)
    spec = SupervisionSpec("4d", np.zeros_like(spec.target), spec.distances, window=8, hop=8)
    ev = SupervisionLoss(spec, cfg, scale=1.0)
    q = rng.random((1, 2, 16, 16))
    loss, _, _ = ev.evaluate(q)
    assert loss == pytest.approx(np.mean(ev.amplitude(q) ** 2), rel=1e-12)


def test_identical_frames_average():
    rng = np.random.default_rng(10)
    cfg = small_cfg(8, 8)
    spec = spec_3d(rng, cfg)
    ev = SupervisionLoss(spec, cfg)
    one = rng.integers(0, 2, (1, 1, 8, 8)).astype(float)
    many = np.repeat(one, 4, axis=1)
    np.testing.assert_allclose(ev.amplitude(many), ev.amplitude(one), atol=1e-12)


def test_doubling_target_doubles_scale():
    rng = np.random.default_rng(11)
    cfg = small_cfg(8, 8)
    spec = spec_3d(rng, cfg)
    q = rng.integers(0, 2, (1, 2, 8, 8)).astype(float)
    l1, _, s1 = SupervisionLoss(spec, cfg).evaluate(q)
    spec2 = SupervisionSpec("3d", 2 * spec.target, spec.distances)
    l2, _, s2 = SupervisionLoss(spec2, cfg).evaluate(q)
    assert s2[0] == pytest.approx(2 * s1[0], rel=1e-12)
    # relative to target energy the loss is unchanged
    assert abs(l2 / np.sum(spec2.target ** 2) - l1 / np.sum(spec.target ** 2)) <= 1e-9


def test_fit_scale_basics():
    rng = np.random.default_rng(12)
    r = rng.random((2, 5, 5))
    np.testing.assert_allclose(fit_scale(r, 2 * r), [2, 2])
    np.testing.assert_allclose(fit_scale(r, r), [1, 1])
    assert fit_scale(r[0], 3 * r[0]) == pytest.approx(3)
    with pytest.warns(RuntimeWarning):
        s = fit_scale(np.zeros((1, 3, 3)), np.ones((1, 3, 3)))
    assert s[0] == 1


def test_fit_scale_grid_scan():
    rng = np.random.default_rng(13)
    for _ in range(5):
        r, t = rng.random(50), rng.random(50)
        s = fit_scale(r, t)
        grid = np.linspace(0.0, 3.0, 3_000_001)  # step 1e-6, independent of s
        # expanded sum of squares, evaluated at every grid point
        mse = grid ** 2 * np.sum(r * r) - 2 * grid * np.sum(r * t) + np.sum(t * t)
        assert abs(grid[np.argmin(mse)] - s) <= 1e-6


def test_spec_validation():
    rng = np.random.default_rng(14)
    with pytest.raises(DataError):
        SupervisionSpec("2.5d", rng.random((1, 8, 8)), (1e-3,), masks=np.ones((1, 4, 4)))
    with pytest.raises(DataError):
        SupervisionSpec("2.5d", rng.random((1, 8, 8)), (1e-3, 2e-3), masks=np.ones((1, 8, 8)))
    with pytest.raises(DataError):
        SupervisionSpec("3d", rng.random((1, 3, 8, 8)), (1e-3, 2e-3))
    with pytest.raises(DataError):
        SupervisionSpec("4d", rng.random((1, 3, 3, 2, 2)), (1e-3,), n_views=(3, 2))
    with pytest.raises(ValueError):
        SupervisionSpec("5d", rng.random((1, 8, 8)), (1e-3,))


def test_frame_shape_mismatch():
    rng = np.random.default_rng(15)
    cfg = small_cfg(8, 8)
    ev = SupervisionLoss(spec_3d(rng, cfg), cfg)
    with pytest.raises(DataError):
        ev.evaluate(np.zeros((1, 2, 8, 9)))
    cfg4 = small_cfg(16, 16)
    spec = spec_4d(rng, cfg4)
    bad = SupervisionSpec("4d", rng.random((1, 3, 3, 3, 3)), spec.distances, window=8, hop=8)
    with pytest.raises(DataError):
        SupervisionLoss(bad, cfg4)
