import numpy as np
import pytest

from holocgh.optics import OpticalConfig, diopters_to_distance, display_geometry
from holocgh.propagation import propagate
from holocgh.stft import StftOperator
from holocgh.viewer import (
    SCE_COEFFICIENT,
    PupilGrid,
    PupilState,
    eyebox_energy_tiles,
    pupil_aperture,
    pupil_grid,
    retinal_image,
)

LAM = 520e-9


def desk_cfg(n=64, half_depth=1e-3):
    return OpticalConfig(wavelengths=(LAM,), slm_resolution=(n, n), active_resolution=(n, n),
                         half_depth=half_depth, wrp_distance=4e-3, num_frames=4)


def random_frames(cfg, seed=0):
    rng = np.random.default_rng(seed)
    h, w = cfg.shape
    return rng.integers(0, 2, (1, cfg.num_frames, h, w)).astype(np.uint8)


def metric_grid(n=201, half=2e-3):
    t = np.linspace(-half, half, n)
    return PupilGrid(t[None, :], t[:, None], 2.2e-3, 0.0)


def test_aperture_values():
    grid = metric_grid()
    # 1.5 mm radius, in units of the 2.2 mm eyebox, so the 1 mm sample lies inside
    state = PupilState(diameter=2 * 1.5e-3 / 2.2e-3, apodization="stiles-crawford")
    a = pupil_aperture(state, grid)
    c = 100
    assert a[c, c] == 1.0
    x = grid.x[0]
    j = np.argmin(np.abs(x - 1e-3))
    assert x[j] == pytest.approx(1e-3, abs=1e-12)
    assert a[c, j] == pytest.approx(10 ** (-SCE_COEFFICIENT * 1e-6))
    assert a[c, j] == pytest.approx(0.944, abs=5e-4)
    assert a[0, 0] == 0


def test_aperture_rotation_invariance():
    grid = metric_grid(n=101)
    state = PupilState(diameter=1.5, apodization="stiles-crawford")
    a = pupil_aperture(state, grid)
    np.testing.assert_allclose(a, a.T, atol=1e-12)
    np.testing.assert_allclose(a, a[::-1, ::-1], atol=1e-12)
    np.testing.assert_allclose(a, np.rot90(a), atol=1e-12)


def test_full_pupil_matches_plane_reconstruction():
    cfg = desk_cfg()
    frames = random_frames(cfg)
    for d in [0.0, cfg.d_wrp, cfg.d_ncp]:
        state = PupilState(center=(0, 0), diameter=2.0, focal_diopters=d)
        img = retinal_image(frames, cfg, state)
        z = diopters_to_distance(cfg, d)
        ref = np.mean(np.abs(propagate(frames[0].astype(float), cfg.pixel_pitch, LAM, z,
                                       sideband=True)) ** 2, axis=0)
        rms = np.sqrt(np.mean((img.intensity[0] - ref) ** 2)) / np.sqrt(np.mean(ref ** 2))
        assert rms < 0.02
        assert not img.vignetted


def point_field(cfg, y, x, d):
    # a single pixel has a flat spectrum, so every pupil position sees it equally
    obj = np.zeros(cfg.shape, dtype=complex)
    obj[y, x] = 1.0
    z = diopters_to_distance(cfg, d)
    return propagate(obj, cfg.pixel_pitch, LAM, -z, pad=True)


def centroid_x(img, rows, cols):
    win = img[rows, cols]
    xs = np.arange(cols.start, cols.stop)
    return float((win.sum(axis=0) * xs).sum() / win.sum())


def test_parallax_sign():
    cfg = desk_cfg(n=128, half_depth=3e-3)
    u = point_field(cfg, 40, 40, cfg.d_ncp) + point_field(cfg, 88, 88, cfg.d_wrp)
    frames = u[None, None]
    xs = {}
    for side in (-0.25, 0.25):
        state = PupilState(center=(side, 0.0), diameter=0.5)
        img = retinal_image(frames, cfg, state).intensity[0]
        near = centroid_x(img, slice(10, 70), slice(10, 70))
        wrp = centroid_x(img, slice(70, 110), slice(70, 110))
        xs[side] = (near, wrp)
    shift_l = xs[-0.25][0] - 40
    shift_r = xs[0.25][0] - 40
    assert np.sign(shift_l) == -np.sign(shift_r) != 0
    # geometric oracle: a layer dz beyond the WRP appears moved by -tan(u) dz / p
    eb = display_geometry(cfg).eyebox_size[0]
    dz = diopters_to_distance(cfg, cfg.d_ncp) - cfg.wrp_distance
    for side, shift in ((-0.25, shift_l), (0.25, shift_r)):
        ang = np.arcsin(side * eb / cfg.eyepiece_focal_length)
        expect = -np.tan(ang) * dz / cfg.pixel_pitch
        assert np.sign(shift) == np.sign(expect)
        assert shift == pytest.approx(expect, rel=0.25)
    # the in-focus WRP point does not move
    assert abs(xs[-0.25][1] - xs[0.25][1]) < 0.25


def test_sce_zero_coefficient_equals_diffraction():
    cfg = desk_cfg()
    frames = random_frames(cfg, 1)
    base = retinal_image(frames, cfg, PupilState(center=(0.1, 0.05), diameter=0.6))
    for p in (0.0, 1e-30):
        sce = retinal_image(frames, cfg, PupilState(center=(0.1, 0.05), diameter=0.6,
                                                    apodization="stiles-crawford",
                                                    sce_coefficient=p))
        assert np.max(np.abs(sce.intensity - base.intensity)) <= 1e-12 * base.intensity.max()


def test_vignetted_pupil():
    cfg = desk_cfg()
    img = retinal_image(random_frames(cfg), cfg, PupilState(center=(3.0, 0), diameter=0.3))
    assert img.vignetted and np.all(img.intensity == 0)


def test_monotone_aperture_and_bounds():
    cfg = desk_cfg()
    frames = random_frames(cfg, 2)
    total = np.mean(np.sum(frames[0].astype(float) ** 2, axis=(-2, -1)))
    energies = []
    for d in (0.1, 0.3, 0.6, 1.0, 2.0):
        img = retinal_image(frames, cfg, PupilState(center=(0.05, 0), diameter=d))
        assert np.all(img.intensity >= 0) and np.all(np.isfinite(img.intensity))
        assert img.intensity.sum() <= total * (1 + 1e-9)
        energies.append(img.collected_energy[0])
    assert np.all(np.diff(energies) >= -1e-9 * energies[-1])


def test_pupil_grid_pitch():
    cfg = desk_cfg()
    g = pupil_grid((64, 64), cfg.pixel_pitch, LAM, cfg)
    assert g.x[0, 1] - g.x[0, 0] == pytest.approx(LAM * cfg.eyepiece_focal_length / (64 * 8.2e-6))
    assert g.y_origin == pytest.approx(display_geometry(cfg).eyebox_size[1] / 2)


def test_tiles_single_plane_wave():
    cfg = desk_cfg(n=96)
    h, w = cfg.shape
    op = StftOperator((h, w), cfg.pixel_pitch, LAM, (3, 3), 16, 16)
    yy, xx = np.mgrid[:h, :w]
    for v, q in [(0, 0), (1, 2), (2, 1)]:
        u = np.exp(2j * np.pi * (op.fy[v] * yy + op.fx[q] * xx) * cfg.pixel_pitch)
        tiles = eyebox_energy_tiles(u[None, None], cfg, (3, 3), 16, 16)[0]
        assert tiles[v, q] == pytest.approx(1.0)
        assert np.delete(tiles.ravel(), v * 3 + q).max() <= 0.05


def test_tiles_zero_stack():
    cfg = desk_cfg()
    tiles = eyebox_energy_tiles(np.zeros((1, 2, 64, 64)), cfg, (3, 3), 16, 16)
    assert tiles.shape == (1, 3, 3) and np.all(tiles == 0)


def test_pupil_state_validation():
    with pytest.raises(ValueError):
        PupilState(diameter=0)
    with pytest.raises(ValueError):
        PupilState(apodization="gaussian")
    with pytest.raises(ValueError):
        PupilState(sce_coefficient=-1)
    assert PupilState(sce_coefficient=(1.0, 2.0, 3.0)).coefficient(2) == 3.0
