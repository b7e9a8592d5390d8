import os

import numpy as np
import pytest
from PIL import Image

from holocgh._validation import DataError
from holocgh.io.assets import load_lightfield, load_rgbd, save_lightfield
from holocgh.io.config import dump_config, load_config, parse_config
from holocgh.io.hologram import (
    HEADER,
    HologramFormatError,
    payload_size,
    read_hologram,
    write_hologram,
)
from holocgh.io.images import read_pfm, read_png, to_display, write_pfm, write_png
from holocgh.optics import OpticalConfig
from holocgh.targets import LightField


def test_hologram_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    path = tmp_path / "h.hbin"
    for _ in range(100):
        c, t = rng.integers(1, 4), rng.integers(1, 5)
        h, w = rng.integers(1, 20), rng.integers(1, 30)
        q = rng.integers(0, 2, (c, t, h, w)).astype(np.uint8)
        write_hologram(path, q)
        assert os.path.getsize(path) == HEADER.size + payload_size(w, h, t, c)
        back = read_hologram(path)
        assert back.dtype == np.uint8 and np.array_equal(back, q)


def test_hologram_size_formula():
    assert HEADER.size == 22
    assert payload_size(1600, 900, 24, 3) == 3 * 24 * 900 * 200
    assert payload_size(9, 2, 1, 1) == 4


def test_hologram_bit_order(tmp_path):
    q = np.zeros((1, 1, 1, 9), dtype=np.uint8)
    q[..., 0] = q[..., 8] = 1
    write_hologram(tmp_path / "b.hbin", q)
    data = (tmp_path / "b.hbin").read_bytes()
    assert data[:5] == b"HBIN1"
    assert data[HEADER.size:] == bytes([0b00000001, 0b00000001])


def test_hologram_errors(tmp_path):
    path = tmp_path / "h.hbin"
    write_hologram(path, np.ones((1, 2, 4, 4), dtype=np.uint8))
    data = path.read_bytes()
    (tmp_path / "magic.hbin").write_bytes(b"XBIN1" + data[5:])
    with pytest.raises(HologramFormatError, match="magic"):
        read_hologram(tmp_path / "magic.hbin")
    (tmp_path / "short.hbin").write_bytes(data[:-1])
    with pytest.raises(HologramFormatError, match="payload length"):
        read_hologram(tmp_path / "short.hbin")
    (tmp_path / "tiny.hbin").write_bytes(data[:10])
    with pytest.raises(HologramFormatError):
        read_hologram(tmp_path / "tiny.hbin")
    with pytest.raises(DataError):
        write_hologram(path, np.full((1, 1, 2, 2), 2))
    assert issubclass(HologramFormatError, DataError)


@pytest.mark.parametrize("little", [True, False])
@pytest.mark.parametrize("shape", [(5, 7), (3, 5, 7)])
def test_pfm_round_trip(tmp_path, little, shape):
    rng = np.random.default_rng(1)
    img = rng.standard_normal(shape).astype(np.float32)
    path = tmp_path / "x.pfm"
    write_pfm(path, img, little_endian=little)
    back = read_pfm(path)
    assert back.dtype == np.float32 and np.array_equal(back, img)


def test_pfm_against_opencv(tmp_path):
    cv2 = pytest.importorskip("cv2")
    rng = np.random.default_rng(2)
    img = rng.random((3, 6, 9)).astype(np.float32)
    path = str(tmp_path / "c.pfm")
    write_pfm(path, img)
    ref = cv2.imread(path, cv2.IMREAD_UNCHANGED)
    # OpenCV returns top row first in BGR order
    np.testing.assert_array_equal(ref[..., ::-1], np.moveaxis(img, 0, -1))
    gray = rng.random((4, 5)).astype(np.float32)
    cv2.imwrite(str(tmp_path / "g.pfm"), gray)
    np.testing.assert_array_equal(read_pfm(tmp_path / "g.pfm"), gray)


def test_pfm_errors(tmp_path):
    p = tmp_path / "bad.pfm"
    p.write_bytes(b"P6\n2 2\n-1.0\n" + bytes(16))
    with pytest.raises(DataError):
        read_pfm(p)
    p.write_bytes(b"Pf\n2 2\n-1.0\n" + bytes(8))
    with pytest.raises(DataError):
        read_pfm(p)


def test_png_gamma_only_on_export(tmp_path):
    lin = np.array([[0.0, 0.25], [0.5, 1.0]])
    path = tmp_path / "g.png"
    write_png(path, lin, gamma=2.2, bit_depth=16, peak=1.0)
    enc = read_png(path)
    np.testing.assert_allclose(enc, lin ** (1 / 2.2), atol=1 / 65535)
    write_png(path, lin, gamma=None, bit_depth=16)
    np.testing.assert_allclose(read_png(path), lin, atol=1 / 65535)
    assert np.array_equal(to_display(lin, gamma=1.0), lin)
    assert np.all(to_display(np.zeros((2, 2))) == 0)


def test_png_rgb_layout(tmp_path):
    img = np.zeros((3, 2, 4))
    img[0] = 1.0
    write_png(tmp_path / "c.png", img, gamma=None)
    with Image.open(tmp_path / "c.png") as im:
        assert im.size == (4, 2) and im.mode == "RGB"
    back = read_png(tmp_path / "c.png")
    assert back.shape == (3, 2, 4) and np.array_equal(back, img)


CONFIG = """
[optics]
wavelengths = 638e-9, 520e-9, 450e-9
slm_resolution = 64, 48
active_resolution = 64, 48
num_frames = 4
sideband = true

[supervision]
mode = 2.5d
image = img.png
depth = depth.png
depth_max = 3.0

[optimizer]
iterations = 10
seed = 2

[output]
directory = out
"""


def test_config_round_trip(tmp_path):
    for name in ("img.png", "depth.png"):
        write_png(tmp_path / name, np.ones((48, 64)), gamma=None)
    (tmp_path / "run.ini").write_text(CONFIG)
    run = load_config(tmp_path / "run.ini")
    assert run.optics.slm_resolution == (64, 48)
    assert run.optics.num_frames == 4
    assert run.supervision.image == str(tmp_path / "img.png")
    assert run.optimizer.iterations == 10 and run.optimizer.learning_rate is None
    assert run.output_dir == str(tmp_path / "out")
    text = dump_config(run)
    again = parse_config(text, "/elsewhere")
    assert again == run
    assert dump_config(again) == text


@pytest.mark.parametrize("text", [
    "[optics]\nnum_frames = four\n",
    "[optics]\nbogus = 1\n",
    "[optix]\n",
    "[optimizer]\niterations = 5\n",
    "[optics]\n[supervision]\nmode = 4d\nsource = rgbd\nimage = a\ndepth = b\n",
    "no section header\n",
])
def test_config_errors(text):
    with pytest.raises(DataError):
        parse_config(text)


def small_cfg():
    return OpticalConfig(wavelengths=(520e-9,), slm_resolution=(32, 32),
                         active_resolution=(32, 32))


def test_lightfield_directory(tmp_path):
    rng = np.random.default_rng(3)
    views = rng.random((1, 3, 3, 4, 4)) * 0.9
    save_lightfield(tmp_path, LightField(views, np.arange(3.0), np.arange(3.0), 1.0))
    lf = load_lightfield(tmp_path, small_cfg(), window=8, hop=8)
    np.testing.assert_allclose(lf.views, views, rtol=1e-6)
    assert lf.pitch == pytest.approx(8 * 8.2e-6)
    assert lf.angles_x[0] < 0 < lf.angles_x[-1]
    os.remove(tmp_path / "view_01_02.pfm")
    with pytest.raises(DataError, match=r"\(1, 2\)"):
        load_lightfield(tmp_path, small_cfg(), window=8, hop=8)
    with pytest.raises(DataError):
        load_lightfield(tmp_path / "nope", small_cfg())


def test_rgbd_load(tmp_path):
    amp = np.linspace(0, 1, 16).reshape(4, 4)
    write_png(tmp_path / "a.png", amp, gamma=None, bit_depth=16)
    write_png(tmp_path / "d.png", np.eye(4), gamma=None)
    t = load_rgbd(tmp_path / "a.png", tmp_path / "d.png", (0.5, 2.5))
    np.testing.assert_allclose(t.amplitude[0], amp, atol=1 / 65535)
    np.testing.assert_allclose(t.depth, 0.5 + 2 * np.eye(4))
    write_png(tmp_path / "d2.png", np.eye(5), gamma=None)
    with pytest.raises(DataError):
        load_rgbd(tmp_path / "a.png", tmp_path / "d2.png", (0, 1))
    with pytest.raises(DataError):
        load_rgbd(tmp_path / "a.png", tmp_path / "d.png", (2, 1))
