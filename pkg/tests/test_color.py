"""BT.601 full-range conversion tests."""
import numpy as np
import pytest

from krawtex.color import YCbCrImage, rgb_to_ycbcr, ycbcr_to_rgb
from krawtex.image import PlanarImage


def rgb(r, g, b):
    return PlanarImage(
        channels=np.array([[[r]], [[g]], [[b]]], dtype=np.float64), colorspace="rgb"
    )


def test_black():
    out = rgb_to_ycbcr(rgb(0, 0, 0))
    assert out.y[0, 0] == pytest.approx(0.0, abs=1e-12)
    assert out.cb[0, 0] == pytest.approx(0.5, abs=1e-12)
    assert out.cr[0, 0] == pytest.approx(0.5, abs=1e-12)


def test_white():
    out = rgb_to_ycbcr(rgb(1, 1, 1))
    assert out.y[0, 0] == pytest.approx(1.0, abs=1e-9)
    assert out.cb[0, 0] == pytest.approx(0.5, abs=1e-6)
    assert out.cr[0, 0] == pytest.approx(0.5, abs=1e-6)


def test_gray_axis():
    for v in (0.1, 0.25, 0.5, 0.9):
        out = rgb_to_ycbcr(rgb(v, v, v))
        assert out.y[0, 0] == pytest.approx(v, abs=1e-9)
        assert out.cb[0, 0] == pytest.approx(0.5, abs=1e-6)
        assert out.cr[0, 0] == pytest.approx(0.5, abs=1e-6)
    back = ycbcr_to_rgb(
        YCbCrImage(y=np.array([[0.5]]), cb=np.array([[0.5]]), cr=np.array([[0.5]]))
    )
    np.testing.assert_allclose(back.channels[:, 0, 0], 0.5, atol=1e-9)


def test_roundtrip_within_two_255ths():
    rng = np.random.default_rng(5)
    image = PlanarImage(channels=rng.random((3, 17, 23)), colorspace="rgb")
    back = ycbcr_to_rgb(rgb_to_ycbcr(image))
    assert np.max(np.abs(back.channels - image.channels)) <= 2.0 / 255.0


def test_out_of_gamut_clamps():
    out = ycbcr_to_rgb(
        YCbCrImage(y=np.array([[1.0]]), cb=np.array([[1.0]]), cr=np.array([[1.0]]))
    )
    assert np.all(out.channels >= 0.0)
    assert np.all(out.channels <= 1.0)


def test_luma_replacement_keeps_chroma():
    rng = np.random.default_rng(6)
    image = PlanarImage(channels=rng.random((3, 9, 9)), colorspace="rgb")
    planes = rgb_to_ycbcr(image)
    replaced = YCbCrImage(y=np.clip(planes.y * 0.5, 0, 1), cb=planes.cb, cr=planes.cr)
    assert replaced.cb is planes.cb
    assert replaced.cr is planes.cr
    np.testing.assert_array_equal(replaced.cb, planes.cb)


def test_wrong_channel_count():
    gray = PlanarImage(channels=np.zeros((1, 4, 4)), colorspace="y")
    with pytest.raises(ValueError):
        rgb_to_ycbcr(gray)


def test_mismatched_planes_rejected():
    with pytest.raises(ValueError):
        YCbCrImage(y=np.zeros((4, 4)), cb=np.zeros((4, 4)), cr=np.zeros((5, 4)))
