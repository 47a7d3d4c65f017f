"""Image normalization and netpbm IO."""

import numpy as np
import pytest

from toonface import data as D


def test_square_96_input_only_rescaled():
    rng = np.random.default_rng(0)
    raw = rng.integers(0, 256, size=(96, 96)).astype(float)
    pixels, transform = D.normalize_image(raw)
    np.testing.assert_allclose(pixels, raw / 255.0)
    assert (transform.scale_x, transform.scale_y) == (1.0, 1.0)
    assert (transform.offset_x, transform.offset_y) == (0.0, 0.0)


def test_wide_input_centers_rows():
    raw = np.full((96, 192), 200.0)
    pixels, transform = D.normalize_image(raw)
    assert np.all(pixels[24:72, :] == pytest.approx(200 / 255))
    assert np.all(pixels[:24, :] == 0.0)
    assert np.all(pixels[72:, :] == 0.0)
    assert transform.offset_y == 24.0
    assert transform.scale_x == transform.scale_y == 0.5


def test_tall_input_centers_columns():
    raw = np.full((192, 96), 100.0)
    pixels, transform = D.normalize_image(raw)
    assert np.all(pixels[:, 24:72] > 0)
    assert np.all(pixels[:, :24] == 0.0)
    assert transform.offset_x == 24.0


def test_pure_white_square_is_all_ones():
    pixels, _ = D.normalize_image(np.full((50, 50), 255.0))
    assert np.all(pixels == 1.0)


def test_output_always_in_unit_range():
    rng = np.random.default_rng(1)
    for shape in ((10, 200), (131, 77), (96, 96), (1, 96)):
        raw = rng.integers(0, 256, size=shape).astype(float)
        pixels, _ = D.normalize_image(raw)
        assert pixels.shape == (96, 96)
        assert pixels.min() >= 0.0 and pixels.max() <= 1.0


def test_zero_area_rejected():
    with pytest.raises(D.DataError):
        D.normalize_image(np.zeros((0, 10)))


def test_annotation_mapping_is_exact():
    raw = np.zeros((96, 192))
    _, transform = D.normalize_image(raw)
    assert transform.map_point(100.0, 50.0) == (50.0, 49.0)
    assert transform.map_point(0.0, 0.0) == (0.0, 24.0)


def test_annotation_mapping_tracks_content():
    # a bright pixel must land where the transform says it does
    raw = np.zeros((48, 48))
    raw[10, 30] = 255.0
    pixels, transform = D.normalize_image(raw)
    x, y = transform.map_point(30.0, 10.0)
    peak_y, peak_x = np.unravel_index(np.argmax(pixels), pixels.shape)
    assert abs(peak_x - x) <= 1.0 and abs(peak_y - y) <= 1.0


def test_color_uses_luminance_weights():
    color = np.zeros((96, 96, 3))
    color[:, :, 0] = 255.0
    pixels, _ = D.normalize_image(color)
    assert pixels[0, 0] == pytest.approx(0.299)


def test_grayscale_rejects_bad_shapes():
    with pytest.raises(D.DataError):
        D.to_grayscale(np.zeros((4, 4, 2)))


def test_bilinear_resize_constant_preserved():
    out = D.bilinear_resize(np.full((31, 17), 5.0), 96, 96)
    np.testing.assert_allclose(out, 5.0)


def test_bilinear_resize_identity_when_same_size():
    rng = np.random.default_rng(2)
    img = rng.random((20, 20))
    np.testing.assert_allclose(D.bilinear_resize(img, 20, 20), img)


def test_pgm_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    img = rng.integers(0, 256, size=(40, 60)).astype(np.uint8)
    path = tmp_path / "img.pgm"
    D.write_pgm(path, img)
    np.testing.assert_array_equal(D.read_pgm(path), img)


def test_pgm_with_comment(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P5\n# a comment\n2 2\n255\n" + bytes([0, 64, 128, 255]))
    img = D.read_pgm(path)
    np.testing.assert_array_equal(img, [[0, 64], [128, 255]])


def test_pgm_truncated_raster_rejected(tmp_path):
    path = tmp_path / "t.pgm"
    path.write_bytes(b"P5\n4 4\n255\n" + bytes(10))
    with pytest.raises(D.DataError, match="raster"):
        D.read_pgm(path)


def test_ppm_luminance_via_load_image(tmp_path):
    path = tmp_path / "c.ppm"
    pixel = bytes([255, 0, 0])  # pure red
    path.write_bytes(b"P6\n1 1\n255\n" + pixel)
    gray = D.load_image(path)
    assert gray[0, 0] == pytest.approx(0.299 * 255)


def test_load_image_rejects_unknown_magic(tmp_path):
    path = tmp_path / "x.img"
    path.write_bytes(b"BM....")
    with pytest.raises(D.DataError):
        D.load_image(path)
