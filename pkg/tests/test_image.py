"""Tests for the image value type and PNG codec"""
import numpy as np
import pytest
from PIL import Image as PILImage

from src.core.errors import DimensionMismatchError, ImageDecodeError, ImageIOError
from src.core.image import (
    Image,
    PixelCoord,
    clip_channels,
    load_png,
    pixel_diff_set,
    region_average_rgb,
    round_half_up,
    save_png,
)


def test_png_round_trip_is_bit_exact(tmp_path, random_image) -> None:
    image = random_image(7, 5, seed=3)
    path = tmp_path / "img.png"
    save_png(image, path)
    assert load_png(path) == image


def test_grayscale_file_expands_to_rgb(tmp_path) -> None:
    path = tmp_path / "gray.png"
    PILImage.fromarray(np.full((4, 6), 77, dtype=np.uint8)).save(path)
    image = load_png(path)
    assert image.shape == (4, 6, 3)
    assert image.pixel(PixelCoord(2, 3)) == (77, 77, 77)


def test_alpha_is_composited_over_white(tmp_path) -> None:
    rgba = np.zeros((1, 2, 4), dtype=np.uint8)
    rgba[0, 0] = (0, 0, 0, 0)
    rgba[0, 1] = (10, 20, 30, 255)
    path = tmp_path / "alpha.png"
    PILImage.fromarray(rgba).save(path)
    image = load_png(path)
    assert image.pixel(PixelCoord(0, 0)) == (255, 255, 255)
    assert image.pixel(PixelCoord(0, 1)) == (10, 20, 30)


def test_missing_file_is_io_error(tmp_path) -> None:
    with pytest.raises(ImageIOError):
        load_png(tmp_path / "absent.png")


def test_garbage_bytes_are_decode_error(tmp_path) -> None:
    path = tmp_path / "broken.png"
    path.write_bytes(b"definitely not a png")
    with pytest.raises(ImageDecodeError):
        load_png(path)


def test_image_rejects_wrong_shape() -> None:
    with pytest.raises(DimensionMismatchError):
        Image(np.zeros((4, 4), dtype=np.uint8))


def test_image_is_read_only() -> None:
    image = Image.filled(2, 2, (1, 2, 3))
    with pytest.raises(ValueError):
        image.pixels[0, 0, 0] = 9


def test_with_pixels_leaves_original_untouched() -> None:
    image = Image.filled(3, 3, (100, 100, 100))
    edited = image.with_pixels([PixelCoord(1, 1)], (0, 0, 0))
    assert image.pixel(PixelCoord(1, 1)) == (100, 100, 100)
    assert edited.pixel(PixelCoord(1, 1)) == (0, 0, 0)
    assert pixel_diff_set(image, edited) == {PixelCoord(1, 1)}


def test_clip_channels_clamps_and_rounds() -> None:
    raw = np.array([[[327.5, -10.0, 127.5]]])
    clipped = clip_channels(raw)
    assert clipped.pixel(PixelCoord(0, 0)) == (255, 0, 128)
    assert clip_channels(clipped) == clipped


def test_round_half_up() -> None:
    assert round_half_up([0.5, 1.5, 2.4, 2.5]).tolist() == [1.0, 2.0, 2.0, 3.0]


def test_pixel_diff_set_counts_single_channel_changes() -> None:
    a = Image.filled(2, 2, (5, 5, 5))
    arr = a.to_array()
    arr[1, 0, 2] = 6
    b = Image(arr)
    assert pixel_diff_set(a, b) == {PixelCoord(1, 0)}
    assert pixel_diff_set(b, a) == pixel_diff_set(a, b)
    assert pixel_diff_set(a, a) == frozenset()


def test_pixel_diff_set_needs_equal_shapes() -> None:
    with pytest.raises(DimensionMismatchError):
        pixel_diff_set(Image.filled(2, 2, (0, 0, 0)), Image.filled(2, 3, (0, 0, 0)))


def test_region_average_rounds_half_up() -> None:
    arr = np.zeros((1, 2, 3), dtype=np.uint8)
    arr[0, 1] = 255
    image = Image(arr)
    assert region_average_rgb(image, [PixelCoord(0, 0), PixelCoord(0, 1)]) == (128, 128, 128)
