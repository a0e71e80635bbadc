"""
Image Core
RGB image value type, lossless PNG codec and pixel-set arithmetic shared by every attack
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import FrozenSet, Iterable, NamedTuple, Tuple, Union

import numpy as np
from PIL import Image as PILImage
from PIL import UnidentifiedImageError

from src.core.errors import (
    DimensionMismatchError,
    EmptyRegionError,
    ImageDecodeError,
    ImageIOError,
)

logger = logging.getLogger(__name__)

CHANNELS = 3
MAX_VALUE = 255

PathLike = Union[str, Path]


class PixelCoord(NamedTuple):
    """Row/column address of one pixel"""
    row: int
    col: int


class Rgb(NamedTuple):
    """One 8-bit RGB triple"""
    r: int
    g: int
    b: int


def round_half_up(values) -> np.ndarray:
    """Round reals to the nearest integer, halves away from zero for non-negatives"""
    return np.floor(np.asarray(values, dtype=np.float64) + 0.5)


@dataclass(frozen=True, eq=False)
class Image:
    """
    H x W x 3 grid of 8-bit channel values.
    The backing array is read-only; every edit returns a new Image.
    """
    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 3 or arr.shape[2] != CHANNELS:
            raise DimensionMismatchError(f"expected H x W x 3 grid, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if not np.issubdtype(arr.dtype, np.integer):
                raise TypeError(f"channel values must be integers, got {arr.dtype}")
            if arr.size and (arr.min() < 0 or arr.max() > MAX_VALUE):
                raise ValueError("channel values must lie in [0, 255]")
        arr = np.array(arr, dtype=np.uint8)
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @classmethod
    def filled(cls, height: int, width: int, rgb: Tuple[int, int, int]) -> "Image":
        """Constant image of the given colour"""
        arr = np.empty((height, width, CHANNELS), dtype=np.uint8)
        arr[...] = np.asarray(rgb, dtype=np.uint8)
        return cls(arr)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return CHANNELS

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.pixels.shape

    @property
    def data(self) -> bytes:
        """Row-major channel bytes"""
        return self.pixels.tobytes()

    def to_array(self) -> np.ndarray:
        """Writable uint8 copy of the pixels"""
        return self.pixels.copy()

    def pixel(self, coord: PixelCoord) -> Rgb:
        r, g, b = self.pixels[coord[0], coord[1]]
        return Rgb(int(r), int(g), int(b))

    def with_pixels(self, coords, rgb: Tuple[int, int, int]) -> "Image":
        """Copy with every listed coordinate set to one colour"""
        rows, cols = coord_arrays(coords, self.height, self.width)
        arr = self.to_array()
        arr[rows, cols] = np.asarray(rgb, dtype=np.uint8)
        return Image(arr)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Image):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.pixels, other.pixels)

    def __hash__(self) -> int:
        return hash((self.shape, self.data))

    def __repr__(self) -> str:
        return f"Image(height={self.height}, width={self.width})"


def coord_arrays(coords, height: int, width: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Split coordinates into row and column index arrays.

    Raises:
        IndexError: a coordinate lies outside height x width
    """
    pairs = np.asarray(list(coords), dtype=np.int64).reshape(-1, 2)
    rows, cols = pairs[:, 0], pairs[:, 1]
    if pairs.size and (rows.min() < 0 or cols.min() < 0 or rows.max() >= height or cols.max() >= width):
        raise IndexError(f"pixel coordinate outside {height}x{width} image")
    return rows, cols


def _check_same_shape(a: Image, b: Image) -> None:
    if a.shape != b.shape:
        raise DimensionMismatchError(f"image shapes differ: {a.shape} vs {b.shape}")


def _to_rgb_array(pil: PILImage.Image) -> np.ndarray:
    """Convert any Pillow mode to RGB, compositing transparency over white"""
    has_alpha = pil.mode in ("RGBA", "LA", "PA", "RGBa", "La") or "transparency" in pil.info
    if has_alpha:
        rgba = np.asarray(pil.convert("RGBA"), dtype=np.uint32)
        rgb, alpha = rgba[..., :3], rgba[..., 3:4]
        blended = (rgb * alpha + MAX_VALUE * (MAX_VALUE - alpha) + 127) // MAX_VALUE
        return blended.astype(np.uint8)
    return np.asarray(pil.convert("RGB"), dtype=np.uint8)


def load_png(path: PathLike) -> Image:
    """
    Load an image file as 8-bit RGB.

    Grayscale and paletted files are expanded; alpha is composited over white.
    Other Pillow-readable formats (JPEG included) are accepted by conversion.
    """
    try:
        with PILImage.open(path) as pil:
            pil.load()
            return Image(_to_rgb_array(pil))
    except UnidentifiedImageError as exc:
        raise ImageDecodeError(f"cannot decode {path}: {exc}") from exc
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        raise ImageIOError(f"cannot read {path}: {exc}") from exc
    except (OSError, SyntaxError, ValueError) as exc:
        raise ImageDecodeError(f"corrupt or unsupported image {path}: {exc}") from exc


def save_png(image: Image, path: PathLike) -> None:
    """Write a lossless PNG"""
    try:
        PILImage.fromarray(np.ascontiguousarray(image.pixels)).save(path, format="PNG")
    except OSError as exc:
        raise ImageIOError(f"cannot write {path}: {exc}") from exc
    logger.debug("wrote %s (%dx%d)", path, image.width, image.height)


def clip_channels(raw: Union[np.ndarray, Image]) -> Image:
    """Clamp a wide-typed H x W x 3 grid to [0, 255], round half-up and narrow to 8 bits"""
    arr = raw.pixels if isinstance(raw, Image) else np.asarray(raw)
    if arr.ndim != 3 or arr.shape[2] != CHANNELS:
        raise DimensionMismatchError(f"expected H x W x 3 grid, got shape {arr.shape}")
    clipped = np.clip(arr.astype(np.float64), 0, MAX_VALUE)
    return Image(round_half_up(clipped).astype(np.uint8))


def diff_mask(a: Image, b: Image) -> np.ndarray:
    """Boolean H x W grid, true where any channel differs"""
    _check_same_shape(a, b)
    return np.any(a.pixels != b.pixels, axis=2)


def pixel_diff_set(a: Image, b: Image) -> FrozenSet[PixelCoord]:
    """Coordinates where any of the three channels differ"""
    return frozenset(PixelCoord(int(r), int(c)) for r, c in np.argwhere(diff_mask(a, b)))


def _mean_rgb(values: np.ndarray) -> Rgb:
    """Per-channel mean of an N x 3 block, rounded half-up in exact integer arithmetic"""
    n = values.shape[0]
    if n == 0:
        raise EmptyRegionError("cannot average an empty region")
    sums = values.astype(np.int64).sum(axis=0)
    mean = (2 * sums + n) // (2 * n)
    return Rgb(int(mean[0]), int(mean[1]), int(mean[2]))


def region_average_rgb(image: Image, coords: Iterable[PixelCoord]) -> Rgb:
    """Per-channel arithmetic mean over the listed pixels"""
    rows, cols = coord_arrays(coords, image.height, image.width)
    return _mean_rgb(image.pixels[rows, cols])


def masked_average_rgb(image: Image, bits: np.ndarray) -> Rgb:
    """Per-channel arithmetic mean over the pixels where bits is true"""
    if bits.shape != (image.height, image.width):
        raise DimensionMismatchError(f"mask shape {bits.shape} does not match image {image.shape[:2]}")
    return _mean_rgb(image.pixels[bits])


def resize_image(image: Image, height: int, width: int) -> Image:
    """Bicubic resize, used to bring a corpus to a fixed input size"""
    if (image.height, image.width) == (height, width):
        return image
    pil = PILImage.fromarray(np.ascontiguousarray(image.pixels))
    resized = pil.resize((width, height), PILImage.Resampling.BICUBIC)
    return Image(np.asarray(resized, dtype=np.uint8))
