"""
Subject Regions
Mask ingestion, face-box masks, region taxonomy, seeded sampling and dilation
"""
import json
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, List, Sequence, Union

import numpy as np
from PIL import Image as PILImage
from PIL import UnidentifiedImageError
from pydantic import BaseModel, ConfigDict, Field
from scipy import ndimage

from src.core.errors import (
    BoxOutOfBoundsError,
    DimensionMismatchError,
    EmptyRegionError,
    ImageDecodeError,
    ImageIOError,
    InvalidMaskValueError,
)
from src.core.image import Image, PixelCoord

logger = logging.getLogger(__name__)

SUBJECT_VALUE = 255
BACKGROUND_VALUE = 0

PathLike = Union[str, Path]


class RegionKind(str, Enum):
    """Where a perturbation is allowed to land"""
    SUBJECT = "subject"
    NONSUBJECT = "nonsubject"
    RANDOM = "random"


class FaceBox(BaseModel):
    """Axis-aligned face rectangle as exported by a face detection API"""
    model_config = ConfigDict(frozen=True)

    x0: int
    y0: int
    w: int = Field(ge=1)
    h: int = Field(ge=1)


@dataclass(frozen=True, eq=False)
class SubjectMask:
    """Boolean H x W grid; true marks a subject pixel"""
    bits: np.ndarray

    def __post_init__(self):
        bits = np.array(self.bits, dtype=bool)
        if bits.ndim != 2:
            raise DimensionMismatchError(f"mask must be 2-D, got shape {bits.shape}")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def subject_size(self) -> int:
        """|S|"""
        return int(self.bits.sum())

    def matches(self, image: Image) -> bool:
        return (self.height, self.width) == (image.height, image.width)

    def coords(self, subject: bool = True) -> List[PixelCoord]:
        """Row-major coordinates of the subject (or non-subject) pixels"""
        grid = self.bits if subject else ~self.bits
        return [PixelCoord(int(r), int(c)) for r, c in np.argwhere(grid)]

    def __eq__(self, other) -> bool:
        if not isinstance(other, SubjectMask):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)

    def __hash__(self) -> int:
        return hash((self.bits.shape, self.bits.tobytes()))


def load_mask(path: PathLike, image: Image) -> SubjectMask:
    """
    Read a grayscale mask PNG (255 = subject, 0 = background) paired with an image.

    Raises:
        DimensionMismatchError: mask and image sizes differ
        InvalidMaskValueError: any value other than 0 or 255
    """
    try:
        with PILImage.open(path) as pil:
            values = np.asarray(pil.convert("L"), dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise ImageDecodeError(f"cannot decode mask {path}: {exc}") from exc
    except OSError as exc:
        raise ImageIOError(f"cannot read mask {path}: {exc}") from exc

    if values.shape != (image.height, image.width):
        raise DimensionMismatchError(f"mask {path} is {values.shape}, image is {image.shape[:2]}")
    invalid = (values != SUBJECT_VALUE) & (values != BACKGROUND_VALUE)
    if invalid.any():
        bad = sorted(set(values[invalid].tolist()))[:5]
        raise InvalidMaskValueError(f"mask {path} holds values outside {{0, 255}}: {bad}")
    return SubjectMask(values == SUBJECT_VALUE)


def save_mask(mask: SubjectMask, path: PathLike) -> None:
    """Write a mask as a grayscale PNG"""
    values = np.where(mask.bits, SUBJECT_VALUE, BACKGROUND_VALUE).astype(np.uint8)
    try:
        PILImage.fromarray(values).save(path, format="PNG")
    except OSError as exc:
        raise ImageIOError(f"cannot write mask {path}: {exc}") from exc


def resize_mask(mask: SubjectMask, height: int, width: int) -> SubjectMask:
    """Nearest-neighbour resize, paired with resize_image"""
    if (mask.height, mask.width) == (height, width):
        return mask
    pil = PILImage.fromarray(np.where(mask.bits, SUBJECT_VALUE, BACKGROUND_VALUE).astype(np.uint8))
    resized = np.asarray(pil.resize((width, height), PILImage.Resampling.NEAREST))
    return SubjectMask(resized == SUBJECT_VALUE)


def mask_from_face_boxes(boxes: Sequence[FaceBox], image: Image) -> SubjectMask:
    """Union of face rectangles; several faces merge into one subject region"""
    bits = np.zeros((image.height, image.width), dtype=bool)
    for box in boxes:
        if box.x0 < 0 or box.y0 < 0 or box.x0 + box.w > image.width or box.y0 + box.h > image.height:
            raise BoxOutOfBoundsError(
                f"box ({box.x0},{box.y0},{box.w},{box.h}) exceeds {image.width}x{image.height} image"
            )
        bits[box.y0:box.y0 + box.h, box.x0:box.x0 + box.w] = True
    return SubjectMask(bits)


def mask_from_face_box(box: FaceBox, image: Image) -> SubjectMask:
    """Mask with exactly w*h subject pixels forming the box"""
    return mask_from_face_boxes([box], image)


def load_face_boxes(path: PathLike) -> Dict[str, List[FaceBox]]:
    """Read {"<image file>": [{"x0", "y0", "w", "h"}, ...]} exported by a face API"""
    try:
        with open(path, "r") as f:
            raw = json.load(f)
    except OSError as exc:
        raise ImageIOError(f"cannot read face boxes {path}: {exc}") from exc
    return {name: [FaceBox(**record) for record in records] for name, records in raw.items()}


def region_pixels(mask: SubjectMask, kind: RegionKind, rng: np.random.Generator) -> List[PixelCoord]:
    """
    Pixels of a region.

    Subject and NonSubject come back in row-major order; Random is a uniformly
    shuffled list of every coordinate which the caller truncates.
    """
    kind = RegionKind(kind)
    if kind is RegionKind.RANDOM:
        order = rng.permutation(mask.height * mask.width)
        return [PixelCoord(int(i // mask.width), int(i % mask.width)) for i in order]

    coords = mask.coords(subject=kind is RegionKind.SUBJECT)
    if not coords:
        raise EmptyRegionError(f"{kind.value} region is empty")
    return coords


def sample_pixels(mask: SubjectMask, n: int, rng: np.random.Generator) -> List[PixelCoord]:
    """n subject pixels drawn uniformly without replacement; all of S shuffled when n > |S|"""
    coords = mask.coords(subject=True)
    if not coords:
        raise EmptyRegionError("cannot sample from an empty subject region")
    if n >= len(coords):
        picks = rng.permutation(len(coords))
    else:
        picks = rng.choice(len(coords), size=n, replace=False)
    return [coords[i] for i in picks]


def dilate(mask: SubjectMask, d: int) -> SubjectMask:
    """Square (Chebyshev) dilation by radius d, clipped at the borders"""
    if d < 0:
        raise ValueError(f"dilation radius must be non-negative, got {d}")
    if d == 0 or mask.subject_size == 0:
        return mask
    structure = np.ones((2 * d + 1, 2 * d + 1), dtype=bool)
    return SubjectMask(ndimage.binary_dilation(mask.bits, structure=structure))
