"""
Corpus Handling
Image/mask pairing, qualification against a detector and a synthetic fixture generator
"""
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel

from src.core.errors import ImageIOError
from src.core.image import Image, load_png, resize_image, save_png
from src.oracle.detectors import DetectorOracle
from src.oracle.verdict import ILLEGAL_LEVELS, FeedbackKind, Verdict
from src.regions.masks import (
    FaceBox,
    SubjectMask,
    load_face_boxes,
    load_mask,
    mask_from_face_boxes,
    resize_mask,
    save_mask,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


@dataclass(frozen=True)
class CorpusItem:
    """One image with its subject mask"""
    image_id: str
    path: str
    image: Image
    mask: SubjectMask


class ManifestEntry(BaseModel):
    """Qualified image with the verdict on its unmodified version"""
    image_id: str
    path: str
    verdict: Dict

    def to_verdict(self) -> Verdict:
        return Verdict.from_dict(self.verdict)


def load_corpus(images_dir: PathLike, masks_dir: Optional[PathLike] = None,
                faces_file: Optional[PathLike] = None, size: Optional[int] = None) -> List[CorpusItem]:
    """
    Pair every image in a directory with its mask.

    Masks come from `masks_dir/<image stem>.png` or from face boxes keyed by
    image file name. Without either source the subject region is empty. When
    `size` is given both are resized to size x size.
    """
    images_dir = Path(images_dir)
    if not images_dir.is_dir():
        raise ImageIOError(f"image directory {images_dir} does not exist")
    faces: Dict[str, List[FaceBox]] = load_face_boxes(faces_file) if faces_file else {}

    items = []
    for path in sorted(p for p in images_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES):
        image = load_png(path)
        if masks_dir is not None:
            mask = load_mask(Path(masks_dir) / f"{path.stem}.png", image)
        elif faces_file is not None:
            mask = mask_from_face_boxes(faces.get(path.name, []), image)
        else:
            mask = SubjectMask(np.zeros((image.height, image.width), dtype=bool))
        if size is not None:
            image = resize_image(image, size, size)
            mask = resize_mask(mask, size, size)
        items.append(CorpusItem(image_id=path.stem, path=str(path), image=image, mask=mask))

    logger.info("loaded %d images from %s", len(items), images_dir)
    return items


def is_qualified(verdict: Verdict) -> bool:
    """Illegal verdicts qualify; word answers only at LIKELY or VERY_LIKELY"""
    if verdict.kind is FeedbackKind.ORDINAL:
        return verdict.level in ILLEGAL_LEVELS
    return verdict.illegal


def qualify_dataset(items: List[CorpusItem], oracle_factory) -> List[Tuple[CorpusItem, Verdict]]:
    """
    Keep images the detector judges illegal, one query per image.

    `oracle_factory` maps (image, mask) to a detector; a bare detector is
    accepted and used for every image.
    """
    if isinstance(oracle_factory, DetectorOracle):
        shared = oracle_factory
        oracle_factory = lambda image, mask: shared  # noqa: E731

    qualified = []
    for item in items:
        verdict = oracle_factory(item.image, item.mask).classify(item.image)
        if is_qualified(verdict):
            qualified.append((item, verdict))
        else:
            logger.debug("%s not qualified: %s", item.image_id, verdict.label)
    logger.info("qualified %d of %d images", len(qualified), len(items))
    return qualified


def write_manifest(path: PathLike, qualified: List[Tuple[CorpusItem, Verdict]]) -> None:
    with open(path, "w") as f:
        for item, verdict in qualified:
            entry = ManifestEntry(image_id=item.image_id, path=item.path, verdict=verdict.to_dict())
            f.write(json.dumps(entry.model_dump(), sort_keys=True) + "\n")


def read_manifest(path: PathLike) -> List[ManifestEntry]:
    with open(path, "r") as f:
        return [ManifestEntry.model_validate(json.loads(line)) for line in f if line.strip()]


def attach_manifest(items: List[CorpusItem], entries: List[ManifestEntry]) -> List[Tuple[CorpusItem, Verdict]]:
    """Corpus items listed in a manifest, in manifest order"""
    by_id = {item.image_id: item for item in items}
    missing = [entry.image_id for entry in entries if entry.image_id not in by_id]
    if missing:
        raise ImageIOError(f"manifest lists images missing from the corpus: {missing[:5]}")
    return [(by_id[entry.image_id], entry.to_verdict()) for entry in entries]


class SyntheticCorpusGenerator:
    """
    Deterministic stand-in corpus: a bright elliptical subject on a dark background.

    Subject channels lie in [130, 250] and background channels in [0, 120], so
    neither region contains pure white or black pixels.
    """

    def __init__(self, count: int = 20, size: int = 32, seed: int = 0):
        if size < 16:
            raise ValueError(f"synthetic images need at least 16x16 pixels, got {size}")
        self.count = count
        self.size = size
        self.seed = seed

    def _one(self, rng: np.random.Generator) -> Tuple[Image, SubjectMask, FaceBox]:
        n = self.size
        cy, cx = rng.integers(n // 3, n - n // 3, size=2)
        ry, rx = rng.integers(n // 6, n // 3 + 1, size=2)
        rows, cols = np.mgrid[0:n, 0:n]
        bits = ((rows - cy) / ry) ** 2 + ((cols - cx) / rx) ** 2 <= 1.0

        pixels = rng.integers(0, 121, size=(n, n, 3))
        subject = rng.integers(130, 251, size=(n, n, 3))
        pixels[bits] = subject[bits]

        top, left = max(int(cy - ry), 0), max(int(cx - rx), 0)
        width = min(2 * int(rx), n - left)
        height = max(1, min(int(ry), n - top))
        face = FaceBox(x0=left, y0=top, w=max(1, width), h=height)
        return Image(pixels.astype(np.uint8)), SubjectMask(bits), face

    def generate(self) -> List[Tuple[str, Image, SubjectMask, FaceBox]]:
        rng = np.random.default_rng(self.seed)
        corpus = []
        for index in range(self.count):
            image, mask, face = self._one(rng)
            corpus.append((f"img_{index:03d}", image, mask, face))
        return corpus

    def write(self, out_dir: PathLike) -> Path:
        """Write images/, masks/ and faces.json under out_dir"""
        out_dir = Path(out_dir)
        (out_dir / "images").mkdir(parents=True, exist_ok=True)
        (out_dir / "masks").mkdir(parents=True, exist_ok=True)
        faces = {}
        for name, image, mask, face in self.generate():
            save_png(image, out_dir / "images" / f"{name}.png")
            save_mask(mask, out_dir / "masks" / f"{name}.png")
            faces[f"{name}.png"] = [face.model_dump()]
        with open(out_dir / "faces.json", "w") as f:
            json.dump(faces, f, indent=2, sort_keys=True)
        logger.info("wrote %d synthetic images to %s", self.count, out_dir)
        return out_dir
