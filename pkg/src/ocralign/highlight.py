"""Highlighter detection on inpainted background page images.

Strongly coloured marker ink has large differences between its R, G and
B components, so such pixels are set in a binary mask.  A word's degree
of highlighting is the share of set pixels inside its bounding box, with
the box scaled from OCR page coordinates to the background image.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from .errors import PageCountMismatch
from .model import BoundingBox, DocumentVersion, TokenId

DEFAULT_THRESHOLD = 50
DEFAULT_MIN_COVERAGE = 50.0
MODES = ("any", "all")


@dataclass(frozen=True)
class PageImage:
    pixels: np.ndarray  # (height, width, 3) uint8
    dpi_hint: float | None = None

    def __post_init__(self):
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ValueError("pixels must have shape (height, width, 3)")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def from_array(cls, array, dpi_hint=None) -> "PageImage":
        arr = np.asarray(array, dtype=np.uint8)
        if arr.ndim == 2:
            arr = np.repeat(arr[:, :, None], 3, axis=2)
        return cls(arr, dpi_hint)

    @classmethod
    def open(cls, path) -> "PageImage":
        with Image.open(path) as im:
            dpi = im.info.get("dpi")
            if im.mode in ("L", "I;16", "I", "1"):
                arr = np.asarray(im.convert("L"))
            else:
                arr = np.asarray(im.convert("RGB"))
        return cls.from_array(arr, float(dpi[0]) if dpi else None)


@dataclass(frozen=True)
class HighlightRecord:
    token_id: TokenId
    coverage_percent: float
    scaled_bbox: BoundingBox

    def to_json(self) -> dict:
        return {"token_id": str(self.token_id), "coverage_percent": self.coverage_percent,
                "bbox": self.scaled_bbox.to_list()}

    @classmethod
    def from_json(cls, data: dict) -> "HighlightRecord":
        return cls(TokenId.parse(data["token_id"]), float(data["coverage_percent"]),
                   BoundingBox.from_list(data["bbox"]))


def binarize_background(img: PageImage, threshold: int = DEFAULT_THRESHOLD, mode: str = "any") -> np.ndarray:
    """Boolean mask of strongly chromatic pixels.

    ``mode="any"`` sets a pixel when at least one pairwise channel
    difference exceeds ``threshold``; ``mode="all"`` needs all three.
    """
    if not 0 <= threshold <= 255:
        raise ValueError("threshold must be within [0, 255]")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    px = img.pixels.astype(np.int16)
    r, g, b = px[:, :, 0], px[:, :, 1], px[:, :, 2]
    diffs = (np.abs(r - g) > threshold, np.abs(r - b) > threshold, np.abs(g - b) > threshold)
    if mode == "all":
        return diffs[0] & diffs[1] & diffs[2]
    return diffs[0] | diffs[1] | diffs[2]


def word_coverage(mask: np.ndarray, bbox: BoundingBox) -> float:
    """Percentage of set mask pixels in ``[x0, x1) x [y0, y1)``, clipped to the image."""
    height, width = mask.shape
    x0, x1 = min(bbox.x0, width), min(bbox.x1, width)
    y0, y1 = min(bbox.y0, height), min(bbox.y1, height)
    area = (x1 - x0) * (y1 - y0)
    if area <= 0:
        return 0.0
    return 100.0 * int(mask[y0:y1, x0:x1].sum()) / area


def _scale(v: int, num: int, den: int) -> int:
    # round half up, exact in integers
    return (2 * v * num + den) // (2 * den)


def scale_bbox(bbox: BoundingBox, ocr_dims: tuple[int, int], bg_dims: tuple[int, int]) -> BoundingBox:
    (ow, oh), (bw, bh) = ocr_dims, bg_dims
    return BoundingBox(_scale(bbox.x0, bw, ow), _scale(bbox.y0, bh, oh),
                       _scale(bbox.x1, bw, ow), _scale(bbox.y1, bh, oh), bbox.page)


def detect_highlights(ocr: DocumentVersion, backgrounds: Sequence[PageImage],
                      ocr_page_dims: Sequence[tuple[int, int]] | None = None,
                      threshold: int = DEFAULT_THRESHOLD,
                      min_coverage: float = DEFAULT_MIN_COVERAGE,
                      mode: str = "any") -> list[HighlightRecord]:
    dims = list(ocr_page_dims if ocr_page_dims is not None else ocr.pages)
    if len(dims) != len(backgrounds):
        raise PageCountMismatch(f"{len(dims)} OCR pages but {len(backgrounds)} background images")
    masks = [binarize_background(bg, threshold, mode) for bg in backgrounds]
    records = []
    for tok, meta in zip(ocr.tokens, ocr.meta):
        page = meta.bbox.page
        if page >= len(masks):
            raise PageCountMismatch(f"token {tok.id} is on page {page}, only {len(masks)} backgrounds")
        bg = backgrounds[page]
        scaled = scale_bbox(meta.bbox, dims[page], (bg.width, bg.height))
        coverage = word_coverage(masks[page], scaled)
        if coverage >= min_coverage:
            records.append(HighlightRecord(tok.id, coverage, scaled))
    return records


def dump_highlights(records: Sequence[HighlightRecord]) -> str:
    return json.dumps([r.to_json() for r in records], ensure_ascii=False, indent=1) + "\n"


def load_highlights(text: str | bytes) -> list[HighlightRecord]:
    return [HighlightRecord.from_json(d) for d in json.loads(text)]


def load_backgrounds(paths: Sequence[str | Path]) -> list[PageImage]:
    return [PageImage.open(p) for p in paths]
