"""Uses of a finished alignment: highlight transfer and OCR ground-truth export."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import MissingPageImage, UnknownTokenId
from .highlight import HighlightRecord
from .model import Alignment, BoundingBox, DocumentVersion, TokenId, XmlMeta, unescape_surface


@dataclass(frozen=True)
class Transfer:
    token_id: TokenId
    coverage_percent: float

    def to_json(self) -> dict:
        return {"token_id": str(self.token_id), "coverage_percent": self.coverage_percent}


@dataclass(frozen=True)
class TransferResult:
    transfers: list[Transfer]
    untransferable: list[Transfer]

    def to_json(self) -> dict:
        return {"transfers": [t.to_json() for t in self.transfers],
                "untransferable": [t.to_json() for t in self.untransferable]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), ensure_ascii=False, indent=1) + "\n"


def transfer_highlights(alignment: Alignment, records: Sequence[HighlightRecord]) -> TransferResult:
    """Carry ocr-side highlight coverage over to the matched xml tokens.

    Output follows alignment order.  When fixers merged several highlighted
    ocr words into one token, the xml partner gets the largest coverage.
    Highlighted ocr tokens whose alignment partner is a gap are listed as
    untransferable.
    """
    coverage: dict[str, float] = {}
    for rec in records:
        for part in rec.token_id.parts:
            coverage[part] = max(coverage.get(part, 0.0), rec.coverage_percent)
    known = {part for _, right in alignment.pairs if not right.is_gap for part in right.id.parts}
    unknown = sorted(set(coverage) - known)
    if unknown:
        raise UnknownTokenId(f"highlighted ids not on the ocr side of the alignment: {', '.join(unknown[:5])}")

    transfers, untransferable = [], []
    done: set[str] = set()
    for left, right in alignment.pairs:
        if right.is_gap:
            continue
        hits = [coverage[p] for p in right.id.parts if p in coverage and p not in done]
        if not hits:
            continue
        done.update(right.id.parts)
        if left.is_gap:
            untransferable.append(Transfer(right.id, max(hits)))
        else:
            transfers.append(Transfer(left.id, max(hits)))
    return TransferResult(transfers, untransferable)


@dataclass(frozen=True)
class GroundTruthItem:
    image_path: str
    bbox: BoundingBox
    ocr_surface: str
    correct_surface: str
    # (text, subscript, superscript) for every xml part of the correct side
    correct_segments: tuple[tuple[str, bool, bool], ...] = ()
    ocr_id: str = ""
    xml_id: str = ""

    def __post_init__(self):
        if self.ocr_surface == self.correct_surface:
            raise ValueError("a ground-truth item needs differing surfaces")

    @property
    def subscript(self) -> bool:
        return any(sub for _, sub, _ in self.correct_segments)

    @property
    def superscript(self) -> bool:
        return any(sup for _, _, sup in self.correct_segments)

    @property
    def correct_markup(self) -> str:
        """Correct text with ``<sub>``/``<sup>`` around scripted segments."""
        out = []
        for text, sub, sup in self.correct_segments or ((self.correct_surface, False, False),):
            if sub:
                text = f"<sub>{text}</sub>"
            elif sup:
                text = f"<sup>{text}</sup>"
            out.append(text)
        return "".join(out)

    def to_json(self) -> dict:
        return {"image_path": self.image_path, "bbox": self.bbox.to_list(),
                "ocr_id": self.ocr_id, "xml_id": self.xml_id,
                "ocr_surface": self.ocr_surface, "correct_surface": self.correct_surface,
                "correct_markup": self.correct_markup,
                "subscript": self.subscript, "superscript": self.superscript}


def _union_bbox(boxes: list[BoundingBox]) -> BoundingBox:
    page = boxes[0].page
    same = [b for b in boxes if b.page == page]
    return BoundingBox(min(b.x0 for b in same), min(b.y0 for b in same),
                       max(b.x1 for b in same), max(b.y1 for b in same), page)


def export_groundtruth(alignment: Alignment, ocr: DocumentVersion,
                       pages: Sequence[str | Path] | None,
                       xml: DocumentVersion | None = None,
                       check_exists: bool = True) -> list[GroundTruthItem]:
    """One item per directly matched pair with differing surfaces.

    ``pages[k]`` is the image of ocr page ``k``; ``xml`` supplies the
    sub/sup flags of the correct text when given.
    """
    ocr_meta = ocr.meta_by_part()
    xml_meta = xml.meta_by_part() if xml is not None else {}
    xml_surface = {t.id.parts[0]: unescape_surface(t.surface)
                   for t in (xml.tokens if xml is not None else ()) if len(t.id.parts) == 1}
    pages = list(pages or [])
    items = []
    for left, right in alignment.matched():
        if left.surface == right.surface:
            continue
        boxes = [ocr_meta[p].bbox for p in right.id.parts if getattr(ocr_meta.get(p), "bbox", None)]
        if not boxes:
            raise MissingPageImage(f"ocr token {right.id} has no bounding box")
        bbox = _union_bbox(boxes)
        if bbox.page >= len(pages):
            raise MissingPageImage(f"no page image for page {bbox.page} (token {right.id})")
        image = str(pages[bbox.page])
        if check_exists and not Path(image).is_file():
            raise MissingPageImage(f"page image {image} does not exist")
        segments = []
        for part in left.id.parts:
            meta = xml_meta.get(part)
            text = xml_surface.get(part)
            if text is None:
                segments = []
                break
            segments.append((text, isinstance(meta, XmlMeta) and meta.subscript,
                             isinstance(meta, XmlMeta) and meta.superscript))
        if not segments:
            segments = [(unescape_surface(left.surface), False, False)]
        items.append(GroundTruthItem(image, bbox, unescape_surface(right.surface),
                                     unescape_surface(left.surface), tuple(segments),
                                     str(right.id), str(left.id)))
    return items


def dump_groundtruth(items: Sequence[GroundTruthItem]) -> str:
    return json.dumps([i.to_json() for i in items], ensure_ascii=False, indent=1) + "\n"


def write_crops(items: Sequence[GroundTruthItem], out_dir: str | Path) -> list[Path]:
    """Crop every item's bbox from its page image into ``out_dir``."""
    from PIL import Image

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    opened: dict[str, Image.Image] = {}
    try:
        for k, item in enumerate(items):
            if item.image_path not in opened:
                opened[item.image_path] = Image.open(item.image_path)
            b = item.bbox
            crop = opened[item.image_path].crop((b.x0, b.y0, b.x1, b.y1))
            path = out_dir / f"{k:05d}.png"
            crop.save(path)
            path.with_suffix(".gt.txt").write_text(item.correct_surface + "\n", encoding="utf-8")
            written.append(path)
    finally:
        for im in opened.values():
            im.close()
    return written
