"""hOCR → word-level ``DocumentVersion`` (kind ``conv`` or ``scan``)."""

from __future__ import annotations

import logging
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Sequence

from .errors import MalformedHocr, PageDimensionMissing
from .model import BoundingBox, DocumentVersion, OcrMeta, make_token, OCR_KINDS
from .xmlutil import byte_offset, local_name, parse_bytes

log = logging.getLogger(__name__)

_WS = re.compile(r"\s+")


@dataclass
class HocrWord:
    surface: str
    bbox: BoundingBox
    word_confidence: float
    char_confidences: tuple[float, ...] = ()
    char_bboxes: tuple[BoundingBox, ...] = ()


@dataclass
class HocrPage:
    page_index: int
    image_width: int
    image_height: int
    words: list[HocrWord] = field(default_factory=list)


def parse_title(title: str | None) -> dict[str, list[str]]:
    """``"bbox 1 2 3 4; x_wconf 96"`` → ``{"bbox": [...], "x_wconf": [...]}``."""
    props: dict[str, list[str]] = {}
    if not title:
        return props
    for chunk in title.split(";"):
        fields = chunk.split()
        if fields:
            props[fields[0]] = fields[1:]
    return props


def _classes(elem: ET.Element) -> set[str]:
    return set((elem.get("class") or "").split())


def _bbox(values: list[str], page: int, width: int, height: int, source: str) -> BoundingBox:
    try:
        x0, y0, x1, y1 = (int(float(v)) for v in values[:4])
    except ValueError:
        raise MalformedHocr(f"bad bbox {' '.join(values)!r}", source) from None
    if len(values) < 4 or x0 > x1 or y0 > y1:
        raise MalformedHocr(f"bad bbox {' '.join(values)!r}", source)
    clipped = (max(0, min(x0, width)), max(0, min(y0, height)),
               max(0, min(x1, width)), max(0, min(y1, height)))
    if clipped != (x0, y0, x1, y1):
        log.warning("%s: bbox %s clipped to page %dx%d", source, (x0, y0, x1, y1), width, height)
    return BoundingBox(*clipped, page=page)


def _floats(values: list[str]) -> tuple[float, ...]:
    return tuple(float(v) for v in values)


def _parse_word(elem: ET.Element, page: HocrPage, source: str) -> HocrWord | None:
    props = parse_title(elem.get("title"))
    if "bbox" not in props:
        raise MalformedHocr(f"ocrx_word {elem.get('id')!r} has no bbox", source)
    surface = _WS.sub("", "".join(elem.itertext()))
    if not surface:
        return None
    bbox = _bbox(props["bbox"], page.page_index, page.image_width, page.image_height, source)
    wconf = float(props["x_wconf"][0]) if props.get("x_wconf") else 0.0
    char_conf = _floats(props.get("x_conf", []))
    char_boxes = []
    if not char_conf:
        # tesseract's hocr_char_boxes output nests one ocrx_cinfo span per glyph
        confs = []
        for child in elem.iter():
            if child is elem or "ocrx_cinfo" not in _classes(child):
                continue
            cprops = parse_title(child.get("title"))
            if cprops.get("x_conf"):
                confs.append(float(cprops["x_conf"][0]))
            if cprops.get("x_bboxes"):
                char_boxes.append(_bbox(cprops["x_bboxes"], page.page_index,
                                        page.image_width, page.image_height, source))
        char_conf = tuple(confs)
    return HocrWord(surface, bbox, min(max(wconf, 0.0), 100.0), char_conf, tuple(char_boxes))


def read_hocr_pages(data: bytes, source: str = "<bytes>", first_page: int = 0) -> list[HocrPage]:
    try:
        root = parse_bytes(data)
    except ET.ParseError as exc:
        line, col = exc.position
        raise MalformedHocr(str(exc), source, byte_offset(data, line, col)) from None

    pages = []
    for elem in root.iter():
        if "ocr_page" not in _classes(elem):
            continue
        props = parse_title(elem.get("title"))
        if len(props.get("bbox", [])) < 4:
            raise PageDimensionMissing("ocr_page without bbox dimensions", source)
        x0, y0, x1, y1 = (int(float(v)) for v in props["bbox"][:4])
        page = HocrPage(first_page + len(pages), x1 - x0, y1 - y0)
        for word_elem in elem.iter():
            if local_name(word_elem.tag) and "ocrx_word" in _classes(word_elem):
                word = _parse_word(word_elem, page, source)
                if word is not None:
                    page.words.append(word)
        pages.append(page)
    if not pages:
        raise MalformedHocr("no ocr_page element found", source)
    return pages


def parse_hocr(files: Sequence[bytes], kind: str, doc_id: str,
               sources: Sequence[str] | None = None) -> DocumentVersion:
    """One token per non-empty ``ocrx_word``, ids ``word_<k>`` counted across all pages."""
    if kind not in OCR_KINDS:
        raise ValueError(f"hOCR documents must be of kind conv or scan, not {kind!r}")
    sources = list(sources) if sources is not None else [f"<hocr {i}>" for i in range(len(files))]
    tokens, metas = [], []
    dims = []
    for data, source in zip(files, sources):
        pages = read_hocr_pages(data, source, first_page=len(dims))
        dims.extend((p.image_width, p.image_height) for p in pages)
        for page in pages:
            for word in page.words:
                tokens.append(make_token(word.surface, f"word_{len(tokens)}"))
                mismatch = bool(word.char_confidences) and len(word.char_confidences) != len(word.surface)
                metas.append(OcrMeta(word.bbox, word.word_confidence, word.char_confidences,
                                     word.char_bboxes, mismatch))
    return DocumentVersion(doc_id, kind, tuple(tokens), tuple(metas), tuple(dims))
