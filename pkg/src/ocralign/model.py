"""Token-tuple data model shared by ingestion, alignment and evaluation.

Every document version is reduced to an ordered list of ``AlignToken``
tuples (surface string plus an opaque, possibly composite id).  An
``Alignment`` is the list of column pairs produced by the aligner, with
the shared ``GAP`` token padding whichever side has no counterpart.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

GAP_SURFACE = "<<GAP>>"
# Prefixed to real surfaces that would otherwise read as the gap sentinel.
ESCAPE = "\x1b"
ID_SEPARATOR = "+"

KINDS = ("xml", "conv", "scan")
OCR_KINDS = ("conv", "scan")


def escape_surface(surface: str) -> str:
    if surface == GAP_SURFACE or surface.startswith(ESCAPE):
        return ESCAPE + surface
    return surface


def unescape_surface(surface: str) -> str:
    if surface.startswith(ESCAPE):
        return surface[1:]
    return surface


@dataclass(frozen=True)
class TokenId:
    parts: tuple[str, ...]

    def __str__(self) -> str:
        return ID_SEPARATOR.join(self.parts)

    @classmethod
    def parse(cls, rendered: str) -> "TokenId":
        return cls(tuple(rendered.split(ID_SEPARATOR)))

    @classmethod
    def of(cls, part: str) -> "TokenId":
        return cls((part,))

    @classmethod
    def join(cls, ids: Iterable["TokenId"]) -> "TokenId":
        parts: list[str] = []
        for tid in ids:
            parts.extend(tid.parts)
        return cls(tuple(parts))

    def problems(self) -> list[str]:
        if not self.parts:
            return ["token id has no parts"]
        return [f"id part {p!r} is empty or contains {ID_SEPARATOR!r}"
                for p in self.parts if not p or ID_SEPARATOR in p]


@dataclass(frozen=True)
class AlignToken:
    """A ``<token, id>`` tuple.

    The constructor does not validate; use :func:`make_token` for
    surfaces coming from outside, which applies sentinel escaping.
    """

    surface: str
    id: TokenId
    is_gap: bool = False

    def __str__(self) -> str:
        return f"<{unescape_surface(self.surface)}, {self.id}>"


GAP = AlignToken(GAP_SURFACE, TokenId.of("-"), is_gap=True)


def make_token(surface: str, token_id: str | TokenId) -> AlignToken:
    tid = token_id if isinstance(token_id, TokenId) else TokenId.parse(token_id)
    return AlignToken(escape_surface(surface), tid)


@dataclass(frozen=True)
class BoundingBox:
    x0: int
    y0: int
    x1: int
    y1: int
    page: int = 0

    def __post_init__(self):
        if not (0 <= self.x0 <= self.x1 and 0 <= self.y0 <= self.y1 and self.page >= 0):
            raise ValueError(f"invalid bounding box {self}")

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    def to_list(self) -> list[int]:
        return [self.x0, self.y0, self.x1, self.y1, self.page]

    @classmethod
    def from_list(cls, values: Sequence[int]) -> "BoundingBox":
        x0, y0, x1, y1, *rest = values
        return cls(int(x0), int(y0), int(x1), int(y1), int(rest[0]) if rest else 0)


@dataclass(frozen=True)
class OcrMeta:
    bbox: BoundingBox
    word_confidence: float = 0.0
    char_confidences: tuple[float, ...] = ()
    char_bboxes: tuple[BoundingBox, ...] = ()
    length_mismatch: bool = False

    def to_json(self) -> dict:
        out = {
            "bbox": self.bbox.to_list(),
            "word_confidence": self.word_confidence,
            "char_confidences": list(self.char_confidences),
        }
        if self.char_bboxes:
            out["char_bboxes"] = [b.to_list() for b in self.char_bboxes]
        if self.length_mismatch:
            out["length_mismatch"] = True
        return out

    @classmethod
    def from_json(cls, data: dict) -> "OcrMeta":
        return cls(
            bbox=BoundingBox.from_list(data["bbox"]),
            word_confidence=data.get("word_confidence", 0.0),
            char_confidences=tuple(data.get("char_confidences", ())),
            char_bboxes=tuple(BoundingBox.from_list(b) for b in data.get("char_bboxes", ())),
            length_mismatch=bool(data.get("length_mismatch", False)),
        )


@dataclass(frozen=True)
class XmlMeta:
    italic: bool = False
    bold: bool = False
    underline: bool = False
    subscript: bool = False
    superscript: bool = False
    section_path: tuple[str, ...] = ()

    def __post_init__(self):
        if self.subscript and self.superscript:
            raise ValueError("a token cannot be both subscript and superscript")

    def to_json(self) -> dict:
        out = {name: True for name in ("italic", "bold", "underline", "subscript", "superscript")
               if getattr(self, name)}
        out["section_path"] = list(self.section_path)
        return out

    @classmethod
    def from_json(cls, data: dict) -> "XmlMeta":
        return cls(
            italic=bool(data.get("italic", False)),
            bold=bool(data.get("bold", False)),
            underline=bool(data.get("underline", False)),
            subscript=bool(data.get("subscript", False)),
            superscript=bool(data.get("superscript", False)),
            section_path=tuple(data.get("section_path", ())),
        )


@dataclass(frozen=True)
class DocumentVersion:
    doc_id: str
    kind: str
    tokens: tuple[AlignToken, ...]
    meta: tuple = ()
    # (width, height) in pixels of each OCR page image, when known
    pages: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown document kind {self.kind!r}")
        if self.meta and len(self.meta) != len(self.tokens):
            raise ValueError("meta must be empty or parallel to tokens")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def is_ocr(self) -> bool:
        return self.kind in OCR_KINDS

    def meta_for(self, index: int):
        return self.meta[index] if self.meta else None

    def meta_by_part(self) -> dict[str, object]:
        """Map every id part to the meta of the token that carries it."""
        out = {}
        for tok, meta in zip(self.tokens, self.meta):
            for part in tok.id.parts:
                out.setdefault(part, meta)
        return out

    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]


def validate_document(doc: DocumentVersion) -> list[str]:
    violations = []
    seen: dict[TokenId, int] = {}
    for i, tok in enumerate(doc.tokens):
        if tok.is_gap:
            violations.append(f"token {i}: gap token inside a document")
            continue
        if tok.surface == GAP_SURFACE:
            violations.append(f"token {i}: unescaped gap sentinel as surface")
        if not tok.surface:
            violations.append(f"token {i}: empty surface")
        elif any(ch.isspace() for ch in tok.surface):
            violations.append(f"token {i}: surface {tok.surface!r} contains whitespace")
        for problem in tok.id.problems():
            violations.append(f"token {i}: {problem}")
        if tok.id in seen:
            violations.append(f"token {i}: duplicate id {tok.id} (first at token {seen[tok.id]})")
        else:
            seen[tok.id] = i
    if doc.meta:
        expected = XmlMeta if doc.kind == "xml" else OcrMeta
        for i, meta in enumerate(doc.meta):
            if not isinstance(meta, expected):
                violations.append(f"token {i}: meta is not {expected.__name__}")
    return violations


def _compact(value) -> str:
    return json.dumps(value, ensure_ascii=False, separators=(", ", ": "))


def _block(items: list, indent: int) -> str:
    pad = " " * indent
    return "[\n" + ",\n".join(pad + _compact(i) for i in items) + "\n" + " " * (indent - 1) + "]"


def _dumps(obj) -> str:
    """JSON with one list entry per line.

    ``indent=`` would route every document through the pure-Python
    encoder, which dominates run time on long documents.
    """
    if isinstance(obj, list):
        return (_block(obj, 1) if obj else "[]") + "\n"
    lines = []
    for key, value in obj.items():
        body = _block(value, 2) if isinstance(value, list) and value and isinstance(value[0], dict) \
            else _compact(value)
        lines.append(f" {_compact(key)}: {body}")
    return "{\n" + ",\n".join(lines) + "\n}\n"


def document_to_json(doc: DocumentVersion) -> dict:
    tokens = []
    for i, tok in enumerate(doc.tokens):
        entry = {"surface": unescape_surface(tok.surface), "id": str(tok.id)}
        meta = doc.meta_for(i)
        entry["meta"] = meta.to_json() if meta is not None else None
        tokens.append(entry)
    out = {"doc_id": doc.doc_id, "kind": doc.kind, "tokens": tokens}
    if doc.pages:
        out["pages"] = [list(p) for p in doc.pages]
    return out


def document_from_json(data: dict) -> DocumentVersion:
    kind = data["kind"]
    meta_cls = XmlMeta if kind == "xml" else OcrMeta
    tokens, metas = [], []
    for entry in data["tokens"]:
        tokens.append(make_token(entry["surface"], entry["id"]))
        metas.append(None if entry.get("meta") is None else meta_cls.from_json(entry["meta"]))
    if all(m is None for m in metas):
        metas = []
    pages = tuple((int(w), int(h)) for w, h in data.get("pages", ()))
    return DocumentVersion(data["doc_id"], kind, tuple(tokens), tuple(metas), pages)


def dump_document(doc: DocumentVersion) -> str:
    return _dumps(document_to_json(doc))


def load_document(text: str | bytes) -> DocumentVersion:
    return document_from_json(json.loads(text))


Pair = tuple[AlignToken, AlignToken]


@dataclass(frozen=True)
class Alignment:
    """Ordered column pairs; ``left`` is the xml side, ``right`` the ocr side."""

    pairs: tuple[Pair, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[Pair]:
        return iter(self.pairs)

    def left_tokens(self) -> list[AlignToken]:
        return [l for l, _ in self.pairs if not l.is_gap]

    def right_tokens(self) -> list[AlignToken]:
        return [r for _, r in self.pairs if not r.is_gap]

    def matched(self) -> list[Pair]:
        return [(l, r) for l, r in self.pairs if not l.is_gap and not r.is_gap]

    def match_count(self) -> int:
        return sum(1 for l, r in self.pairs if not l.is_gap and not r.is_gap)

    def gap_count(self) -> int:
        return sum(1 for l, r in self.pairs if l.is_gap or r.is_gap)

    def problems(self) -> list[str]:
        return [f"pair {k}: gaps on both sides" for k, (l, r) in enumerate(self.pairs)
                if l.is_gap and r.is_gap]


def flatten_id_parts(tokens: Iterable[AlignToken]) -> list[str]:
    """Id parts in order, collapsing consecutive repeats left by token splits."""
    out: list[str] = []
    for tok in tokens:
        for part in tok.id.parts:
            if not out or out[-1] != part:
                out.append(part)
    return out


def _token_json(tok: AlignToken):
    if tok.is_gap:
        return None
    return {"surface": unescape_surface(tok.surface), "id": str(tok.id)}


def alignment_to_json(alignment: Alignment) -> list:
    return [{"left": _token_json(l), "right": _token_json(r)} for l, r in alignment.pairs]


def alignment_from_json(data: list) -> Alignment:
    def tok(entry):
        return GAP if entry is None else make_token(entry["surface"], entry["id"])
    return Alignment(tuple((tok(p["left"]), tok(p["right"])) for p in data))


def dump_alignment(alignment: Alignment) -> str:
    return _dumps(alignment_to_json(alignment))


def load_alignment(text: str | bytes) -> Alignment:
    return alignment_from_json(json.loads(text))


def format_tuple(tok: AlignToken) -> str:
    """``<surface, id>``; a gap renders as ``<<<GAP>>, ->``."""
    if tok.is_gap:
        return f"<{GAP_SURFACE}, ->"
    return f"<{unescape_surface(tok.surface)}, {tok.id}>"


def format_tokens(tokens: Iterable[AlignToken]) -> str:
    return "".join(format_tuple(t) + "\n" for t in tokens)


def format_listing(alignment: Alignment, column: int = 28) -> str:
    """Two-column tuple listing with the ocr side left and the xml side right."""
    lines = []
    for left, right in alignment.pairs:
        lines.append(f"{format_tuple(right):<{column}} {format_tuple(left)}".rstrip() + "\n")
    return "".join(lines)


def parse_listing(text: str) -> Alignment:
    """Inverse of :func:`format_listing` for surfaces without ``, `` or ``>``."""
    pairs = []
    for line in text.splitlines():
        if not line.strip():
            continue
        cells = re.findall(r"<(.*?), ([^<>]+?)>", line)
        if len(cells) != 2:
            raise ValueError(f"cannot read listing line {line!r}")
        (osurf, oid), (xsurf, xid) = cells
        ocr = GAP if osurf == GAP_SURFACE else make_token(osurf, oid)
        xml = GAP if xsurf == GAP_SURFACE else make_token(xsurf, xid)
        pairs.append((xml, ocr))
    return Alignment(tuple(pairs))


def parse_tokens(text: str) -> list[AlignToken]:
    """Inverse of :func:`format_tokens`."""
    out = []
    for line in text.splitlines():
        if line.strip():
            m = re.fullmatch(r"<(.*), ([^<>]+)>", line.strip())
            if m is None:
                raise ValueError(f"cannot read token line {line!r}")
            out.append(make_token(m.group(1), m.group(2)))
    return out
