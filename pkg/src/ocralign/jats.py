"""JATS ``.nxml`` full text → ``DocumentVersion`` of kind ``xml``.

Text is taken from a configurable element subset of ``<article-meta>``
and ``<body>``; ``<back>`` (and thus the reference list) is never read.
Formatting elements set per-token flags, and ``<sub>``/``<sup>``
boundaries always end a token, so ``KHSO<sub>3</sub>`` yields the two
tokens ``KHSO`` and ``3``.
"""

from __future__ import annotations

import unicodedata
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from .errors import EmptyDocument, MalformedXml
from .model import DocumentVersion, XmlMeta, make_token
from .texmath import flatten_tex_math
from .xmlutil import parse_bytes, qualified_name

DEFAULT_META = frozenset({"article-title", "surname", "given-names", "xref", "email", "aff", "abstract"})
DEFAULT_BODY = frozenset({"sec", "p", "tr", "td", "label", "caption", "title"})
DEFAULT_FORMATTING = frozenset({"italic", "bold", "underline", "sup", "sub"})

# never descended into, even inside an emitting element
SKIPPED = frozenset({"ref-list", "graphic", "inline-graphic", "media", "object-id", "mml:annotation"})

# inline wrappers that neither end a token nor enter the section path
TRANSPARENT = frozenset({"sc", "monospace", "roman", "sans-serif", "named-content",
                         "styled-content", "inline-formula", "overline", "strike"})

HYPHEN = "-"


@dataclass(frozen=True)
class JatsExtractionConfig:
    meta_elements: frozenset[str] = DEFAULT_META
    body_elements: frozenset[str] = DEFAULT_BODY
    formatting_elements: frozenset[str] = DEFAULT_FORMATTING
    control_words: str = "table"

    def __post_init__(self):
        object.__setattr__(self, "meta_elements", frozenset(self.meta_elements))
        object.__setattr__(self, "body_elements", frozenset(self.body_elements))
        object.__setattr__(self, "formatting_elements",
                           frozenset(self.formatting_elements) | {"sub", "sup"})
        if not self.meta_elements or not self.body_elements:
            raise ValueError("element sets must be non-empty")
        if self.control_words not in ("table", "strip"):
            raise ValueError("control_words must be 'table' or 'strip'")


@dataclass(frozen=True)
class _Style:
    italic: bool = False
    bold: bool = False
    underline: bool = False
    script: str = ""  # "", "sub" or "sup"; innermost wins
    path: tuple[str, ...] = ()

    def with_element(self, name: str) -> "_Style":
        if name == "italic":
            return _Style(True, self.bold, self.underline, self.script, self.path)
        if name == "bold":
            return _Style(self.italic, True, self.underline, self.script, self.path)
        if name == "underline":
            return _Style(self.italic, self.bold, True, self.script, self.path)
        if name in ("sub", "sup"):
            return _Style(self.italic, self.bold, self.underline, name, self.path)
        return _Style(self.italic, self.bold, self.underline, self.script, self.path + (name,))


@dataclass
class _Collector:
    """Accumulates styled characters; ``brk`` forces a token boundary."""

    chars: list[tuple[str, _Style]] = field(default_factory=list)
    tokens: list[tuple[str, XmlMeta]] = field(default_factory=list)

    def text(self, text: str | None, style: _Style) -> None:
        if text:
            self.chars.extend((ch, style) for ch in text)

    def brk(self) -> None:
        chunk: list[tuple[str, _Style]] = []
        for ch, style in self.chars:
            if ch.isspace():
                self._chunk(chunk)
                chunk = []
            else:
                chunk.append((ch, style))
        self._chunk(chunk)
        self.chars = []

    def _chunk(self, chunk: list[tuple[str, _Style]]) -> None:
        for piece in split_chunk(chunk):
            styles = [s for _, s in piece]
            first = styles[0]
            meta = XmlMeta(
                italic=any(s.italic for s in styles),
                bold=any(s.bold for s in styles),
                underline=any(s.underline for s in styles),
                subscript=first.script == "sub",
                superscript=first.script == "sup",
                section_path=first.path,
            )
            self.tokens.append(("".join(ch for ch, _ in piece), meta))


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def split_chunk(chunk: list) -> list[list]:
    """Split one whitespace-free chunk of ``(char, style)`` items.

    Leading and trailing punctuation characters become one-character
    tokens, and every ``-`` is a token of its own.
    """
    if not chunk:
        return []
    lead, trail = [], []
    start, end = 0, len(chunk)
    while start < end and _is_punct(chunk[start][0]):
        lead.append([chunk[start]])
        start += 1
    while end > start and _is_punct(chunk[end - 1][0]):
        trail.append([chunk[end - 1]])
        end -= 1
    middle: list[list] = []
    current: list = []
    for item in chunk[start:end]:
        if item[0] == HYPHEN:
            if current:
                middle.append(current)
                current = []
            middle.append([item])
        else:
            current.append(item)
    if current:
        middle.append(current)
    return lead + middle + trail[::-1]


class _Walker:
    def __init__(self, config: JatsExtractionConfig):
        self.config = config
        self.out = _Collector()

    def walk(self, elem: ET.Element, active: frozenset[str], emitting: bool, style: _Style) -> None:
        name = qualified_name(elem.tag)
        if name in SKIPPED:
            return
        if name == "tex-math":
            if emitting:
                self.tex(elem, style)
            return
        if name == "alternatives" and any(qualified_name(c.tag) == "tex-math" for c in elem):
            for child in elem:
                if qualified_name(child.tag) == "tex-math":
                    self.walk(child, active, emitting, style)
            return
        is_format = (name in self.config.formatting_elements or name in TRANSPARENT
                     or name.startswith("mml:"))
        emitting = emitting or name in active
        inner = style.with_element(name) if name in self.config.formatting_elements else style
        if not is_format:
            inner = style.with_element(name)
            self.out.brk()
        elif inner.script != style.script:
            self.out.brk()

        if emitting:
            self.out.text(elem.text, inner)
        if name in ("mml:msub", "mml:msup") and len(elem) >= 2:
            self.walk(elem[0], active, emitting, inner)
            self.out.brk()
            self.walk(elem[1], active, emitting, inner.with_element(name[5:]))
            self.out.brk()
            rest = list(elem)[2:]
            tails = list(elem)[:2]
        else:
            rest = list(elem)
            tails = []
        for child in tails:
            if emitting:
                self.out.text(child.tail, inner)
        for child in rest:
            self.walk(child, active, emitting, inner)
            if emitting:
                self.out.text(child.tail, inner)

        if not is_format or inner.script != style.script:
            self.out.brk()

    def tex(self, elem: ET.Element, style: _Style) -> None:
        self.out.brk()
        for text, sub, sup in flatten_tex_math("".join(elem.itertext()), self.config.control_words):
            script = "sub" if sub else "sup" if sup else ""
            if script:
                self.out.brk()
                self.out.text(text, style.with_element(script))
                self.out.brk()
            else:
                self.out.text(text, style)
        self.out.brk()


def _find(root: ET.Element, name: str) -> list[ET.Element]:
    return [e for e in root.iter() if qualified_name(e.tag) == name]


def parse_jats(nxml: bytes, config: JatsExtractionConfig | None = None,
               doc_id: str = "", source: str = "<nxml>") -> DocumentVersion:
    config = config or JatsExtractionConfig()
    try:
        root = parse_bytes(nxml)
    except ET.ParseError as exc:
        line, col = exc.position
        raise MalformedXml(str(exc), f"{source}:{line}:{col}") from None

    walker = _Walker(config)
    for region, active in (("article-meta", config.meta_elements), ("body", config.body_elements)):
        for elem in _find(root, region)[:1]:
            walker.walk(elem, active, False, _Style(path=()))
            walker.out.brk()

    if not walker.out.tokens:
        raise EmptyDocument(f"{source}: no text extracted")
    tokens = tuple(make_token(surface, f"word_{k}") for k, (surface, _) in enumerate(walker.out.tokens))
    metas = tuple(meta for _, meta in walker.out.tokens)
    if not doc_id:
        doc_id = _article_doi(root) or source
    return DocumentVersion(doc_id, "xml", tokens, metas)


def _article_doi(root: ET.Element) -> str | None:
    for elem in _find(root, "article-id"):
        if elem.get("pub-id-type") == "doi" and elem.text:
            return elem.text.strip()
    return None
