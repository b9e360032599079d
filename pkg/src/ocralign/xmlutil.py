"""Small helpers around ElementTree for the two XML-ish input formats."""

from __future__ import annotations

import html.entities
import re
import xml.etree.ElementTree as ET

_XML_ENTITIES = {"amp", "lt", "gt", "quot", "apos"}
_ENTITY_RE = re.compile(rb"&([A-Za-z][A-Za-z0-9]*);")


def _replace_entity(match: re.Match) -> bytes:
    name = match.group(1).decode("ascii")
    if name in _XML_ENTITIES:
        return match.group(0)
    char = html.entities.html5.get(name + ";")
    if char is None:
        return match.group(0)
    return char.encode("utf-8")


def resolve_named_entities(data: bytes) -> bytes:
    """Replace HTML named entities (``&beta;``, ``&nbsp;``) by UTF-8 text."""
    return _ENTITY_RE.sub(_replace_entity, data)


def byte_offset(data: bytes, line: int, column: int) -> int:
    lines = data.split(b"\n")
    return sum(len(l) + 1 for l in lines[: max(line - 1, 0)]) + column


def parse_bytes(data: bytes) -> ET.Element:
    """Parse, retrying once with named entities resolved.

    Raises the ``ET.ParseError`` of the *first* attempt so positions refer
    to the caller's bytes.
    """
    try:
        return ET.fromstring(data)
    except ET.ParseError as first:
        resolved = resolve_named_entities(data)
        if resolved == data:
            raise
        try:
            return ET.fromstring(resolved)
        except ET.ParseError:
            raise first from None


def local_name(tag) -> str:
    if not isinstance(tag, str):
        return ""
    return tag.rsplit("}", 1)[-1]


def qualified_name(tag) -> str:
    """``{ns}name`` → ``prefix:name`` for the MathML namespace, else local."""
    if not isinstance(tag, str):
        return ""
    if tag.startswith("{http://www.w3.org/1998/Math/MathML}"):
        return "mml:" + local_name(tag)
    return local_name(tag)
