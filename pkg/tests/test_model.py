import json

import pytest
from hypothesis import given, strategies as st

from conftest import toks
from ocralign.model import (
    ESCAPE, GAP, GAP_SURFACE, AlignToken, Alignment, BoundingBox, DocumentVersion, OcrMeta, TokenId,
    XmlMeta, alignment_from_json, alignment_to_json, dump_alignment, dump_document, flatten_id_parts,
    format_listing, format_tokens, load_alignment, load_document, make_token, parse_listing,
    parse_tokens, unescape_surface, validate_document,
)


def test_valid_minimal_document_has_no_violations():
    d = DocumentVersion("d", "xml", (make_token("a", "w1"), make_token("b", "w2")))
    assert validate_document(d) == []


def test_duplicate_id_is_one_violation_naming_it():
    d = DocumentVersion("d", "xml", (make_token("a", "w1"), make_token("b", "w1")))
    problems = validate_document(d)
    assert len(problems) == 1
    assert "w1" in problems[0]


def test_raw_sentinel_surface_is_flagged():
    d = DocumentVersion("d", "xml", (AlignToken(GAP_SURFACE, TokenId.of("w1")),))
    assert len(validate_document(d)) == 1


def test_ingestion_escaping_avoids_the_sentinel_violation():
    tok = make_token(GAP_SURFACE, "w1")
    assert tok.surface == ESCAPE + GAP_SURFACE and not tok.is_gap
    assert unescape_surface(tok.surface) == GAP_SURFACE
    assert validate_document(DocumentVersion("d", "xml", (tok,))) == []


@pytest.mark.parametrize("surface", ["", "a b", "tab\there"])
def test_empty_or_whitespace_surfaces_are_flagged(surface):
    d = DocumentVersion("d", "xml", (AlignToken(surface, TokenId.of("w1")),))
    assert len(validate_document(d)) == 1


def test_gap_inside_document_is_flagged():
    assert validate_document(DocumentVersion("d", "conv", (GAP,)))


def test_wrong_meta_type_is_flagged():
    d = DocumentVersion("d", "xml", (make_token("a", "w1"),), (OcrMeta(BoundingBox(0, 0, 1, 1)),))
    assert validate_document(d)


def test_token_id_rendering():
    assert str(TokenId.of("word_853")) == "word_853"
    joined = TokenId.join([TokenId.of("word_3084"), TokenId.of("word_3085")])
    assert str(joined) == "word_3084+word_3085"
    assert TokenId.parse("word_3084+word_3085") == joined
    assert TokenId(("a+b",)).problems()


part = st.text(st.characters(blacklist_characters="+", blacklist_categories=("Cs",)), min_size=1)


@given(st.lists(part, min_size=1, max_size=5), st.lists(part, min_size=1, max_size=5))
def test_token_id_rendering_is_injective(a, b):
    if a != b:
        assert str(TokenId(tuple(a))) != str(TokenId(tuple(b)))
    assert TokenId.parse(str(TokenId(tuple(a)))).parts == tuple(a)


def test_bounding_box_invariants():
    with pytest.raises(ValueError):
        BoundingBox(5, 0, 4, 1)
    with pytest.raises(ValueError):
        BoundingBox(-1, 0, 4, 1)
    assert BoundingBox.from_list([1, 2, 3, 4, 5]) == BoundingBox(1, 2, 3, 4, 5)


def test_xml_meta_rejects_sub_and_sup():
    with pytest.raises(ValueError):
        XmlMeta(subscript=True, superscript=True)


surface = st.text(st.characters(blacklist_categories=("Zs", "Cc", "Cs", "Zl", "Zp"),
                                blacklist_characters="\x1c\x1d\x1e\x1f\x85"), min_size=1, max_size=8)


@st.composite
def documents(draw):
    kind = draw(st.sampled_from(["xml", "conv", "scan"]))
    surfaces = draw(st.lists(st.one_of(surface, st.just(GAP_SURFACE)), max_size=8))
    tokens = tuple(make_token(s, f"word_{k}") for k, s in enumerate(surfaces))
    if kind == "xml":
        meta = tuple(XmlMeta(italic=draw(st.booleans()), subscript=draw(st.booleans()),
                             section_path=("body", "p")) for _ in tokens)
        pages = ()
    else:
        meta = tuple(OcrMeta(BoundingBox(1, 2, 3 + k, 4, draw(st.integers(0, 2))), float(draw(st.integers(0, 100))),
                             (50.0,) * draw(st.integers(0, 2))) for k, _ in enumerate(tokens))
        pages = ((2550, 3300),) * 3
    return DocumentVersion("10.1/x", kind, tokens, meta, pages)


@given(documents())
def test_document_serialization_round_trip_is_byte_identical(d):
    once = dump_document(d)
    again = dump_document(load_document(once))
    assert once == again
    assert load_document(once) == d


def test_serialized_document_has_contract_fields():
    d = DocumentVersion("10.1/x", "xml", (make_token("ZnCl", "word_0"),), (XmlMeta(),))
    data = json.loads(dump_document(d))
    assert set(data) == {"doc_id", "kind", "tokens"}
    assert set(data["tokens"][0]) == {"surface", "id", "meta"}


def test_escaped_token_round_trips_through_json():
    d = DocumentVersion("d", "conv", (make_token(GAP_SURFACE, "word_0"),))
    data = json.loads(dump_document(d))
    assert data["tokens"][0]["surface"] == GAP_SURFACE
    assert load_document(dump_document(d)).tokens[0].surface == ESCAPE + GAP_SURFACE


def test_alignment_json_encodes_gaps_as_null():
    a = Alignment(((make_token("a", "x0"), GAP), (GAP, make_token("b", "o0"))))
    assert alignment_to_json(a) == [{"left": {"surface": "a", "id": "x0"}, "right": None},
                                    {"left": None, "right": {"surface": "b", "id": "o0"}}]
    assert alignment_from_json(alignment_to_json(a)) == a
    assert load_alignment(dump_alignment(a)) == a


def test_alignment_projections_and_counts():
    x = toks("a b c", "x")
    o = toks("a c", "o")
    a = Alignment(((x[0], o[0]), (x[1], GAP), (x[2], o[1])))
    assert a.left_tokens() == x and a.right_tokens() == o
    assert a.match_count() == 2 and a.gap_count() == 1
    assert len([p for p in a.pairs if not p[0].is_gap]) == len(x)
    assert Alignment(((GAP, GAP),)).problems()


def test_flatten_id_parts_collapses_split_tokens():
    split = [make_token("KHSO", "w1"), make_token("3", "w1"), make_token("x", "w2+w3")]
    assert flatten_id_parts(split) == ["w1", "w2", "w3"]


def test_listing_round_trip():
    a = Alignment(((make_token("β", "word_548"), GAP), (GAP, make_token("B", "word_855")),
                   (make_token(",", "word_998"), make_token(",", "word_1644"))))
    text = format_listing(a)
    assert text.splitlines()[0].rstrip().endswith("<β, word_548>")
    assert text.splitlines()[0].startswith("<<<GAP>>, ->")
    assert parse_listing(text) == a
    tokens = [make_token("phenyl", "word_3084+word_3085")]
    assert format_tokens(tokens) == "<phenyl, word_3084+word_3085>\n"
    assert parse_tokens(format_tokens(tokens)) == tokens
