import pytest
from hypothesis import given, settings, strategies as st
from PIL import Image

from ocralign.aligner import global_align
from ocralign.applications import (
    GroundTruthItem, dump_groundtruth, export_groundtruth, transfer_highlights, write_crops,
)
from ocralign.errors import MissingPageImage, UnknownTokenId
from ocralign.fixers import post_force_align
from ocralign.highlight import HighlightRecord
from ocralign.model import GAP, Alignment, BoundingBox, DocumentVersion, OcrMeta, TokenId, XmlMeta, make_token


def rec(tid, cov):
    return HighlightRecord(TokenId.parse(tid), cov, BoundingBox(0, 0, 1, 1))


def out(result):
    return [(str(t.token_id), t.coverage_percent) for t in result]


def test_matched_token_gets_coverage():
    a = Alignment(((make_token("KHSO", "x7"), make_token("KHSO", "word_3")),))
    res = transfer_highlights(a, [rec("word_3", 80.0)])
    assert out(res.transfers) == [("x7", 80.0)] and not res.untransferable


def test_gap_partner_is_untransferable():
    a = Alignment(((make_token("a", "x0"), make_token("a", "o0")), (GAP, make_token("2", "o1"))))
    res = transfer_highlights(a, [rec("o1", 60.0)])
    assert not res.transfers and out(res.untransferable) == [("o1", 60.0)]


def test_run_of_five_keeps_order():
    xs = [make_token(s, f"x{k}") for k, s in enumerate("abcde")]
    os_ = [make_token(s, f"o{k}") for k, s in enumerate("abcde")]
    a = global_align(xs, os_)
    res = transfer_highlights(a, [rec(f"o{k}", 50.0 + k) for k in (4, 2, 0, 3, 1)])
    assert out(res.transfers) == [(f"x{k}", 50.0 + k) for k in range(5)]


def test_merged_ocr_token_takes_largest_coverage():
    a = Alignment(((make_token("phenyl", "x1"), make_token("phenyl", "o3+o4")),))
    res = transfer_highlights(a, [rec("o3", 55.0), rec("o4", 90.0)])
    assert out(res.transfers) == [("x1", 90.0)]


def test_unknown_token_id():
    a = Alignment(((make_token("a", "x0"), make_token("a", "o0")),))
    with pytest.raises(UnknownTokenId):
        transfer_highlights(a, [rec("o9", 70.0)])


@settings(max_examples=80, deadline=None)
@given(st.lists(st.sampled_from("abc"), max_size=12), st.lists(st.sampled_from("abc"), max_size=12),
       st.data())
def test_every_highlight_is_accounted_for_once(x, o, data):
    xs = [make_token(s, f"x{k}") for k, s in enumerate(x)]
    os_ = [make_token(s, f"o{k}") for k, s in enumerate(o)]
    a = global_align(xs, os_)
    chosen = data.draw(st.sets(st.integers(0, max(len(o) - 1, 0)))) if o else set()
    res = transfer_highlights(a, [rec(f"o{k}", 75.0) for k in chosen])
    assert len(res.transfers) + len(res.untransferable) == len(chosen)
    partner = {str(r.id): str(l.id) for l, r in a.matched()}
    assert sorted(str(t.token_id) for t in res.transfers) == sorted(partner[f"o{k}"] for k in chosen
                                                                    if f"o{k}" in partner)


def ocr_doc(surfaces, boxes):
    toks = tuple(make_token(s, f"word_{k}") for k, s in enumerate(surfaces))
    return DocumentVersion("d", "scan", toks, tuple(OcrMeta(b) for b in boxes), ((100, 100), (100, 100)))


def xml_doc(surfaces, metas):
    toks = tuple(make_token(s, f"x{k}") for k, s in enumerate(surfaces))
    return DocumentVersion("d", "xml", toks, tuple(metas))


@pytest.fixture
def pages(tmp_path):
    paths = []
    for k in range(2):
        p = tmp_path / f"page_{k}.png"
        Image.new("RGB", (100, 100), (255, 255, 255)).save(p)
        paths.append(p)
    return paths


def test_forced_beta_pair_becomes_item(pages):
    xml = xml_doc(["metallo", "-", "β"], [XmlMeta()] * 3)
    ocr = ocr_doc(["metallo", "-", "B"], [BoundingBox(0, 0, 30, 10), BoundingBox(31, 0, 35, 10),
                                          BoundingBox(36, 0, 44, 10, 1)])
    a = post_force_align(global_align(xml.tokens, ocr.tokens), 5)
    (item,) = export_groundtruth(a, ocr, pages, xml)
    assert (item.ocr_surface, item.correct_surface) == ("B", "β")
    assert item.bbox.to_list() == [36, 0, 44, 10, 1]
    assert item.image_path == str(pages[1])
    assert not item.subscript


def test_perfect_pair_gives_no_item(pages):
    ocr = ocr_doc(["a"], [BoundingBox(0, 0, 5, 5)])
    a = Alignment(((make_token("a", "x0"), ocr.tokens[0]),))
    assert export_groundtruth(a, ocr, pages) == []


def test_subscript_flags_travel_with_the_correct_text(pages):
    xml = xml_doc(["k", "obs"], [XmlMeta(), XmlMeta(subscript=True)])
    ocr = ocr_doc(["kyps", "ohs"], [BoundingBox(0, 0, 20, 10), BoundingBox(40, 0, 58, 10)])
    merged = make_token("kobs", "x0+x1")
    a = Alignment(((merged, ocr.tokens[0]),))
    (item,) = export_groundtruth(a, ocr, pages, xml)
    assert item.correct_segments == (("k", False, False), ("obs", True, False))
    assert item.subscript and item.correct_markup == "k<sub>obs</sub>"
    a2 = Alignment(((xml.tokens[1], ocr.tokens[1]),))
    (item2,) = export_groundtruth(a2, ocr, pages, xml)
    assert item2.subscript and item2.to_json()["correct_markup"] == "<sub>obs</sub>"


def test_composite_ocr_side_uses_union_box(pages):
    ocr = ocr_doc(["1", "t"], [BoundingBox(0, 0, 5, 10), BoundingBox(6, 2, 12, 12)])
    a = Alignment(((make_token("it", "x0"), make_token("1t", "word_0+word_1")),))
    (item,) = export_groundtruth(a, ocr, pages)
    assert item.bbox.to_list() == [0, 0, 12, 12, 0]


def test_missing_page_image(tmp_path, pages):
    ocr = ocr_doc(["B"], [BoundingBox(0, 0, 5, 5, 1)])
    a = Alignment(((make_token("β", "x0"), ocr.tokens[0]),))
    with pytest.raises(MissingPageImage):
        export_groundtruth(a, ocr, pages[:1])
    with pytest.raises(MissingPageImage):
        export_groundtruth(a, ocr, [pages[0], tmp_path / "absent.png"])
    assert len(export_groundtruth(a, ocr, ["p0", "p1"], check_exists=False)) == 1


def test_item_needs_differing_surfaces():
    with pytest.raises(ValueError):
        GroundTruthItem("p.png", BoundingBox(0, 0, 1, 1), "x", "x")


def test_write_crops(tmp_path, pages):
    items = [GroundTruthItem(str(pages[0]), BoundingBox(10, 20, 40, 30), "B", "β"),
             GroundTruthItem(str(pages[1]), BoundingBox(0, 0, 5, 5), "1t", "it")]
    written = write_crops(items, tmp_path / "crops")
    assert [p.name for p in written] == ["00000.png", "00001.png"]
    with Image.open(written[0]) as im:
        assert im.size == (30, 10)
    assert (tmp_path / "crops" / "00000.gt.txt").read_text(encoding="utf-8") == "β\n"
    assert '"correct_surface": "β"' in dump_groundtruth(items)
