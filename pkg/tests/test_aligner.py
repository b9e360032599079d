import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import doc, toks
from oracles import brute_force_lcs
from ocralign.aligner import (
    MERGE_SEPARATOR, AlignerConfig, CompressionMap, Replacement, align_documents, align_tokens, expand,
    global_align, lcs_table, precompress,
)
from ocralign.errors import CapacityExceeded, InconsistentMap
from ocralign.fixers import FixerConfig
from ocralign.model import GAP, Alignment, AlignToken, TokenId


def surfaces(pairs):
    return [(l.surface if not l.is_gap else None, r.surface if not r.is_gap else None) for l, r in pairs]


def test_identity():
    a = global_align(toks("a b", "x"), toks("a b", "o"))
    assert surfaces(a.pairs) == [("a", "a"), ("b", "b")]
    assert a.gap_count() == 0


def test_metallo_beta_mismatch_becomes_two_gap_pairs():
    xml = toks(["metallo", "-", "β", "-", "lactamase"], "x")
    ocr = toks(["metallo", "-", "B", "-", "lactamase"], "o")
    a = global_align(xml, ocr)
    assert surfaces(a.pairs) == [("metallo", "metallo"), ("-", "-"), ("β", None), (None, "B"),
                                 ("-", "-"), ("lactamase", "lactamase")]


def test_mismatches_are_never_paired():
    rng = random.Random(3)
    for _ in range(200):
        xs = toks([rng.choice("ab") for _ in range(rng.randint(0, 8))], "x")
        os_ = toks([rng.choice("ab") for _ in range(rng.randint(0, 8))], "o")
        for l, r in global_align(xs, os_).pairs:
            assert l.is_gap or r.is_gap or l.surface == r.surface


def test_tie_break_consumes_xml_before_ocr():
    a = global_align(toks("a", "x"), toks("b", "o"))
    assert surfaces(a.pairs) == [("a", None), (None, "b")]


def test_empty_sides():
    assert global_align([], []).pairs == ()
    assert surfaces(global_align(toks("a b", "x"), []).pairs) == [("a", None), ("b", None)]
    assert surfaces(global_align([], toks("c", "o")).pairs) == [(None, "c")]


lists = st.lists(st.sampled_from("abc"), max_size=10)


@settings(max_examples=300, deadline=None)
@given(lists, lists)
def test_match_count_equals_brute_force_lcs(x, o):
    a = global_align(toks(x, "x"), toks(o, "o"))
    assert a.match_count() == brute_force_lcs(x, o)
    assert a.left_tokens() == toks(x, "x") and a.right_tokens() == toks(o, "o")
    assert not a.problems()


@settings(max_examples=100, deadline=None)
@given(lists, lists)
def test_lcs_table_entries_are_suffix_lcs(x, o):
    t = lcs_table(x, o)
    for i in range(len(x) + 1):
        for j in range(len(o) + 1):
            if (i + j) % 3 == 0:
                assert t[i, j] == brute_force_lcs(x[i:], o[j:])


def test_capacity_exceeded():
    with pytest.raises(CapacityExceeded):
        global_align(toks("a b c", "x"), toks("a b c", "o"), cell_budget=15)


def test_full_match_compresses_to_two_blocks():
    xml = toks([f"t{k}" for k in range(40)], "x")
    ocr = toks([f"t{k}" for k in range(40)], "o")
    cx, co, cmap = precompress(xml, ocr, 20)
    assert len(cx) == len(co) == 2 and len(cmap) == 2
    assert cx[0].surface == MERGE_SEPARATOR.join(f"t{k}" for k in range(20))
    assert str(cx[0].id) == "+".join(f"x{k}" for k in range(20))
    assert [r.left_start for r in cmap.replacements] == [0, 20]


def test_no_common_run_means_identity_output():
    xml, ocr = toks("a b c", "x"), toks("a x c", "o")
    cx, co, cmap = precompress(xml, ocr, 2)
    assert cx == xml and co == ocr and len(cmap) == 0


def _brute_force_unique_common_runs(xs, os_, p):
    """Maximal runs whose every p-gram is unique in both lists and at the same offset."""
    def unique(seq):
        grams = {}
        for i in range(len(seq) - p + 1):
            g = tuple(seq[i:i + p])
            grams.setdefault(g, []).append(i)
        return {g: v[0] for g, v in grams.items() if len(v) == 1}
    ux, uo = unique(xs), unique(os_)
    starts = sorted((i, uo[g]) for g, i in ux.items() if g in uo)
    runs = []
    for i, j in starts:
        if runs and runs[-1][0] + runs[-1][2] == i + p - 1 and runs[-1][1] + runs[-1][2] == j + p - 1:
            runs[-1][2] += 1
        else:
            runs.append([i, j, p])
    return runs


def test_shared_unique_run_of_25_gives_one_block():
    rng = random.Random(7)
    vocab = [f"v{k}" for k in range(5000)]
    rng.shuffle(vocab)
    run = vocab[:25]
    xs = vocab[100:188] + run + vocab[200:287]
    os_ = vocab[300:350] + run + vocab[400:525]
    assert len(xs) == len(os_) == 200
    runs = _brute_force_unique_common_runs(xs, os_, 20)
    assert runs == [[88, 50, 25]]
    cx, co, cmap = precompress(toks(xs, "x"), toks(os_, "o"), 20)
    assert len(cmap) == 1
    rep = cmap.replacements[0]
    assert (rep.left_start, rep.right_start, rep.length) == (88, 50, 20)
    assert len(cx) == 200 - 19 and len(co) == 200 - 19
    aligned = expand(global_align(cx, co), cmap)
    assert aligned.left_tokens() == toks(xs, "x") and aligned.right_tokens() == toks(os_, "o")


def test_expand_matched_block_and_gap_block():
    left = tuple(toks([f"A{k}" for k in range(20)], "x"))
    right = tuple(toks([f"A{k}" for k in range(20)], "o"))
    rep = Replacement(0, 0, AlignToken(MERGE_SEPARATOR.join(t.surface for t in left), TokenId.join(t.id for t in left)),
                      AlignToken(MERGE_SEPARATOR.join(t.surface for t in right), TokenId.join(t.id for t in right)),
                      left, right)
    cmap = CompressionMap(20, (rep,))
    out = expand(Alignment(((rep.merged_left, rep.merged_right),)), cmap)
    assert out.pairs == tuple(zip(left, right))
    out = expand(Alignment(((rep.merged_left, GAP),)), cmap)
    assert out.pairs == tuple((t, GAP) for t in left)


def test_expand_rejects_unknown_merged_tuple():
    stray = AlignToken("a" + MERGE_SEPARATOR + "b", TokenId.of("x"))
    with pytest.raises(InconsistentMap):
        expand(Alignment(((stray, GAP),)), CompressionMap(2))


def test_block_size_must_be_at_least_two():
    with pytest.raises(ValueError):
        precompress([], [], 1)
    with pytest.raises(ValueError):
        AlignerConfig(pre_compress_block=1)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from("abcdefgh"), max_size=30), st.lists(st.sampled_from("abcdefgh"), max_size=30),
       st.integers(2, 4))
def test_compression_round_trip_projects_to_inputs(x, o, p):
    xs, os_ = toks(x, "x"), toks(o, "o")
    cx, co, cmap = precompress(xs, os_, p)
    assert len(cx) <= len(xs) and len(co) <= len(os_)
    spans = [(r.left_start, r.right_start) for r in cmap.replacements]
    assert spans == sorted(spans)
    for a, b in zip(cmap.replacements, cmap.replacements[1:]):
        assert a.left_start + p <= b.left_start and a.right_start + p <= b.right_start
    for r in cmap.replacements:
        assert [t.surface for t in r.left_tokens] == [t.surface for t in r.right_tokens]
        assert r.length == p
    a = align_tokens(xs, os_, AlignerConfig(pre_compress_block=p))
    assert a.left_tokens() == xs and a.right_tokens() == os_


def test_align_tokens_is_deterministic():
    rng = random.Random(11)
    x = [rng.choice("abcde") for _ in range(300)]
    o = [rng.choice("abcde") for _ in range(300)]
    assert align_tokens(toks(x, "x"), toks(o, "o")) == align_tokens(toks(x, "x"), toks(o, "o"))


def test_align_documents_identity_and_kind_checks():
    x, o = doc("a b c", "xml"), doc("a b c", "conv")
    a = align_documents(x, o)
    assert a.match_count() == 3 and a.gap_count() == 0
    with pytest.raises(ValueError):
        align_documents(o, x)


def test_align_documents_phenyl_with_and_without_pre_join():
    x = doc("the chloro phenyl ring", "xml")
    o = doc("the chloro phen yl ring", "scan")
    on = align_documents(x, o, fixers=FixerConfig(pre_join=True))
    assert ("phenyl", "phenyl") in surfaces(on.pairs)
    off = align_documents(x, o)
    assert ("phenyl", None) in surfaces(off.pairs)
