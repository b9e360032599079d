"""Global token alignment with identity scoring and run pre-compression.

Scoring is match = 1, mismatch = 0, gap = 0, so the optimal score is the
length of the longest common subsequence of the two surface sequences.
The DP table holds suffix LCS lengths and each row is computed with one
reverse cumulative maximum, which keeps documents of tens of thousands
of tokens tractable in numpy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import CapacityExceeded, InconsistentMap
from .model import GAP, AlignToken, Alignment, DocumentVersion, TokenId, OCR_KINDS

MERGE_SEPARATOR = "\x1f"
DEFAULT_CELL_BUDGET = 400_000_000
# above this many candidate blocks, block selection falls back to greedy
_MAX_DP_BLOCKS = 4000


@dataclass(frozen=True)
class AlignerConfig:
    pre_compress_block: int = 20
    cell_budget: int = DEFAULT_CELL_BUDGET
    # fixed: diagonal match, then consume xml, then consume ocr
    traceback_preference: str = "match-xml-ocr"

    def __post_init__(self):
        if self.pre_compress_block < 2:
            raise ValueError("pre_compress_block must be >= 2")
        if self.traceback_preference != "match-xml-ocr":
            raise ValueError("only the 'match-xml-ocr' traceback preference is supported")


@dataclass(frozen=True)
class Replacement:
    left_start: int
    right_start: int
    merged_left: AlignToken
    merged_right: AlignToken
    left_tokens: tuple[AlignToken, ...]
    right_tokens: tuple[AlignToken, ...]

    @property
    def length(self) -> int:
        return len(self.left_tokens)


@dataclass(frozen=True)
class CompressionMap:
    block: int
    replacements: tuple[Replacement, ...] = ()
    _by_token: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        index = {}
        for rep in self.replacements:
            index[rep.merged_left] = rep.left_tokens
            index[rep.merged_right] = rep.right_tokens
        object.__setattr__(self, "_by_token", index)

    def __len__(self) -> int:
        return len(self.replacements)

    def originals(self, token: AlignToken) -> tuple[AlignToken, ...] | None:
        return self._by_token.get(token)


def _merge(tokens: Sequence[AlignToken]) -> AlignToken:
    return AlignToken(MERGE_SEPARATOR.join(t.surface for t in tokens),
                      TokenId.join(t.id for t in tokens))


def _unique_grams(surfaces: Sequence[str], p: int) -> dict[tuple, int]:
    seen: dict[tuple, int] = {}
    for i in range(len(surfaces) - p + 1):
        gram = tuple(surfaces[i:i + p])
        seen[gram] = -1 if gram in seen else i
    return {g: i for g, i in seen.items() if i >= 0}


def _candidate_blocks(xs: Sequence[str], os_: Sequence[str], p: int) -> list[tuple[int, int]]:
    """Chunk every maximal common run of unique p-grams into blocks of p."""
    in_ocr = _unique_grams(os_, p)
    if not in_ocr:
        return []
    in_xml = _unique_grams(xs, p)
    starts = sorted((i, in_ocr[g]) for g, i in in_xml.items() if g in in_ocr)
    blocks = []
    run_i, run_j, last_i, last_j = None, None, None, None
    for i, j in starts:
        if last_i is None or i != last_i + 1 or j != last_j + 1:
            run_i, run_j = i, j
        if (i - run_i) % p == 0:
            blocks.append((i, j))
        last_i, last_j = i, j
    return blocks


def _select_blocks(blocks: list[tuple[int, int]], p: int) -> list[tuple[int, int]]:
    """Largest set of blocks that is ordered and non-overlapping on both sides."""
    if len(blocks) > _MAX_DP_BLOCKS:
        chosen, next_i, next_j = [], 0, 0
        for i, j in blocks:
            if i >= next_i and j >= next_j:
                chosen.append((i, j))
                next_i, next_j = i + p, j + p
        return chosen
    best = [1] * len(blocks)
    prev = [-1] * len(blocks)
    for k, (i, j) in enumerate(blocks):
        for q in range(k):
            qi, qj = blocks[q]
            if qi + p <= i and qj + p <= j and best[q] + 1 > best[k]:
                best[k], prev[k] = best[q] + 1, q
    if not blocks:
        return []
    k = max(range(len(blocks)), key=lambda q: (best[q], -q))
    chosen = []
    while k >= 0:
        chosen.append(blocks[k])
        k = prev[k]
    return chosen[::-1]


def precompress(xml: Sequence[AlignToken], ocr: Sequence[AlignToken], p: int = 20):
    """Replace common unique runs of ``p`` tokens by single merged tuples.

    Returns ``(xml', ocr', CompressionMap)``.
    """
    if p < 2:
        raise ValueError("block size must be >= 2")
    xs = [t.surface for t in xml]
    os_ = [t.surface for t in ocr]
    blocks = _select_blocks(_candidate_blocks(xs, os_, p), p)

    replacements = []
    new_xml: list[AlignToken] = []
    new_ocr: list[AlignToken] = []
    xi = oj = 0
    for i, j in blocks:
        new_xml.extend(xml[xi:i])
        new_ocr.extend(ocr[oj:j])
        left, right = tuple(xml[i:i + p]), tuple(ocr[j:j + p])
        rep = Replacement(i, j, _merge(left), _merge(right), left, right)
        replacements.append(rep)
        new_xml.append(rep.merged_left)
        new_ocr.append(rep.merged_right)
        xi, oj = i + p, j + p
    new_xml.extend(xml[xi:])
    new_ocr.extend(ocr[oj:])
    return new_xml, new_ocr, CompressionMap(p, tuple(replacements))


def expand(aligned: Alignment, cmap: CompressionMap) -> Alignment:
    pairs = []
    for left, right in aligned.pairs:
        lo = cmap.originals(left) if not left.is_gap else None
        ro = cmap.originals(right) if not right.is_gap else None
        for tok, orig in ((left, lo), (right, ro)):
            if orig is None and not tok.is_gap and MERGE_SEPARATOR in tok.surface:
                raise InconsistentMap(f"merged tuple {tok.id} is not in the compression map")
        if lo is None and ro is None:
            pairs.append((left, right))
        elif lo is not None and ro is not None:
            pairs.extend(zip(lo, ro))
        elif lo is not None:
            if not right.is_gap:
                raise InconsistentMap(f"merged tuple {left.id} aligned to a plain token")
            pairs.extend((t, GAP) for t in lo)
        else:
            if not left.is_gap:
                raise InconsistentMap(f"merged tuple {right.id} aligned to a plain token")
            pairs.extend((GAP, t) for t in ro)
    return Alignment(tuple(pairs))


def lcs_table(xs: Sequence, os_: Sequence, cell_budget: int = DEFAULT_CELL_BUDGET) -> np.ndarray:
    """Suffix LCS table ``S[i, j] = LCS(xs[i:], os_[j:])``."""
    m, n = len(xs), len(os_)
    cells = (m + 1) * (n + 1)
    if cells > cell_budget:
        raise CapacityExceeded(f"alignment needs {cells} DP cells, budget is {cell_budget}")
    codes: dict = {}
    x = np.fromiter((codes.setdefault(s, len(codes)) for s in xs), dtype=np.int64, count=m)
    o = np.fromiter((codes.setdefault(s, len(codes)) for s in os_), dtype=np.int64, count=n)
    dtype = np.uint16 if min(m, n) < np.iinfo(np.uint16).max else np.uint32
    table = np.zeros((m + 1, n + 1), dtype=dtype)
    if n == 0:
        return table
    for i in range(m - 1, -1, -1):
        below = table[i + 1]
        t = np.maximum(below[:n], below[1:] + (o == x[i]))
        table[i, :n] = np.maximum.accumulate(t[::-1])[::-1]
    return table


def global_align(xml: Sequence[AlignToken], ocr: Sequence[AlignToken],
                 cell_budget: int = DEFAULT_CELL_BUDGET) -> Alignment:
    """Identity-scored global alignment.

    Mismatched columns never pair two real tokens: they come out as an
    xml-only pair followed by an ocr-only pair.
    """
    xs = [t.surface for t in xml]
    os_ = [t.surface for t in ocr]
    table = lcs_table(xs, os_, cell_budget)
    m, n = len(xs), len(os_)
    pairs = []
    i = j = 0
    while i < m and j < n:
        here = table[i, j]
        if xs[i] == os_[j] and here == table[i + 1, j + 1] + 1:
            pairs.append((xml[i], ocr[j]))
            i += 1
            j += 1
        elif here == table[i + 1, j]:
            pairs.append((xml[i], GAP))
            i += 1
        else:
            pairs.append((GAP, ocr[j]))
            j += 1
    pairs.extend((xml[k], GAP) for k in range(i, m))
    pairs.extend((GAP, ocr[k]) for k in range(j, n))
    return Alignment(tuple(pairs))


def align_tokens(xml: Sequence[AlignToken], ocr: Sequence[AlignToken],
                 cfg: AlignerConfig | None = None) -> Alignment:
    """precompress → global_align → expand."""
    cfg = cfg or AlignerConfig()
    cx, co, cmap = precompress(xml, ocr, cfg.pre_compress_block)
    return expand(global_align(cx, co, cfg.cell_budget), cmap)


def align_documents(xml: DocumentVersion, ocr: DocumentVersion,
                    cfg: AlignerConfig | None = None, fixers=None) -> Alignment:
    """Full alignment pipeline with optional fixers around the core alignment."""
    from .fixers import FixerConfig, post_force_align, preprocess

    if xml.kind != "xml":
        raise ValueError(f"left document must be of kind xml, got {xml.kind!r}")
    if ocr.kind not in OCR_KINDS:
        raise ValueError(f"right document must be of kind conv or scan, got {ocr.kind!r}")
    fixers = fixers or FixerConfig()
    xml_tokens = list(xml.tokens)
    ocr_tokens = preprocess(list(ocr.tokens), xml_tokens, fixers)
    alignment = align_tokens(xml_tokens, ocr_tokens, cfg)
    if fixers.post_force_align:
        alignment = post_force_align(alignment, fixers.force_align_max_run)
    return alignment
