"""Lexicon-free repairs of OCR-side tokens before and after alignment.

All fixers read the xml token list as ground truth and only ever rewrite
the ocr side.  The pre-processing steps compare surfaces with the xml
list; ``post_force_align`` pairs up equal-length orphan runs that the
identity-scored aligner left in gaps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .model import AlignToken, Alignment, TokenId, unescape_surface

HYPHENS = ("-", "¬")


@dataclass(frozen=True)
class FixerConfig:
    dehyp: bool = False
    pre_join: bool = False
    pre_split: bool = False
    post_force_align: bool = False
    force_align_max_run: int = 5

    def __post_init__(self):
        if self.force_align_max_run < 1:
            raise ValueError("force_align_max_run must be >= 1")

    @classmethod
    def all_on(cls, max_run: int = 5) -> "FixerConfig":
        return cls(True, True, True, True, max_run)

    @property
    def label(self) -> str:
        names = []
        if self.dehyp:
            names.append("dehyp")
        if self.pre_join and self.pre_split:
            names.append("pre")
        elif self.pre_join:
            names.append("pre_join")
        elif self.pre_split:
            names.append("pre_split")
        if self.post_force_align:
            names.append("post_force_align")
        return " + ".join(names) or "-"


def _joined(tokens: Sequence[AlignToken]) -> AlignToken:
    return AlignToken("".join(t.surface for t in tokens), TokenId.join(t.id for t in tokens))


def dehyphenate(ocr: Sequence[AlignToken], xml: Sequence[AlignToken]) -> list[AlignToken]:
    """Merge ``word - word`` triples whose concatenation occurs anywhere in xml.

    A hyphen still attached to the left part (``exper-`` ``iment``, as
    hOCR words usually come out at line ends) is handled the same way.
    """
    vocabulary = {t.surface for t in xml}
    out: list[AlignToken] = []
    k = 0
    n = len(ocr)
    while k < n:
        # ocr[k] is a candidate left part with the hyphen at k + 1
        if (k + 2 < n and ocr[k + 1].surface in HYPHENS
                and ocr[k].surface + ocr[k + 2].surface in vocabulary):
            merged = ocr[k].surface + ocr[k + 2].surface
            out.append(AlignToken(merged, TokenId.join(t.id for t in ocr[k:k + 3])))
            k += 3
        elif (k + 1 < n and len(ocr[k].surface) > 1 and ocr[k].surface[-1] in HYPHENS
              and ocr[k + 1].surface not in HYPHENS
              and ocr[k].surface[:-1] + ocr[k + 1].surface in vocabulary):
            merged = ocr[k].surface[:-1] + ocr[k + 1].surface
            out.append(AlignToken(merged, TokenId.join((ocr[k].id, ocr[k + 1].id))))
            k += 2
        else:
            out.append(ocr[k])
            k += 1
    return out


def _surface_at(tokens: Sequence[AlignToken], k: int) -> str | None:
    return tokens[k].surface if 0 <= k < len(tokens) else None


def pre_join(ocr: Sequence[AlignToken], xml: Sequence[AlignToken]) -> list[AlignToken]:
    """Join adjacent ocr tokens that form one xml token in the same context.

    Context is one neighbour on each side; a list boundary only matches a
    list boundary.
    """
    targets = {(_surface_at(xml, j - 1), t.surface, _surface_at(xml, j + 1))
               for j, t in enumerate(xml)}
    out = list(ocr)
    i = 0
    while i + 1 < len(out):
        key = (_surface_at(out, i - 1), out[i].surface + out[i + 1].surface, _surface_at(out, i + 2))
        if key in targets:
            out[i:i + 2] = [_joined(out[i:i + 2])]
            # the merge changes the neighbourhood of the two previous windows
            i = max(i - 2, 0)
        else:
            i += 1
    return out


def pre_split(ocr: Sequence[AlignToken], xml: Sequence[AlignToken]) -> list[AlignToken]:
    """Split an ocr token that equals two adjacent xml tokens in the same context.

    Both halves keep the id of the original ocr token.
    """
    targets: dict[tuple, tuple[str, str]] = {}
    for j in range(len(xml) - 1):
        key = (_surface_at(xml, j - 1), xml[j].surface + xml[j + 1].surface, _surface_at(xml, j + 2))
        targets.setdefault(key, (xml[j].surface, xml[j + 1].surface))
    out = list(ocr)
    i = 0
    while i < len(out):
        key = (_surface_at(out, i - 1), out[i].surface, _surface_at(out, i + 1))
        parts = targets.get(key)
        if parts is None:
            i += 1
            continue
        tid = out[i].id
        out[i:i + 1] = [AlignToken(parts[0], tid), AlignToken(parts[1], tid)]
        i = max(i - 1, 0)
    return out


def preprocess(ocr: Sequence[AlignToken], xml: Sequence[AlignToken], cfg: FixerConfig) -> list[AlignToken]:
    """dehyp, then pre_join / pre_split alternated until neither changes anything."""
    out = list(ocr)
    if cfg.dehyp:
        out = dehyphenate(out, xml)
    if not (cfg.pre_join or cfg.pre_split):
        return out
    seen = set()
    while True:
        state = tuple((t.surface, t.id) for t in out)
        if state in seen:
            return out
        seen.add(state)
        if cfg.pre_join:
            out = pre_join(out, xml)
        if cfg.pre_split:
            out = pre_split(out, xml)


def _side(pair) -> str:
    left, right = pair
    if left.is_gap:
        return "ocr"
    if right.is_gap:
        return "xml"
    return "both"


def _try_merge(pairs: list, start: int, s: int):
    """Merge runs ``pairs[start:start+s]`` and ``pairs[start+s:start+2s]`` if eligible."""
    end = start + 2 * s
    if end > len(pairs):
        return None
    first = [_side(p) for p in pairs[start:start + s]]
    second = [_side(p) for p in pairs[start + s:end]]
    if first[0] == "both" or len(set(first)) != 1 or len(set(second)) != 1:
        return None
    if second[0] == "both" or second[0] == first[0]:
        return None
    before = pairs[start - 1] if start > 0 else None
    after = pairs[end] if end < len(pairs) else None
    if (before is not None and _side(before) != "both") or (after is not None and _side(after) != "both"):
        return None
    run_a, run_b = pairs[start:start + s], pairs[start + s:end]
    if first[0] == "xml":
        xml_toks = [l for l, _ in run_a]
        ocr_toks = [r for _, r in run_b]
    else:
        xml_toks = [l for l, _ in run_b]
        ocr_toks = [r for _, r in run_a]
    if any(len(unescape_surface(x.surface)) != len(unescape_surface(o.surface))
           for x, o in zip(xml_toks, ocr_toks)):
        return None
    return list(zip(xml_toks, ocr_toks))


def post_force_align(aligned: Alignment, s_max: int = 5) -> Alignment:
    """Pair ``s`` one-sided gap pairs with the following ``s`` opposite ones.

    Both flanks must be matched pairs (or the list boundary) and each
    pair of orphans must have the same length in unicode scalars.
    """
    if s_max < 1:
        raise ValueError("s_max must be >= 1")
    pairs = list(aligned.pairs)
    changed = True
    while changed:
        changed = False
        for s in range(1, s_max + 1):
            k = 0
            while k + 2 * s <= len(pairs):
                left, right = pairs[k]
                if not left.is_gap and not right.is_gap:
                    k += 1
                    continue
                merged = _try_merge(pairs, k, s)
                if merged is None:
                    k += 1
                    continue
                pairs[k:k + 2 * s] = merged
                changed = True
                k += s
    return Alignment(tuple(pairs))
