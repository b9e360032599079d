"""KWIC-based judgment of alignment quality.

Every directly matched pair is judged by comparing the left and right
keyword-in-context strings around its two member tokens with a
normalised Levenshtein similarity.  A pair is a true positive when both
similarities reach the threshold; missed alignments are the xml tokens
not covered by any true positive.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Sequence

from .errors import EmptyInput, ProjectionMismatch
from .model import AlignToken, Alignment, DocumentVersion, flatten_id_parts, unescape_surface


@dataclass(frozen=True)
class EvalConfig:
    context_width: int = 10
    lsim_threshold: float = 0.50
    joiner: str = " "

    def __post_init__(self):
        if self.context_width < 1:
            raise ValueError("context_width must be >= 1")
        if not 0.0 <= self.lsim_threshold <= 1.0:
            raise ValueError("lsim_threshold must lie in [0, 1]")


def levenshtein(a: str, b: str) -> int:
    """Unit-cost edit distance (bit-parallel, Myers/Hyyrö)."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    m = len(b)
    if m == 0:
        return len(a)
    peq: dict[str, int] = {}
    for i, ch in enumerate(b):
        peq[ch] = peq.get(ch, 0) | (1 << i)
    full = (1 << m) - 1
    top = 1 << (m - 1)
    pv, mv, score = full, 0, m
    for ch in a:
        eq = peq.get(ch, 0)
        xv = eq | mv
        xh = (((eq & pv) + pv) ^ pv) | eq
        ph = mv | (~(xh | pv) & full)
        mh = pv & xh
        if ph & top:
            score += 1
        elif mh & top:
            score -= 1
        ph = ((ph << 1) | 1) & full
        mh = (mh << 1) & full
        pv = mh | (~(xv | ph) & full)
        mv = ph & xv
    return score


def lsim(ct1: str, ct2: str) -> float:
    longest = max(len(ct1), len(ct2))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(ct1, ct2) / longest


def _surfaces(doc_or_tokens) -> list[str]:
    tokens = doc_or_tokens.tokens if isinstance(doc_or_tokens, DocumentVersion) else doc_or_tokens
    return [t if isinstance(t, str) else unescape_surface(t.surface) for t in tokens]


def kwic_context(doc, index: int, width: int = 10, joiner: str = " ") -> tuple[str, str]:
    """Left and right context strings of up to ``width`` tokens around ``index``."""
    surfaces = _surfaces(doc)
    if not 0 <= index < len(surfaces):
        raise IndexError(f"token index {index} out of range")
    left = surfaces[max(index - width, 0):index]
    right = surfaces[index + 1:index + 1 + width]
    return joiner.join(left), joiner.join(right)


@dataclass(frozen=True)
class Judgment:
    xml_index: int
    ocr_index: int
    xml_token: AlignToken
    ocr_token: AlignToken
    left_lsim: float
    right_lsim: float
    verdict: str
    xml_context: tuple[str, str]
    ocr_context: tuple[str, str]


def _pct(num: int, den: int) -> float:
    return 100.0 * num / den if den else 0.0


@dataclass
class EvalReport:
    tp: int
    fp: int
    fn: int
    judgments: list[Judgment] = field(default_factory=list)
    doc_id: str = ""

    @property
    def precision(self) -> float:
        return _pct(self.tp, self.tp + self.fp)

    @property
    def recall(self) -> float:
        return _pct(self.tp, self.tp + self.fn)

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def to_json(self) -> dict:
        out = {"tp": self.tp, "fp": self.fp, "fn": self.fn,
               "precision": round(self.precision, 2), "recall": round(self.recall, 2),
               "f1": round(self.f1, 2)}
        if self.doc_id:
            out = {"doc_id": self.doc_id, **out}
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), ensure_ascii=False, indent=1) + "\n"


def _check_projection(alignment: Alignment, xml: DocumentVersion, ocr: DocumentVersion) -> None:
    if flatten_id_parts(alignment.left_tokens()) != flatten_id_parts(xml.tokens):
        raise ProjectionMismatch("xml side of the alignment does not reproduce the xml document")
    if flatten_id_parts(alignment.right_tokens()) != flatten_id_parts(ocr.tokens):
        raise ProjectionMismatch("ocr side of the alignment does not reproduce the ocr document")


def score_alignment(alignment: Alignment, xml: DocumentVersion, ocr: DocumentVersion,
                    cfg: EvalConfig | None = None) -> EvalReport:
    """Judge every directly matched pair.

    Contexts are read from the two projections of the alignment, i.e.
    from the ocr tokens as the fixers left them.
    """
    cfg = cfg or EvalConfig()
    _check_projection(alignment, xml, ocr)
    xs = _surfaces(alignment.left_tokens())
    os_ = _surfaces(alignment.right_tokens())
    w, join = cfg.context_width, cfg.joiner
    tp = fp = 0
    judgments = []
    xi = oi = 0
    for left, right in alignment.pairs:
        if not left.is_gap and not right.is_gap:
            xc = (join.join(xs[max(xi - w, 0):xi]), join.join(xs[xi + 1:xi + 1 + w]))
            oc = (join.join(os_[max(oi - w, 0):oi]), join.join(os_[oi + 1:oi + 1 + w]))
            ls, rs = lsim(xc[0], oc[0]), lsim(xc[1], oc[1])
            ok = ls >= cfg.lsim_threshold and rs >= cfg.lsim_threshold
            tp += ok
            fp += not ok
            judgments.append(Judgment(xi, oi, left, right, ls, rs, "TP" if ok else "FP", xc, oc))
        xi += not left.is_gap
        oi += not right.is_gap
    return EvalReport(tp, fp, len(xml.tokens) - tp, judgments, xml.doc_id)


def micro_average(reports: Sequence[EvalReport]) -> EvalReport:
    if not reports:
        raise EmptyInput("micro_average needs at least one report")
    judgments = [j for r in reports for j in r.judgments]
    return EvalReport(sum(r.tp for r in reports), sum(r.fp for r in reports),
                      sum(r.fn for r in reports), judgments)


def format_kwic(report: EvalReport, width: int = 80) -> str:
    """Plain-text judgment listing: ocr line, xml line, verdict line per pair."""
    lines = []
    for j in report.judgments:
        for (left, right), tok in ((j.ocr_context, j.ocr_token), (j.xml_context, j.xml_token)):
            lines.append(f"{left:>{width}}  >>  {unescape_surface(tok.surface)}  <<  {right}".rstrip())
        lines.append(f"{j.verdict} ({j.left_lsim:.3f}, {j.right_lsim:.3f})")
        lines.append("")
    return "\n".join(lines)


def compare_to_gold(alignment: Alignment, gold: Alignment) -> dict:
    """Precision/recall of matched pairs against a known true correspondence.

    A predicted pair is correct when it links at least one xml id part to
    an ocr id part that the gold alignment links it to.
    """
    truth: dict[str, set[str]] = {}
    for left, right in gold.matched():
        for part in left.id.parts:
            truth.setdefault(part, set()).update(right.id.parts)
    correct = total = 0
    covered: set[str] = set()
    for left, right in alignment.matched():
        total += 1
        hit = [p for p in left.id.parts if truth.get(p, set()) & set(right.id.parts)]
        if hit:
            correct += 1
            covered.update(hit)
    return {"correct": correct, "predicted": total, "gold": len(truth),
            "precision": round(_pct(correct, total), 2),
            "recall": round(_pct(len(covered), len(truth)), 2)}


ABLATION_SETTINGS = [(d, pre, post) for post, pre, d in product((False, True), repeat=3)]


def ablation_grid(pairs: Iterable[tuple[DocumentVersion, DocumentVersion]],
                  aligner_cfg=None, eval_cfg: EvalConfig | None = None,
                  force_align_max_run: int = 5) -> list[dict]:
    """Micro-averaged P/R/F for all eight dehyp / pre / post_force_align combinations."""
    from .aligner import align_documents
    from .fixers import FixerConfig

    pairs = list(pairs)
    rows = []
    for dehyp, pre, post in ABLATION_SETTINGS:
        fixers = FixerConfig(dehyp, pre, pre, post, force_align_max_run)
        reports = [score_alignment(align_documents(x, o, aligner_cfg, fixers), x, o, eval_cfg)
                   for x, o in pairs]
        avg = micro_average(reports)
        rows.append({"setting": fixers.label, "tp": avg.tp, "fp": avg.fp, "fn": avg.fn,
                     "precision": round(avg.precision, 2), "recall": round(avg.recall, 2),
                     "f1": round(avg.f1, 2)})
    return rows
