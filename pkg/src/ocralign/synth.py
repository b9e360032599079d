"""Synthetic xml documents and OCR-style corruptions with known gold alignment.

The corruptions mirror the error classes seen when aligning real scans:
misrecognised Greek letters and symbols, single-character confusions,
line-break hyphenation, split and joined words, running headers and
footers, and a bibliography that only the printed version carries.
"""

from __future__ import annotations

import random
from dataclasses import asdict, dataclass, fields
from itertools import accumulate

from .model import GAP, AlignToken, Alignment, BoundingBox, DocumentVersion, OcrMeta, TokenId, XmlMeta

# Greek letters and symbols → what OCR typically makes of them.
GREEK_CONFUSIONS = {
    "β": "B", "μ": "“U", "α": "0", "Δ": "A", "ε": "g", "±": "+", "γ": "y",
    "δ": "d", "κ": "k", "λ": "A", "σ": "o", "τ": "t", "ω": "w", "°": "o",
}

CHAR_CONFUSIONS = {
    "l": "1", "1": "l", "i": "1", "I": "l", "o": "0", "O": "0", "0": "O",
    "e": "c", "c": "e", "s": "5", "S": "5", "t": "f", "f": "t", "u": "n",
    "n": "u", "h": "b", "b": "h", "a": "o", "g": "q", "q": "g", "m": "n",
}

PAGE_SIZE = (2550, 3300)
_MARGIN = 150
_LINE_HEIGHT = 60
_CHAR_WIDTH = 24
_SPACE = 20

_SYLLABLES = ("ac", "al", "an", "ar", "as", "at", "ba", "be", "bi", "ca", "ce", "ci", "co",
              "da", "de", "di", "do", "en", "er", "es", "fa", "fe", "ga", "ge", "ha", "he",
              "hy", "in", "io", "is", "ka", "la", "le", "li", "lo", "ma", "me", "mi", "mo",
              "na", "ne", "ni", "no", "ol", "on", "or", "os", "pa", "pe", "pho", "pi", "po",
              "ra", "re", "ri", "ro", "sa", "se", "si", "so", "ta", "te", "ti", "to", "tri",
              "ul", "un", "ur", "va", "ve", "vi", "xy", "ze", "zo", "se", "ly", "ase", "ine")
_FUNCTION_WORDS = ("the", "of", "and", "in", "to", "a", "was", "is", "for", "with", "by",
                   "that", "were", "on", "as", "at", "from", "be", "this", "which")
_UNITS = ("μM", "mM", "nm", "min", "s", "°C", "%", "mg")
_FORMULAS = (("ZnCl", "2"), ("KHSO", "3"), ("MgCl", "2"), ("H", "2"), ("CaCl", "2"), ("k", "obs"))
_GREEK_TERMS = (("metallo", "-", "β", "-", "lactamase"), ("DH5α",), ("α", "-", "helix"),
                ("Δε",), ("β", "-", "sheet"), ("γ", "-", "secretase"))


@dataclass(frozen=True)
class NoiseConfig:
    seed: int = 0
    char_substitution: float = 0.0
    greek_confusion: float = 0.0
    hyphenation_insertion: float = 0.0
    token_split: float = 0.0
    token_join: float = 0.0
    header_footer_tokens: int = 0
    append_bibliography_tokens: int = 0
    page_tokens: int = 450
    kind: str = "conv"

    def __post_init__(self):
        for name in ("char_substitution", "greek_confusion", "hyphenation_insertion",
                     "token_split", "token_join"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.page_tokens < 1 or self.header_footer_tokens < 0 or self.append_bibliography_tokens < 0:
            raise ValueError("token counts must be non-negative and page_tokens positive")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "NoiseConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})


# Noise rates used by the ablation acceptance corpus.
ABLATION_NOISE = dict(char_substitution=0.02, greek_confusion=0.9, hyphenation_insertion=0.02,
                      token_split=0.015, token_join=0.015, header_footer_tokens=6,
                      append_bibliography_tokens=200)


def _vocabulary(rng: random.Random, size: int = 1500) -> list[str]:
    words = set()
    while len(words) < size:
        words.add("".join(rng.choice(_SYLLABLES) for _ in range(rng.randint(2, 4))))
    return sorted(words)


def generate_document(n_tokens: int, seed: int = 0, doc_id: str = "synthetic") -> DocumentVersion:
    """A clean xml-kind document of exactly ``n_tokens`` tokens."""
    rng = random.Random(seed)
    vocab = _vocabulary(random.Random(seed * 7919 + 17))
    cum_weights = list(accumulate(1.0 / (rank + 1) for rank in range(len(vocab))))
    items: list[tuple[str, XmlMeta]] = []
    plain = XmlMeta(section_path=("body", "sec", "p"))
    sub = XmlMeta(subscript=True, section_path=("body", "sec", "p"))
    sentence_left = 0
    while len(items) < n_tokens:
        if sentence_left == 0:
            if items:
                items.append((".", plain))
            sentence_left = rng.randint(8, 25)
            continue
        sentence_left -= 1
        r = rng.random()
        if r < 0.30:
            items.append((rng.choice(_FUNCTION_WORDS), plain))
        elif r < 0.86:
            word = rng.choices(vocab, cum_weights=cum_weights)[0]
            if rng.random() < 0.05:
                word = word.capitalize()
            items.append((word, plain))
        elif r < 0.91:
            items.append((",", plain))
        elif r < 0.95:
            items.append((str(rng.randint(1, 999)), plain))
            items.append((rng.choice(_UNITS), plain))
        elif r < 0.975:
            base, script = rng.choice(_FORMULAS)
            items.append((base, plain))
            items.append((script, sub))
        else:
            items.extend((t, plain) for t in rng.choice(_GREEK_TERMS))
    items = items[:n_tokens]
    tokens = tuple(AlignToken(s, TokenId.of(f"word_{k}")) for k, (s, _) in enumerate(items))
    return DocumentVersion(doc_id, "xml", tokens, tuple(m for _, m in items))


class _Layout:
    """Hands out word boxes on consecutive synthetic pages."""

    def __init__(self):
        self.page = 0
        self.x = _MARGIN
        self.y = _MARGIN

    def new_page(self):
        self.page += 1
        self.x = self.y = _MARGIN

    def place(self, surface: str) -> BoundingBox:
        width = _CHAR_WIDTH * max(len(surface), 1)
        if self.x + width > PAGE_SIZE[0] - _MARGIN:
            self.x = _MARGIN
            self.y += _LINE_HEIGHT
        if self.y + _LINE_HEIGHT > PAGE_SIZE[1] - _MARGIN:
            self.new_page()
        box = BoundingBox(self.x, self.y, self.x + width, self.y + _LINE_HEIGHT - 12, self.page)
        self.x += width + _SPACE
        return box


def _confuse_greek(surface: str) -> str:
    return "".join(GREEK_CONFUSIONS.get(ch, ch) for ch in surface)


def _confuse_char(surface: str, rng: random.Random) -> str:
    positions = [k for k, ch in enumerate(surface) if ch.isalnum()]
    if not positions:
        return surface
    k = rng.choice(positions)
    ch = surface[k]
    new = CHAR_CONFUSIONS.get(ch) or rng.choice([c for c in "abcdefghijklmnopqrstuvwxyz" if c != ch])
    return surface[:k] + new + surface[k + 1:]


def _corrupt(surface: str, cfg: NoiseConfig, rng: random.Random) -> list[str] | None:
    """Pieces the OCR side shows for one xml token, or None when joined with the next."""
    r = rng.random
    if r() < cfg.token_join:
        return None
    if len(surface) >= 4 and surface.isalpha() and r() < cfg.hyphenation_insertion:
        cut = len(surface) // 2
        return [surface[:cut], "-", surface[cut:]]
    if len(surface) >= 2 and r() < cfg.token_split:
        cut = rng.randint(1, len(surface) - 1)
        return [surface[:cut], surface[cut:]]
    if any(ch in GREEK_CONFUSIONS for ch in surface) and r() < cfg.greek_confusion:
        return [_confuse_greek(surface)]
    if r() < cfg.char_substitution:
        return [_confuse_char(surface, rng)]
    return [surface]


def corrupt_document(xml: DocumentVersion, cfg: NoiseConfig) -> tuple[DocumentVersion, Alignment]:
    """OCR-like counterpart of ``xml`` with the true correspondence as gold alignment.

    At most one corruption is applied per xml token.  Gold pairs whose ocr
    side came from several pieces carry a composite token (ids joined);
    a join makes a composite xml token instead.  Injected header, footer
    and bibliography tokens are paired with gaps.
    """
    if xml.kind != "xml":
        raise ValueError("corrupt_document expects an xml-kind document")
    rng = random.Random(cfg.seed)
    filler = _vocabulary(random.Random(cfg.seed + 1), 300)
    layout = _Layout()
    ocr_tokens: list[AlignToken] = []
    metas: list[OcrMeta] = []
    gold: list[tuple[AlignToken, AlignToken]] = []
    on_page = 0

    def emit(surface: str) -> AlignToken:
        tok = AlignToken(surface, TokenId.of(f"word_{len(ocr_tokens)}"))
        box = layout.place(surface)
        ocr_tokens.append(tok)
        metas.append(OcrMeta(box, 95.0))
        return tok

    def inject(n: int) -> None:
        for _ in range(n):
            gold.append((GAP, emit(rng.choice(filler))))

    def composite(tokens: list[AlignToken]) -> AlignToken:
        if len(tokens) == 1:
            return tokens[0]
        return AlignToken("".join(t.surface for t in tokens), TokenId.join(t.id for t in tokens))

    inject(cfg.header_footer_tokens)
    k = 0
    src = xml.tokens
    while k < len(src):
        if on_page >= cfg.page_tokens:
            inject(cfg.header_footer_tokens)
            layout.new_page()
            on_page = 0
            inject(cfg.header_footer_tokens)
        pieces = _corrupt(src[k].surface, cfg, rng)
        if pieces is None and k + 1 < len(src):
            joined = emit(src[k].surface + src[k + 1].surface)
            gold.append((composite([src[k], src[k + 1]]), joined))
            k += 2
            on_page += 1
            continue
        emitted = [emit(p) for p in (pieces or [src[k].surface])]
        gold.append((src[k], composite(emitted)))
        on_page += 1
        k += 1
    inject(cfg.header_footer_tokens)
    if cfg.append_bibliography_tokens:
        layout.new_page()
        inject(cfg.append_bibliography_tokens)

    pages = tuple(PAGE_SIZE for _ in range(layout.page + 1))
    ocr = DocumentVersion(xml.doc_id, cfg.kind, tuple(ocr_tokens), tuple(metas), pages)
    return ocr, Alignment(tuple(gold))


def generate_corpus(n_docs: int, n_tokens: int, noise: NoiseConfig, seed: int = 0):
    """``[(xml, ocr, gold), ...]`` with per-document seeds derived from ``seed``."""
    corpus = []
    for d in range(n_docs):
        xml = generate_document(n_tokens, seed=seed * 1000 + d, doc_id=f"10.0000/synth.{seed}.{d}")
        doc_noise = NoiseConfig.from_json({**noise.to_json(), "seed": noise.seed * 1000 + d})
        corpus.append((xml, *corrupt_document(xml, doc_noise)))
    return corpus


BACKGROUND_SIZE = (612, 792)
MARKER_COLOR = (250, 230, 40)


def render_backgrounds(ocr: DocumentVersion, n_marks: int, seed: int = 0,
                       size: tuple[int, int] = BACKGROUND_SIZE):
    """White background pages with marker strokes over random runs of ocr words.

    Returns ``(images, marked)`` where ``images`` are (height, width, 3)
    uint8 arrays, one per ocr page, and ``marked`` lists the ids of the
    painted words.
    """
    import numpy as np

    rng = random.Random(seed)
    width, height = size
    pages = ocr.pages or (PAGE_SIZE,)
    images = [np.full((height, width, 3), 255, dtype=np.uint8) for _ in pages]
    marked: list[TokenId] = []
    n = len(ocr.tokens)
    for _ in range(n_marks if n else 0):
        start = rng.randrange(n)
        page = ocr.meta[start].bbox.page
        for k in range(start, min(start + rng.randint(2, 6), n)):
            box = ocr.meta[k].bbox
            if box.page != page:
                break
            pw, ph = pages[page]
            x0, x1 = box.x0 * width // pw, -(-box.x1 * width // pw)
            y0, y1 = box.y0 * height // ph, -(-box.y1 * height // ph)
            images[page][y0:y1, x0:x1] = MARKER_COLOR
            marked.append(ocr.tokens[k].id)
    return images, marked
