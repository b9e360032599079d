"""Flattening of ``<tex-math>`` content into plain / sub / sup fragments.

``_{...}`` and ``^{...}`` groups become subscript and superscript fragments;
all other markup is stripped the way ``detex`` would.  Control words are
either looked up in :data:`CONTROL_WORDS` (``strategy="table"``, the
default) or deleted (``strategy="strip"``).
"""

from __future__ import annotations

import re

from .errors import UnbalancedBraces

GREEK = {
    "alpha": "α", "beta": "β", "gamma": "γ", "delta": "δ", "epsilon": "ϵ",
    "varepsilon": "ε", "zeta": "ζ", "eta": "η", "theta": "θ", "vartheta": "ϑ",
    "iota": "ι", "kappa": "κ", "lambda": "λ", "mu": "μ", "nu": "ν", "xi": "ξ",
    "pi": "π", "varpi": "ϖ", "rho": "ρ", "varrho": "ϱ", "sigma": "σ",
    "varsigma": "ς", "tau": "τ", "upsilon": "υ", "phi": "ϕ", "varphi": "φ",
    "chi": "χ", "psi": "ψ", "omega": "ω",
    "Gamma": "Γ", "Delta": "Δ", "Theta": "Θ", "Lambda": "Λ", "Xi": "Ξ",
    "Pi": "Π", "Sigma": "Σ", "Upsilon": "Υ", "Phi": "Φ", "Psi": "Ψ", "Omega": "Ω",
}

SYMBOLS = {
    "pm": "±", "mp": "∓", "times": "×", "cdot": "·", "leq": "≤", "le": "≤",
    "geq": "≥", "ge": "≥", "approx": "≈", "sim": "∼", "infty": "∞",
    "rightarrow": "→", "to": "→", "leftarrow": "←", "prime": "′",
    "circ": "∘", "degree": "°", "AA": "Å",
}

CONTROL_WORDS = {**GREEK, **SYMBOLS}

_ESCAPED = set("%&_#${}")
_SPACING = set(",;:! \\")

Fragment = tuple[str, bool, bool]


def _document_body(tex: str) -> str:
    m = re.search(r"\\begin\{document\}(.*?)(\\end\{document\}|$)", tex, re.S)
    return m.group(1) if m else tex


def _check_braces(tex: str) -> None:
    depth = 0
    i = 0
    while i < len(tex):
        ch = tex[i]
        if ch == "\\":
            i += 2
            continue
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth < 0:
                raise UnbalancedBraces(tex)
        i += 1
    if depth:
        raise UnbalancedBraces(tex)


class _Flattener:
    def __init__(self, tex: str, strategy: str):
        self.tex = tex
        self.table = CONTROL_WORDS if strategy == "table" else {}
        self.pos = 0

    def control(self) -> str:
        """Consume a backslash sequence at ``pos`` and return its replacement."""
        tex = self.tex
        start = self.pos + 1
        if start >= len(tex):
            self.pos = start
            return ""
        if tex[start].isalpha():
            end = start
            while end < len(tex) and tex[end].isalpha():
                end += 1
            self.pos = end
            return self.table.get(tex[start:end], "")
        self.pos = start + 1
        ch = tex[start]
        if ch in _ESCAPED:
            return ch
        if ch in _SPACING:
            return " "
        return ""

    def group(self) -> str:
        """Flatten a ``{...}`` group (or a single atom) used as a script argument."""
        tex = self.tex
        while self.pos < len(tex) and tex[self.pos] == " ":
            self.pos += 1
        if self.pos >= len(tex):
            return ""
        ch = tex[self.pos]
        if ch == "\\":
            return self.control()
        if ch != "{":
            self.pos += 1
            return "" if ch in "$}" else ch
        self.pos += 1
        parts = self.sequence(until_close=True)
        return "".join(text for text, _, _ in parts)

    def sequence(self, until_close: bool = False) -> list[Fragment]:
        tex = self.tex
        out: list[Fragment] = []
        plain: list[str] = []

        def flush():
            if plain:
                out.append(("".join(plain), False, False))
                plain.clear()

        while self.pos < len(tex):
            ch = tex[self.pos]
            if ch == "}":
                self.pos += 1
                if until_close:
                    break
            elif ch == "{" or ch == "$":
                self.pos += 1
            elif ch == "\\":
                plain.append(self.control())
            elif ch in "_^":
                self.pos += 1
                flush()
                script = self.group()
                if script:
                    out.append((script, ch == "_", ch == "^"))
            else:
                plain.append(ch)
                self.pos += 1
        flush()
        return out


def _merge(fragments: list[Fragment]) -> list[Fragment]:
    merged: list[Fragment] = []
    for text, sub, sup in fragments:
        if not text:
            continue
        if merged and merged[-1][1:] == (sub, sup):
            merged[-1] = (merged[-1][0] + text, sub, sup)
        else:
            merged.append((text, sub, sup))
    return merged


def flatten_tex_math(tex: str, strategy: str = "table") -> list[Fragment]:
    """Return ``(text, subscript, superscript)`` fragments in reading order.

    Empty fragments are dropped.  Unbalanced braces degrade to a single
    plain fragment holding the raw text.
    """
    if strategy not in ("table", "strip"):
        raise ValueError(f"unknown control-word strategy {strategy!r}")
    body = _document_body(tex)
    try:
        _check_braces(body)
    except UnbalancedBraces:
        return [(tex, False, False)]
    return _merge(_Flattener(body, strategy).sequence())
