import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ocralign.model import AlignToken, DocumentVersion, TokenId  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"


def toks(surfaces, prefix="w", start=0):
    """AlignTokens with ids ``<prefix><k>``."""
    if isinstance(surfaces, str):
        surfaces = surfaces.split()
    return [AlignToken(s, TokenId.of(f"{prefix}{start + k}")) for k, s in enumerate(surfaces)]


def doc(surfaces, kind="xml", prefix=None, doc_id="d"):
    prefix = prefix or ("x" if kind == "xml" else "o")
    return DocumentVersion(doc_id, kind, tuple(toks(surfaces, prefix)))


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def mini_dir():
    return FIXTURES / "mini"
