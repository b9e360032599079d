"""Word alignment of OCR output with electronic full text of scientific papers."""

__version__ = "0.1.0"

from .aligner import AlignerConfig, align_documents, align_tokens, global_align, precompress, expand
from .evaluator import EvalConfig, EvalReport, lsim, levenshtein, micro_average, score_alignment
from .fixers import FixerConfig, dehyphenate, post_force_align, pre_join, pre_split
from .model import GAP, AlignToken, Alignment, BoundingBox, DocumentVersion, TokenId

__all__ = [
    "GAP", "AlignToken", "Alignment", "AlignerConfig", "BoundingBox", "DocumentVersion", "EvalConfig",
    "EvalReport", "FixerConfig", "TokenId", "align_documents", "align_tokens", "dehyphenate", "expand",
    "global_align", "levenshtein", "lsim", "micro_average", "post_force_align", "pre_join", "pre_split",
    "precompress", "score_alignment",
]
