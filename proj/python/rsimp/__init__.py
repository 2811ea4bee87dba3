"""README simplification pipeline.

Thin python surface over the C++ core: markdown cleaning and masking,
sentence alignment, text metrics (TF-IDF, BLEU, Krippendorff's alpha,
Wilcoxon), WordPiece tokenization and beam-search generation.
"""

from ._rsimp import (  # noqa: F401
    TfidfModel,
    WordPiece,
    align_documents,
    alphabetic_word_count,
    clean,
    corpus_bleu,
    generate,
    keyword_match,
    krippendorff_alpha,
    mask,
    sentence_bleu,
    split_sentences,
    wilcoxon_signed_rank,
)

__all__ = [
    "TfidfModel",
    "WordPiece",
    "align_documents",
    "alphabetic_word_count",
    "clean",
    "corpus_bleu",
    "generate",
    "keyword_match",
    "krippendorff_alpha",
    "mask",
    "sentence_bleu",
    "split_sentences",
    "wilcoxon_signed_rank",
]
