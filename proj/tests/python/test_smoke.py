"""Smoke tests for the python module built from the C++ core."""

import math
import os
import subprocess

import pytest

import rsimp


def test_clean_and_mask():
    assert rsimp.clean("a\t\tb") == "a b"
    masked = rsimp.mask("see [docs](https://example.com/x) and `make build`")
    assert masked["text"] == "see [docs](<url>) and <code_small>"
    assert [s[0] for s in masked["spans"]] == ["<url>", "<code_small>"]
    assert masked["spans"][0][1] == "https://example.com/x"
    assert masked["warnings"] == []


def test_split_and_word_count():
    assert rsimp.split_sentences("First. Second.") == ["First.", "Second."]
    assert rsimp.alphabetic_word_count("<url> two words") == 2


def test_keyword_match():
    assert rsimp.keyword_match("Simplify intro paragraph") == {"simplify"}
    assert rsimp.keyword_match("fix typo") == set()
    assert rsimp.keyword_match("make it shiny", ["shiny"]) == {"shiny"}


def test_tfidf_distance():
    model = rsimp.TfidfModel.fit(["a b c", "a b d", "x y z"])
    assert model.distance("a b c", "a b c") == pytest.approx(0.0, abs=1e-12)
    assert model.distance("a b", "x y") == pytest.approx(1.0)
    assert model.similarity("a b c", "a b d") > 0.3


def test_bleu():
    sent = "the quick brown fox jumps over".split()
    assert rsimp.sentence_bleu(sent, sent) == pytest.approx(1.0)
    assert rsimp.sentence_bleu(["a", "b"], ["c", "d"]) == 0.0
    assert rsimp.corpus_bleu([(sent, sent)]) == pytest.approx(1.0)


def test_annotation_stats():
    assert rsimp.krippendorff_alpha([[1, 2, 3], [1, 2, 3]]) == pytest.approx(1.0)
    low = rsimp.krippendorff_alpha([[1, 5], [5, 1]])
    assert low == pytest.approx(-0.5)

    stat, p = rsimp.wilcoxon_signed_rank(
        [10, 11, 12, 13, 14, 15, 16], [1, 2, 3, 4, 5, 6, 7]
    )
    assert stat == 0.0
    assert p < 0.05


def test_wordpiece_roundtrip():
    corpus = ["hug " * 10, "pug pug", "pun pun pun", "see <url> now"]
    tok = rsimp.WordPiece.train(corpus, 64)
    assert tok.specials[0] == "<sos>"
    assert len(tok.encode("<url>")) == 1
    ids = tok.encode("hug pun", add_bounds=True)
    assert tok.decode(ids) == "hug pun"
    assert len(tok) <= 64


def test_align_documents():
    simple = [
        "the parser reads the configuration files quickly today",
        "unrelated zebra sentence",
    ]
    regular = [
        "the parser reads the configuration files very quickly",
        "totally different words",
    ]
    pairs = rsimp.align_documents(simple, regular)
    assert len(pairs) == 1
    pair = pairs[0]
    assert pair["simple"] == simple[0]
    assert pair["tfidf_distance"] <= 0.5
    assert 0.1 <= pair["bleu"] <= 0.9


def test_cli_runs():
    cli = os.environ.get("RSIMP_CLI")
    if not cli:
        pytest.skip("RSIMP_CLI not set")
    out = subprocess.run([cli, "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for sub in ("harvest", "align", "train-tokenizer", "run"):
        assert sub in out.stdout
