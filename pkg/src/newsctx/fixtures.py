"""Access to corpora shipped with the package."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .corpus import Corpus, ingest


def table1_corpus_path() -> Path:
    """Path of the two-article worked example shipped with the package."""
    return Path(str(resources.files("newsctx").joinpath("fixtures/table1_corpus.jsonl")))


def load_table1_corpus() -> Corpus:
    return ingest(table1_corpus_path())
