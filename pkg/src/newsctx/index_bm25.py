"""Inverted index and BM25-scored top-k retrieval with a publish-before cutoff.

Articles are indexed over headline plus full body. The scoring variant is
classic Robertson BM25 with a (k1+1) numerator and smoothed idf
``ln(1 + (N - df + 0.5) / (df + 0.5))``; defaults k1=0.9, b=0.4.
"""

from __future__ import annotations

import gzip
import math
import pickle
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .corpus import Corpus

INDEX_FORMAT = "newsctx-bm25-index"
INDEX_FORMAT_VERSION = 1

# lowercase, split on any non-alphanumeric, keep unicode letters/digits
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric characters. No stemming or stopwords."""
    return _TOKEN_RE.findall(text.lower())


class UnknownArticleError(Exception):
    """The article id is not in the index."""


class IndexFormatError(Exception):
    """The index file is missing the format tag or has an unsupported version."""


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 0.9
    b: float = 0.4

    def __post_init__(self):
        if self.k1 < 0:
            raise ValueError(f"k1 must be >= 0, got {self.k1}")
        if not 0 <= self.b <= 1:
            raise ValueError(f"b must be in [0, 1], got {self.b}")


@dataclass(frozen=True)
class RankedList:
    """Scores strictly non-increasing, no duplicate ids, tagged with its producer."""

    qid: str
    items: tuple[tuple[str, float], ...]
    tag: str

    def ids(self) -> list[str]:
        return [doc_id for doc_id, _ in self.items]

    def ranks(self) -> dict[str, int]:
        """1-based rank per article id."""
        return {doc_id: rank for rank, (doc_id, _) in enumerate(self.items, start=1)}

    def truncated(self, depth: int) -> "RankedList":
        return RankedList(qid=self.qid, items=self.items[:depth], tag=self.tag)

    def __len__(self) -> int:
        return len(self.items)


class Index:
    """Immutable inverted index; concurrent readers need no coordination."""

    def __init__(self, corpus: Corpus, params: Bm25Params = Bm25Params()):
        if len(corpus) == 0:
            raise ValueError("cannot index an empty corpus")
        self.params = params
        self.doc_ids: tuple[str, ...] = tuple(a.id for a in corpus)
        self._ord = {doc_id: i for i, doc_id in enumerate(self.doc_ids)}
        self.published: tuple[int, ...] = tuple(a.published_at for a in corpus)

        postings: dict[str, list[tuple[int, int]]] = {}
        doc_len = []
        for i, article in enumerate(corpus):
            tokens = tokenize(article.body_text())
            doc_len.append(len(tokens))
            for term, tf in sorted(Counter(tokens).items()):
                postings.setdefault(term, []).append((i, tf))
        self.doc_len: tuple[int, ...] = tuple(doc_len)
        self.postings: dict[str, tuple[tuple[int, int], ...]] = {
            t: tuple(p) for t, p in postings.items()
        }
        self.N = len(self.doc_ids)
        self.avgdl = sum(doc_len) / self.N

    @property
    def vocabulary_size(self) -> int:
        return len(self.postings)

    def df(self, term: str) -> int:
        return len(self.postings.get(term, ()))

    def idf(self, term: str) -> float:
        df = self.df(term)
        return math.log(1.0 + (self.N - df + 0.5) / (df + 0.5))

    def term_frequency(self, term: str, article_id: str) -> int:
        ord_ = self._ord_of(article_id)
        for doc_ord, tf in self.postings.get(term, ()):
            if doc_ord == ord_:
                return tf
        return 0

    def _ord_of(self, article_id: str) -> int:
        try:
            return self._ord[article_id]
        except KeyError:
            raise UnknownArticleError(f"unknown article id {article_id!r}") from None


def build_index(corpus: Corpus, params: Bm25Params = Bm25Params()) -> Index:
    return Index(corpus, params)


def bm25_score(
    index: Index,
    query_tokens: Sequence[str],
    article_id: str,
    params: Optional[Bm25Params] = None,
) -> float:
    """Sum of per-term BM25 contributions; repeated query terms count per occurrence."""
    p = params or index.params
    ord_ = index._ord_of(article_id)
    dl = index.doc_len[ord_]
    norm = p.k1 * (1 - p.b + p.b * dl / index.avgdl)
    score = 0.0
    for term, q_count in Counter(query_tokens).items():
        tf = index.term_frequency(term, article_id)
        if tf == 0:
            continue
        score += q_count * index.idf(term) * (tf * (p.k1 + 1)) / (tf + norm)
    return score


def search(
    index: Index,
    query_text: str,
    cutoff_time: int,
    k: int = 1000,
    qid: str = "",
    tag: str = "bm25",
) -> RankedList:
    """Top-k articles published strictly before ``cutoff_time``, BM25-ordered.

    Only articles matching at least one query term are returned. Ties break
    by more-recent publish time, then ascending article id. The query text
    is the caller's concatenation; query-variation modes live upstream.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    p = index.params
    query_counts = Counter(tokenize(query_text))
    scores: dict[int, float] = {}
    for term, q_count in query_counts.items():
        plist = index.postings.get(term)
        if not plist:
            continue
        idf = index.idf(term)
        for doc_ord, tf in plist:
            if index.published[doc_ord] >= cutoff_time:
                continue
            dl = index.doc_len[doc_ord]
            norm = p.k1 * (1 - p.b + p.b * dl / index.avgdl)
            contribution = q_count * idf * (tf * (p.k1 + 1)) / (tf + norm)
            scores[doc_ord] = scores.get(doc_ord, 0.0) + contribution

    ranked = sorted(
        scores.items(),
        key=lambda kv: (-kv[1], -index.published[kv[0]], index.doc_ids[kv[0]]),
    )
    items = tuple((index.doc_ids[doc_ord], score) for doc_ord, score in ranked[:k])
    return RankedList(qid=qid, items=items, tag=tag)


def save_index(index: Index, path: str | Path) -> None:
    """Persist to a versioned gzip'd binary with the params embedded."""
    payload = {
        "format": INDEX_FORMAT,
        "version": INDEX_FORMAT_VERSION,
        "params": {"k1": index.params.k1, "b": index.params.b},
        "doc_ids": index.doc_ids,
        "published": index.published,
        "doc_len": index.doc_len,
        "postings": index.postings,
        "N": index.N,
        "avgdl": index.avgdl,
    }
    # mtime=0 keeps rebuilt index files byte-identical
    with open(path, "wb") as raw:
        with gzip.GzipFile(filename="", mode="wb", fileobj=raw, mtime=0) as fh:
            pickle.dump(payload, fh, protocol=4)


def load_index(path: str | Path) -> Index:
    with gzip.open(path, "rb") as fh:
        payload = pickle.load(fh)
    if payload.get("format") != INDEX_FORMAT:
        raise IndexFormatError(f"{path}: not a {INDEX_FORMAT} file")
    if payload.get("version") != INDEX_FORMAT_VERSION:
        raise IndexFormatError(
            f"{path}: format version {payload.get('version')} unsupported "
            f"(expected {INDEX_FORMAT_VERSION})"
        )
    index = Index.__new__(Index)
    index.params = Bm25Params(**payload["params"])
    index.doc_ids = tuple(payload["doc_ids"])
    index._ord = {doc_id: i for i, doc_id in enumerate(index.doc_ids)}
    index.published = tuple(payload["published"])
    index.doc_len = tuple(payload["doc_len"])
    index.postings = payload["postings"]
    index.N = payload["N"]
    index.avgdl = payload["avgdl"]
    return index
