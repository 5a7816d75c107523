"""Rerankers over the first-stage candidate list, fused by reciprocal ranks.

Three member rankers: the BM25 candidate list itself, reverse-chronological
recency, and a pluggable semantic scorer (built-in dense-vector cosine over
a precomputed sidecar, or an external scorer process/endpoint). Fused score
of an article is the sum over member lists of 1 / (k + rank), k = 60.

Global tie rule everywhere: score desc, publish time desc, article id asc.
"""

from __future__ import annotations

import json
import math
import shlex
import subprocess
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import requests

from .corpus import Corpus
from .index_bm25 import Index, RankedList, search, tokenize

RANKER_BM25 = "bm25"
RANKER_RECENCY = "recency"
RANKER_SEMANTIC = "semantic"
RANKER_RRF = "rrf-composite"

SYSTEM_BM25 = "bm25"
SYSTEM_RECENCY = "recency"
SYSTEM_SEMANTIC = "semantic"
SYSTEM_RRF_RECENCY = "rrf-recency"  # fuses {bm25, semantic}; see docs/naming note
SYSTEM_RRF = "rrf"  # fuses {bm25, semantic, recency}
SYSTEMS = (SYSTEM_BM25, SYSTEM_RECENCY, SYSTEM_SEMANTIC, SYSTEM_RRF_RECENCY, SYSTEM_RRF)

# Sentinel score for candidates absent from the embedding store; sits below
# the cosine floor of -1 so they sort last.
MISSING_VECTOR_SCORE = -2.0


class MissingVectorError(Exception):
    """The embedding store has no vector for the article."""


class ExternalScorerError(Exception):
    """Transport failure, malformed response, or score count mismatch."""


@dataclass(frozen=True)
class RrfConfig:
    k: float = 60.0

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError(f"rrf k must be > 0, got {self.k}")


@dataclass
class EmbeddingStore:
    """article id -> dense vector, plus optional word vectors for query embedding.

    Article vectors conventionally embed headline + lead only; that is the
    sidecar producer's contract, not enforced here.
    """

    vectors: dict[str, np.ndarray]
    dim: int
    word_vectors: dict[str, np.ndarray] = field(default_factory=dict)

    def __contains__(self, article_id: str) -> bool:
        return article_id in self.vectors

    def vector(self, article_id: str) -> np.ndarray:
        try:
            return self.vectors[article_id]
        except KeyError:
            raise MissingVectorError(f"no vector for article {article_id!r}") from None


def load_embedding_sidecar(path: str | Path) -> tuple[dict[str, np.ndarray], int]:
    """Read the sidecar format: header ``count dim``, then id + dim floats per line."""
    vectors: dict[str, np.ndarray] = {}
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: expected 'count dim' header")
        count, dim = int(header[0]), int(header[1])
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if len(parts) != dim + 1:
                raise ValueError(f"{path}: row for {parts[0]!r} has {len(parts) - 1} floats, expected {dim}")
            vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
            if not np.all(np.isfinite(vec)):
                raise ValueError(f"{path}: non-finite vector for {parts[0]!r}")
            vectors[parts[0]] = vec
    if len(vectors) != count:
        raise ValueError(f"{path}: header says {count} vectors, found {len(vectors)}")
    return vectors, dim


def write_embedding_sidecar(vectors: dict[str, np.ndarray], path: str | Path) -> None:
    items = sorted(vectors.items())
    dim = len(next(iter(vectors.values()))) if vectors else 0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(items)} {dim}\n")
        for key, vec in items:
            fh.write(key + " " + " ".join(f"{x:.8g}" for x in vec) + "\n")


def load_word_vectors(path: str | Path) -> dict[str, np.ndarray]:
    """Read word vectors in the plain 'word floats...' text format."""
    vectors: dict[str, np.ndarray] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if len(parts) < 2:
                continue
            vectors[parts[0]] = np.array([float(x) for x in parts[1:]], dtype=np.float64)
    return vectors


def load_embedding_store(
    sidecar_path: str | Path,
    word_vectors_path: Optional[str | Path] = None,
) -> EmbeddingStore:
    vectors, dim = load_embedding_sidecar(sidecar_path)
    words = load_word_vectors(word_vectors_path) if word_vectors_path else {}
    return EmbeddingStore(vectors=vectors, dim=dim, word_vectors=words)


def embed_query(query_text: str, store: EmbeddingStore) -> np.ndarray:
    """Mean of per-token word vectors; unknown tokens are skipped.

    This is the built-in fallback rule; stores produced by an external
    embedding tool should apply the same rule on their side for queries.
    """
    hits = [store.word_vectors[t] for t in tokenize(query_text) if t in store.word_vectors]
    if not hits:
        return np.zeros(store.dim, dtype=np.float64)
    return np.mean(hits, axis=0)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity; a zero vector against anything is 0.0."""
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def score_semantic(query_text: str, article_id: str, store: EmbeddingStore) -> float:
    return cosine(embed_query(query_text, store), store.vector(article_id))


def _tie_key(corpus: Corpus) -> Callable[[tuple[str, float]], tuple]:
    def key(item: tuple[str, float]) -> tuple:
        doc_id, score = item
        return (-score, -corpus.published_at(doc_id), doc_id)

    return key


def rerank_recency(candidates: RankedList, corpus: Corpus) -> RankedList:
    """Same article set ordered newest first; scores are epoch seconds."""
    items = [(doc_id, float(corpus[doc_id].published_at)) for doc_id in candidates.ids()]
    items.sort(key=lambda it: (-it[1], it[0]))
    return RankedList(qid=candidates.qid, items=tuple(items), tag=RANKER_RECENCY)


def rerank_semantic(
    candidates: RankedList,
    query_text: str,
    store: EmbeddingStore,
    corpus: Corpus,
) -> RankedList:
    """Candidates ordered by cosine to the query embedding.

    Candidates missing from the store are placed last in ascending id order
    with the sentinel score.
    """
    query_vec = embed_query(query_text, store)
    scored: list[tuple[str, float]] = []
    missing: list[str] = []
    for doc_id in candidates.ids():
        if doc_id in store:
            scored.append((doc_id, cosine(query_vec, store.vector(doc_id))))
        else:
            missing.append(doc_id)
    scored.sort(key=_tie_key(corpus))
    items = tuple(scored) + tuple((doc_id, MISSING_VECTOR_SCORE) for doc_id in sorted(missing))
    return RankedList(qid=candidates.qid, items=items, tag=RANKER_SEMANTIC)


# --- external scorer protocol ----------------------------------------------

def _score_request(event_text: str, context_text: str, candidates: RankedList, corpus: Corpus) -> dict:
    return {
        "event_text": event_text,
        "context_text": context_text,
        "candidates": [
            {
                "id": doc_id,
                "headline": corpus[doc_id].headline,
                "lead": corpus[doc_id].lead_text,
            }
            for doc_id in candidates.ids()
        ],
    }


def _parse_scores(payload: object, expected: int) -> list[float]:
    if not isinstance(payload, dict) or "scores" not in payload:
        raise ExternalScorerError("malformed response: expected an object with a 'scores' list")
    scores = payload["scores"]
    if not isinstance(scores, list) or not all(isinstance(s, (int, float)) for s in scores):
        raise ExternalScorerError("malformed response: 'scores' must be a list of numbers")
    if len(scores) != expected:
        raise ExternalScorerError(
            f"score count mismatch: got {len(scores)}, expected {expected}"
        )
    values = [float(s) for s in scores]
    if not all(math.isfinite(v) for v in values):
        raise ExternalScorerError("malformed response: non-finite score")
    return values


def external_scorer(
    event_text: str,
    context_text: str,
    candidates: RankedList,
    endpoint: str,
    corpus: Corpus,
    timeout: float = 30.0,
) -> RankedList:
    """Score candidates with an external process or HTTP endpoint.

    ``endpoint`` is either an http(s) url (request POSTed as json) or
    ``exec:<command>`` (request written to stdin, response read from
    stdout). The response is ``{"scores": [...]}`` aligned with the request
    candidates. Any transport or validation failure aborts the reranking.
    """
    request = _score_request(event_text, context_text, candidates, corpus)
    if endpoint.startswith(("http://", "https://")):
        try:
            resp = requests.post(endpoint, json=request, timeout=timeout)
            resp.raise_for_status()
            payload = resp.json()
        except (requests.RequestException, ValueError) as exc:
            raise ExternalScorerError(f"scorer endpoint {endpoint}: {exc}") from exc
    elif endpoint.startswith("exec:"):
        command = shlex.split(endpoint[len("exec:"):])
        try:
            proc = subprocess.run(
                command,
                input=json.dumps(request).encode("utf-8"),
                capture_output=True,
                timeout=timeout,
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise ExternalScorerError(f"scorer command failed: {exc}") from exc
        if proc.returncode != 0:
            raise ExternalScorerError(
                f"scorer command exited {proc.returncode}: {proc.stderr.decode('utf-8', 'replace')[:500]}"
            )
        try:
            payload = json.loads(proc.stdout.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ExternalScorerError(f"malformed response: {exc}") from exc
    else:
        raise ExternalScorerError(f"unsupported endpoint {endpoint!r} (use http(s):// or exec:)")

    scores = _parse_scores(payload, len(candidates.ids()))
    items = sorted(zip(candidates.ids(), scores), key=_tie_key(corpus))
    return RankedList(qid=candidates.qid, items=tuple(items), tag=RANKER_SEMANTIC)


def rrf_fuse(
    lists: Sequence[RankedList],
    corpus: Corpus,
    config: RrfConfig = RrfConfig(),
) -> RankedList:
    """Fuse member lists: score(d) = sum over lists containing d of 1/(k + rank).

    Ranks are 1-based; an article absent from a list contributes nothing for
    that list. Depends only on ranks, never on member scores.
    """
    if not lists:
        raise ValueError("rrf_fuse needs at least one ranked list")
    contributions: dict[str, list[float]] = {}
    for ranked in lists:
        for rank, doc_id in enumerate(ranked.ids(), start=1):
            contributions.setdefault(doc_id, []).append(1.0 / (config.k + rank))
    # summing in sorted order makes the fused score independent of the order
    # in which member lists were supplied
    fused = {doc_id: sum(sorted(terms)) for doc_id, terms in contributions.items()}
    qid = lists[0].qid
    items = sorted(fused.items(), key=_tie_key(corpus))
    return RankedList(qid=qid, items=tuple(items), tag=RANKER_RRF)


# --- two-stage pipeline -----------------------------------------------------

@dataclass
class PipelineResult:
    final: RankedList
    members: dict[str, RankedList]


class Pipeline:
    """Stage 1: BM25 top-k with the publish-before filter. Stage 2: rerank/fuse.

    The semantic member uses the embedding store when configured, otherwise
    the external scorer endpoint; systems that need neither (bm25, recency)
    work without either.
    """

    def __init__(
        self,
        index: Index,
        corpus: Corpus,
        store: Optional[EmbeddingStore] = None,
        scorer_endpoint: Optional[str] = None,
        rrf: RrfConfig = RrfConfig(),
        candidates: int = 1000,
        scorer_timeout: float = 30.0,
    ):
        self.index = index
        self.corpus = corpus
        self.store = store
        self.scorer_endpoint = scorer_endpoint
        self.rrf = rrf
        self.candidates = candidates
        self.scorer_timeout = scorer_timeout

    def _semantic(self, stage1: RankedList, event_text: str, context_text: str, query_text: str) -> RankedList:
        if self.store is not None:
            return rerank_semantic(stage1, query_text, self.store, self.corpus)
        if self.scorer_endpoint is not None:
            return external_scorer(
                event_text, context_text, stage1, self.scorer_endpoint,
                self.corpus, timeout=self.scorer_timeout,
            )
        raise ValueError("semantic ranking needs an embedding store or scorer endpoint")

    def run(
        self,
        event_text: str,
        context_text: str,
        timestamp: int,
        system: str = SYSTEM_RRF,
        depth: Optional[int] = None,
        qid: str = "",
        query_text: Optional[str] = None,
    ) -> PipelineResult:
        """Retrieve then rerank; every output id comes from the stage-1 set.

        ``query_text`` overrides the default event+context concatenation
        (query-variation modes are built upstream).
        """
        if system not in SYSTEMS:
            raise ValueError(f"unknown system {system!r}; expected one of {SYSTEMS}")
        if query_text is None:
            query_text = (event_text + " " + context_text).strip()

        stage1 = search(self.index, query_text, timestamp, k=self.candidates, qid=qid)
        members: dict[str, RankedList] = {RANKER_BM25: stage1}

        if system == SYSTEM_BM25:
            final = stage1
        elif system == SYSTEM_RECENCY:
            final = rerank_recency(stage1, self.corpus)
            members[RANKER_RECENCY] = final
        elif system == SYSTEM_SEMANTIC:
            final = self._semantic(stage1, event_text, context_text, query_text)
            members[RANKER_SEMANTIC] = final
        elif system == SYSTEM_RRF_RECENCY:
            members[RANKER_SEMANTIC] = self._semantic(stage1, event_text, context_text, query_text)
            final = rrf_fuse([stage1, members[RANKER_SEMANTIC]], self.corpus, self.rrf)
        else:  # SYSTEM_RRF
            members[RANKER_SEMANTIC] = self._semantic(stage1, event_text, context_text, query_text)
            members[RANKER_RECENCY] = rerank_recency(stage1, self.corpus)
            final = rrf_fuse(
                [stage1, members[RANKER_SEMANTIC], members[RANKER_RECENCY]],
                self.corpus, self.rrf,
            )

        if depth is not None:
            final = final.truncated(depth)
        return PipelineResult(final=final, members=members)
