"""HTTP search service over an immutable index snapshot.

Requests are stateless reads against the current snapshot; the only
mutation anywhere is an atomic snapshot swap (hot reload). Identical
requests return identical results until the snapshot changes.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field, field_validator

from .corpus import Corpus, article_to_record, format_timestamp, ingest, parse_timestamp
from .index_bm25 import Index, build_index, load_index
from .rankers import (
    EmbeddingStore,
    Pipeline,
    SYSTEM_RRF,
    SYSTEMS,
    load_embedding_store,
)

SERVICE_MODES = ("E", "C", "EC")


@dataclass(frozen=True)
class Snapshot:
    """One immutable generation of corpus + index (+ embeddings)."""

    corpus: Corpus
    index: Index
    store: Optional[EmbeddingStore]
    version: int
    label: str

    def pipeline(self, candidates: int = 1000) -> Pipeline:
        return Pipeline(self.index, self.corpus, store=self.store, candidates=candidates)


class SnapshotHolder:
    """Atomic pointer to the live snapshot; swap bumps the version."""

    def __init__(self):
        self._lock = threading.Lock()
        self._snapshot: Optional[Snapshot] = None
        self._version = 0

    def get(self) -> Optional[Snapshot]:
        return self._snapshot

    def swap(self, corpus: Corpus, index: Index, store: Optional[EmbeddingStore], label: str = "") -> Snapshot:
        with self._lock:
            self._version += 1
            snapshot = Snapshot(
                corpus=corpus, index=index, store=store,
                version=self._version, label=label or f"snapshot-{self._version}",
            )
            self._snapshot = snapshot
            return snapshot


@dataclass
class SnapshotPaths:
    corpus_path: str
    index_path: Optional[str] = None
    embeddings_path: Optional[str] = None
    word_vectors_path: Optional[str] = None


def load_snapshot_into(holder: SnapshotHolder, paths: SnapshotPaths) -> Snapshot:
    """Build or load the artifacts and atomically publish them."""
    corpus = ingest(paths.corpus_path)
    if paths.index_path and Path(paths.index_path).exists():
        index = load_index(paths.index_path)
    else:
        index = build_index(corpus)
    store = None
    if paths.embeddings_path:
        store = load_embedding_store(paths.embeddings_path, paths.word_vectors_path)
    return holder.swap(corpus, index, store, label=Path(paths.corpus_path).name)


class SearchRequest(BaseModel):
    event_text: str = ""
    context_text: str = ""
    timestamp: Optional[str] = None  # ISO 8601; defaults to now (UTC)
    mode: str = "EC"
    system: str = SYSTEM_RRF
    depth: int = Field(default=20, ge=1)

    @field_validator("mode")
    @classmethod
    def _check_mode(cls, v: str) -> str:
        if v not in SERVICE_MODES:
            raise ValueError(f"mode must be one of {SERVICE_MODES}")
        return v

    @field_validator("system")
    @classmethod
    def _check_system(cls, v: str) -> str:
        if v not in SYSTEMS:
            raise ValueError(f"system must be one of {SYSTEMS}")
        return v


class SearchResultItem(BaseModel):
    article_id: str
    headline: str
    lead: str
    published_at: str
    score: float
    member_ranks: dict[str, int]


class SearchResponse(BaseModel):
    results: list[SearchResultItem]
    took_ms: float
    snapshot_version: int
    snapshot_label: str
    query_text: str
    timestamp: str


def _query_text_for(request: SearchRequest) -> str:
    if request.mode == "E":
        text = request.event_text
    elif request.mode == "C":
        text = request.context_text
    else:
        text = (request.event_text + " " + request.context_text).strip()
    if not text.strip():
        raise HTTPException(
            status_code=400,
            detail={"reason": "empty-query", "message": f"mode {request.mode} needs non-empty text"},
        )
    return text


def create_app(holder: SnapshotHolder, candidates: int = 1000) -> FastAPI:
    app = FastAPI(title="newsctx search service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.holder = holder
    app.state.reload_paths: Optional[SnapshotPaths] = None

    def _snapshot() -> Snapshot:
        snapshot = holder.get()
        if snapshot is None:
            raise HTTPException(
                status_code=503,
                detail={"reason": "loading", "message": "index snapshot not loaded yet"},
            )
        return snapshot

    @app.get("/health")
    def health():
        snapshot = holder.get()
        if snapshot is None:
            return {"status": "loading", "snapshot_version": 0}
        return {
            "status": "ok",
            "snapshot_version": snapshot.version,
            "snapshot_label": snapshot.label,
            "articles": snapshot.index.N,
            "vocabulary": snapshot.index.vocabulary_size,
            "avgdl": snapshot.index.avgdl,
            "semantic_available": snapshot.store is not None,
        }

    @app.post("/search", response_model=SearchResponse)
    def search_endpoint(request: SearchRequest):
        snapshot = _snapshot()
        if request.system in ("semantic", "rrf-recency", "rrf") and snapshot.store is None:
            raise HTTPException(
                status_code=400,
                detail={
                    "reason": "semantic-unavailable",
                    "message": f"system {request.system!r} needs an embedding store; none loaded",
                },
            )
        query_text = _query_text_for(request)
        try:
            cutoff = parse_timestamp(request.timestamp) if request.timestamp else int(
                datetime.now(tz=timezone.utc).timestamp()
            )
        except ValueError as exc:
            raise HTTPException(
                status_code=400,
                detail={"reason": "bad-timestamp", "message": str(exc)},
            ) from exc

        started = time.perf_counter()
        result = snapshot.pipeline(candidates=candidates).run(
            event_text=request.event_text,
            context_text=request.context_text,
            timestamp=cutoff,
            system=request.system,
            depth=request.depth,
            query_text=query_text,
        )
        took_ms = (time.perf_counter() - started) * 1000.0
        member_ranks = {tag: ranked.ranks() for tag, ranked in result.members.items()}
        items = []
        for doc_id, score in result.final.items:
            article = snapshot.corpus[doc_id]
            items.append(SearchResultItem(
                article_id=doc_id,
                headline=article.headline,
                lead=article.lead_text,
                published_at=format_timestamp(article.published_at),
                score=score,
                member_ranks={
                    tag: ranks[doc_id] for tag, ranks in member_ranks.items() if doc_id in ranks
                },
            ))
        return SearchResponse(
            results=items,
            took_ms=took_ms,
            snapshot_version=snapshot.version,
            snapshot_label=snapshot.label,
            query_text=query_text,
            timestamp=format_timestamp(cutoff),
        )

    @app.get("/article/{article_id}")
    def article_by_id(article_id: str):
        snapshot = _snapshot()
        article = snapshot.corpus.get(article_id)
        if article is None:
            raise HTTPException(
                status_code=404,
                detail={"reason": "unknown-article", "message": f"no article {article_id!r}"},
            )
        return article_to_record(article)

    @app.post("/admin/reload")
    def reload_snapshot():
        paths = app.state.reload_paths
        if paths is None:
            raise HTTPException(
                status_code=400,
                detail={"reason": "no-reload-paths", "message": "service was not started from files"},
            )
        snapshot = load_snapshot_into(holder, paths)
        return {"status": "ok", "snapshot_version": snapshot.version}

    return app


def serve(paths: SnapshotPaths, host: str = "127.0.0.1", port: int = 8321, candidates: int = 1000) -> None:
    """Load artifacts, publish the snapshot, and run the HTTP server."""
    import uvicorn

    holder = SnapshotHolder()
    app = create_app(holder, candidates=candidates)
    app.state.reload_paths = paths
    load_snapshot_into(holder, paths)
    uvicorn.run(app, host=host, port=port, log_level="info")
