"""Synthetic retrieval benchmark with complementary planted relevance signals.

Each generated source article links to one relevant article. The relevant
article is moderately strong under all three rankers, while planted
distractors each dominate exactly one signal:

* lexical distractors repeat the query's rare bridge term more often;
* semantic distractors sit purer on the query's topic axis in the
  embedding sidecar;
* recency distractors are published between the relevant article and the
  query time.

Fusing the rankers therefore beats each one alone, and because part of the
lexical signal lives only in the event text and part only in the context,
querying with both covers strictly more relevant articles than either side
alone. Everything is deterministic given the seed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .corpus import Article, Corpus, OutLink, write_corpus
from .rankers import write_embedding_sidecar

DAY = 86400
HOUR = 3600

# bridge placement / topic surface per query, cycled
TYPE_BOTH_SAME = "bridge-both-same-surface"
TYPE_EVENT_ALT = "bridge-event-alt-surface"
TYPE_CONTEXT_ALT = "bridge-context-alt-surface"
QUERY_TYPES = (TYPE_BOTH_SAME, TYPE_EVENT_ALT, TYPE_CONTEXT_ALT)

COMMON_WORDS = tuple(f"common{i}" for i in range(10))
BETA_POOL = tuple(f"beta{i}" for i in range(120))


@dataclass(frozen=True)
class BenchmarkConfig:
    n_queries: int = 60
    n_junk: int = 300
    n_opinion: int = 30
    seed: int = 13
    base_time: int = 1514764800  # 2018-01-01T00:00:00Z
    junk_span_days: int = 180
    window_days: int = 2
    old_relevant_every: int = 10  # every k-th query gets an old relevant article
    jitter: float = 0.01


@dataclass(frozen=True)
class PlantedQuery:
    index: int
    source_id: str
    relevant_id: str
    query_type: str
    n_lexical: int
    n_semantic: int
    n_recency: int
    old_relevant: bool


@dataclass
class Benchmark:
    corpus: Corpus  # unfiltered; contains opinion-section junk on purpose
    article_vectors: dict[str, np.ndarray]
    word_vectors: dict[str, np.ndarray]
    planted: list[PlantedQuery]
    config: BenchmarkConfig

    def write(self, outdir: str | Path) -> dict[str, Path]:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        paths = {
            "corpus": outdir / "corpus.jsonl",
            "embeddings": outdir / "embeddings.txt",
            "word_vectors": outdir / "word_vectors.txt",
        }
        write_corpus(self.corpus, paths["corpus"])
        write_embedding_sidecar(self.article_vectors, paths["embeddings"])
        with open(paths["word_vectors"], "w", encoding="utf-8") as fh:
            for word in sorted(self.word_vectors):
                vec = self.word_vectors[word]
                fh.write(word + " " + " ".join(f"{x:.8g}" for x in vec) + "\n")
        return paths


def _unit(dim: int, axis: int) -> np.ndarray:
    v = np.zeros(dim)
    v[axis] = 1.0
    return v


class _Builder:
    def __init__(self, config: BenchmarkConfig):
        self.config = config
        self.rng = random.Random(config.seed)
        self.np_rng = np.random.default_rng(config.seed)
        self.dim = 3 * config.n_queries
        self.articles: list[Article] = []
        self.vectors: dict[str, np.ndarray] = {}
        self.words: dict[str, np.ndarray] = {}
        self.planted: list[PlantedQuery] = []

    # axis layout: per query i, source topic 3i, relevant topic 3i+1, noise 3i+2
    def _src_axis(self, i: int) -> int:
        return 3 * i

    def _dst_axis(self, i: int) -> int:
        return 3 * i + 1

    def _noise_axis(self, i: int) -> int:
        return 3 * i + 2

    def _jittered(self, base: np.ndarray) -> np.ndarray:
        g = self.np_rng.standard_normal(self.dim)
        g /= np.linalg.norm(g)
        v = base + self.config.jitter * g
        return v / np.linalg.norm(v)

    def _betas(self, n: int) -> list[str]:
        return [self.rng.choice(BETA_POOL) for _ in range(n)]

    def _add(self, article: Article, vector: np.ndarray) -> None:
        self.articles.append(article)
        self.vectors[article.id] = vector

    def _junk_article(self, k: int, when: int, section: str) -> None:
        art_id = f"junk{k:04d}"
        headline = " ".join(self._betas(self.rng.randint(6, 8)))
        n_common = self.rng.randint(2, 4)
        body = (
            self.rng.sample(COMMON_WORDS, n_common)
            + self._betas(self.rng.randint(10, 36))
        )
        self.rng.shuffle(body)
        self._add(
            Article(
                id=art_id,
                url=f"https://news.example.com/{art_id}",
                headline=headline,
                paragraphs=((" ".join(body),),),
                published_at=when,
                section=section,
            ),
            self._jittered(_unit(self.dim, self._noise_axis(k % self.config.n_queries))),
        )

    def build(self) -> Benchmark:
        cfg = self.config
        junk_span = cfg.junk_span_days * DAY
        junk_times = sorted(
            self.rng.randrange(cfg.base_time, cfg.base_time + junk_span)
            for _ in range(cfg.n_junk + cfg.n_opinion)
        )
        for k, when in enumerate(junk_times):
            section = "opinion" if k % ((cfg.n_junk + cfg.n_opinion) // max(1, cfg.n_opinion)) == 0 else "news"
            self._junk_article(k, when, section)

        windows_start = cfg.base_time + (cfg.junk_span_days + 20) * DAY
        for i in range(cfg.n_queries):
            self._plant_query(i, windows_start)

        for i in range(cfg.n_queries):
            # word vectors: source-event term and the two topic surface forms
            self.words[f"ev{i}t"] = _unit(self.dim, self._src_axis(i))
            self.words[f"dx{i}a"] = _unit(self.dim, self._dst_axis(i))
            self.words[f"dx{i}b"] = _unit(self.dim, self._dst_axis(i))

        self.articles.sort(key=lambda a: (a.published_at, a.id))
        return Benchmark(
            corpus=Corpus(self.articles),
            article_vectors=self.vectors,
            word_vectors=self.words,
            planted=self.planted,
            config=cfg,
        )

    def _plant_query(self, i: int, windows_start: int) -> None:
        cfg = self.config
        rng = self.rng
        query_type = QUERY_TYPES[i % 3]
        n_lex = 2 + (i % 2)
        n_sem = 2 + ((i // 2) % 2)
        n_rec = 2 + ((i // 4) % 2)
        old_relevant = (i % cfg.old_relevant_every) == cfg.old_relevant_every - 1

        window_len = cfg.window_days * DAY
        t_query = windows_start + (i + 1) * window_len - HOUR
        alpha = [f"a{i}w{k}" for k in range(24)]
        bridge = f"bridge{i}"
        weak = f"weak{i}"
        ev = f"ev{i}t"
        surface_query = f"dx{i}a"
        surface_rel = surface_query if query_type == TYPE_BOTH_SAME else f"dx{i}b"
        bridge_in_event = query_type in (TYPE_BOTH_SAME, TYPE_EVENT_ALT)
        bridge_in_context = query_type in (TYPE_BOTH_SAME, TYPE_CONTEXT_ALT)
        # context common words are fixed first so recency distractors can be
        # guaranteed into the candidate set
        ctx_commons = rng.sample(COMMON_WORDS, 2)

        # relevant article: moderate in every signal
        rel_id = f"rel{i:03d}"
        rel_headline = " ".join([surface_rel, surface_rel] + self._betas(6))
        rel_lead = " ".join([surface_rel, bridge] + self._betas(14))
        if old_relevant:
            t_rel = cfg.base_time + rng.randrange(30 * DAY, cfg.junk_span_days * DAY - DAY)
        else:
            t_rel = t_query - rng.randint(8, 20) * HOUR
        rel_vec = _unit(self.dim, self._dst_axis(i)) + 0.75 * _unit(self.dim, self._noise_axis(i))
        self._add(
            Article(
                id=rel_id,
                url=f"https://news.example.com/{rel_id}",
                headline=rel_headline,
                paragraphs=((rel_lead,),),
                published_at=t_rel,
                section="world",
            ),
            rel_vec / np.linalg.norm(rel_vec),
        )

        early_lo = cfg.base_time + 30 * DAY
        early_hi = cfg.base_time + (cfg.junk_span_days - 1) * DAY

        # lexical distractors: one extra bridge occurrence, same length and topic
        for j in range(n_lex):
            art_id = f"lex{i:03d}x{j}"
            lead = " ".join(
                [surface_rel, bridge, bridge]
                + rng.sample(COMMON_WORDS, 2)
                + self._betas(11)
            )
            self._add(
                Article(
                    id=art_id,
                    url=f"https://news.example.com/{art_id}",
                    headline=" ".join([surface_rel, surface_rel] + self._betas(6)),
                    paragraphs=((lead,),),
                    published_at=rng.randrange(early_lo, early_hi),
                    section="world",
                ),
                self._jittered(_unit(self.dim, self._noise_axis(i))),
            )

        # semantic distractors: pure on the topic axis, lexically weak (long)
        for j in range(n_sem):
            art_id = f"sem{i:03d}x{j}"
            lead = " ".join([weak] + self._betas(55))
            self._add(
                Article(
                    id=art_id,
                    url=f"https://news.example.com/{art_id}",
                    headline=" ".join(self._betas(8)),
                    paragraphs=((lead,),),
                    published_at=rng.randrange(early_lo, early_hi),
                    section="business",
                ),
                _unit(self.dim, self._dst_axis(i)),
            )

        # recency distractors: newest candidates, lexically and semantically weak
        rec_lo = t_rel if not old_relevant else t_query - 6 * HOUR
        for j in range(n_rec):
            art_id = f"rec{i:03d}x{j}"
            lead = " ".join([ctx_commons[0], rng.choice(COMMON_WORDS)] + self._betas(38))
            self._add(
                Article(
                    id=art_id,
                    url=f"https://news.example.com/{art_id}",
                    headline=" ".join(self._betas(8)),
                    paragraphs=((lead,),),
                    published_at=rng.randrange(rec_lo + 1, t_query),
                    section="news",
                ),
                self._jittered(_unit(self.dim, self._noise_axis(i))),
            )

        # source article: event text and context carry the planted query signal
        src_id = f"src{i:03d}"
        headline = " ".join([ev, ev] + [alpha[k] for k in range(6)])
        lead_tokens = [ev] + [alpha[k] for k in range(6, 19)]
        if bridge_in_event:
            lead_tokens.extend([bridge, bridge])
        context_tokens = (
            [surface_query, surface_query, weak]
            + ctx_commons
            + [alpha[k] for k in range(19, 24)]
        )
        if bridge_in_context:
            context_tokens.extend([bridge, bridge])
        link_sentence = rel_headline
        self._add(
            Article(
                id=src_id,
                url=f"https://news.example.com/{src_id}",
                headline=headline,
                paragraphs=(
                    (" ".join(lead_tokens),),
                    (" ".join(context_tokens), link_sentence),
                ),
                published_at=t_query,
                section="news",
                out_links=(
                    OutLink(
                        paragraph_index=2,
                        sentence_index=2,
                        target_url=f"https://news.example.com/{rel_id}",
                        anchor_text=rel_headline,
                    ),
                ),
            ),
            self._jittered(_unit(self.dim, self._src_axis(i))),
        )

        self.planted.append(PlantedQuery(
            index=i,
            source_id=src_id,
            relevant_id=rel_id,
            query_type=query_type,
            n_lexical=n_lex,
            n_semantic=n_sem,
            n_recency=n_rec,
            old_relevant=old_relevant,
        ))


def generate_benchmark(config: Optional[BenchmarkConfig] = None) -> Benchmark:
    """Build the benchmark deterministically from the config seed."""
    return _Builder(config or BenchmarkConfig()).build()
