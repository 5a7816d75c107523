"""Build (incomplete-narrative query, relevant article) pairs from hyperlinks.

For every link sentence past the lead paragraph (i > 1) and past its
paragraph's first sentence (j > 1) whose target resolves to an earlier
article, one query is emitted: event text from the source's headline and
lead, context from the sentences before the link sentence, and the link
target as the single relevant article.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .corpus import Corpus, format_timestamp, parse_timestamp

SKIP_LEAD_PARAGRAPH = "lead-paragraph-link"
SKIP_FIRST_SENTENCE = "first-sentence-link"
SKIP_UNRESOLVABLE = "unresolvable-target"
SKIP_SELF_LINK = "self-link"
SKIP_NON_PAST = "non-past-target"
SKIP_REASONS = (
    SKIP_LEAD_PARAGRAPH,
    SKIP_FIRST_SENTENCE,
    SKIP_UNRESOLVABLE,
    SKIP_SELF_LINK,
    SKIP_NON_PAST,
)


class DatasetError(Exception):
    pass


@dataclass(frozen=True)
class Query:
    """An incomplete narrative: event text, context text, and a timestamp.

    ``link_sentence_text`` is kept only for link-sentence-mode experiments
    and audits; it is never part of the query proper.
    """

    qid: str
    event_text: str
    context_text: str
    timestamp: int
    source_article_id: str
    link_paragraph_index: int
    link_sentence_index: int
    link_sentence_text: str
    relevant_article_id: str


@dataclass(frozen=True)
class QrelPair:
    qid: str
    relevant_article_id: str
    grade: int = 1


@dataclass(frozen=True)
class DatasetSplit:
    name: str
    qids: tuple[str, ...]
    time_min: Optional[int]
    time_max: Optional[int]


@dataclass
class BuildResult:
    queries: list[Query]
    qrels: list[QrelPair]
    skips: dict[str, int] = field(default_factory=dict)

    @property
    def total_links(self) -> int:
        return len(self.queries) + sum(self.skips.values())


def event_text_of(article) -> str:
    """Headline plus lead-paragraph sentences, space-joined."""
    return article.headline + " " + article.lead_text


def build_dataset(corpus: Corpus) -> BuildResult:
    """Emit one (query, qrel) per qualifying hyperlink, deterministically.

    Links are visited in (source id, paragraph, sentence, link ordinal)
    order. Every out-link in the corpus is either emitted as a query or
    counted under exactly one skip reason.
    """
    queries: list[Query] = []
    qrels: list[QrelPair] = []
    skips = {reason: 0 for reason in SKIP_REASONS}

    for article in sorted(corpus, key=lambda a: a.id):
        # link ordinal is per (paragraph, sentence), counting all links there
        ordinals: dict[tuple[int, int], int] = {}
        for link in article.out_links:
            coords = (link.paragraph_index, link.sentence_index)
            ordinals[coords] = ordinals.get(coords, 0) + 1
            ordinal = ordinals[coords]

            if link.paragraph_index == 1:
                skips[SKIP_LEAD_PARAGRAPH] += 1
                continue
            if link.sentence_index == 1:
                skips[SKIP_FIRST_SENTENCE] += 1
                continue
            target = corpus.lookup(link.target_url)
            if target is None:
                skips[SKIP_UNRESOLVABLE] += 1
                continue
            if target.id == article.id:
                skips[SKIP_SELF_LINK] += 1
                continue
            if target.published_at >= article.published_at:
                skips[SKIP_NON_PAST] += 1
                continue

            i, j = link.paragraph_index, link.sentence_index
            context = " ".join(article.paragraphs[i - 1][: j - 1])
            qid = f"{article.id}.{i}.{j}.{ordinal}"
            queries.append(Query(
                qid=qid,
                event_text=event_text_of(article),
                context_text=context,
                timestamp=article.published_at,
                source_article_id=article.id,
                link_paragraph_index=i,
                link_sentence_index=j,
                link_sentence_text=article.sentence(i, j),
                relevant_article_id=target.id,
            ))
            qrels.append(QrelPair(qid=qid, relevant_article_id=target.id))

    return BuildResult(queries=queries, qrels=qrels, skips=skips)


def chronological_split(
    queries: Sequence[Query],
    fractions: tuple[float, float, float] = (0.90, 0.05, 0.05),
) -> tuple[DatasetSplit, DatasetSplit, DatasetSplit]:
    """Partition queries by time order into train/dev/test.

    Queries are sorted by (timestamp, qid); the first floor(f1*n) go to
    train, the next floor((f1+f2)*n) - floor(f1*n) to dev, the rest to test.
    """
    n = len(queries)
    if n < 3:
        raise DatasetError(f"cannot split {n} queries into three splits")
    f1, f2, f3 = fractions
    if min(f1, f2, f3) <= 0 or abs(f1 + f2 + f3 - 1.0) > 1e-9:
        raise DatasetError(f"fractions must be positive and sum to 1, got {fractions}")

    ordered = sorted(queries, key=lambda q: (q.timestamp, q.qid))
    n_train = int(f1 * n)
    n_train_dev = int((f1 + f2) * n)
    parts = (ordered[:n_train], ordered[n_train:n_train_dev], ordered[n_train_dev:])

    def make(name: str, qs: list[Query]) -> DatasetSplit:
        times = [q.timestamp for q in qs]
        return DatasetSplit(
            name=name,
            qids=tuple(q.qid for q in qs),
            time_min=min(times) if times else None,
            time_max=max(times) if times else None,
        )

    return make("train", parts[0]), make("dev", parts[1]), make("test", parts[2])


def _histogram(values: Iterable[int], bin_width: int) -> dict[int, int]:
    hist: dict[int, int] = {}
    for v in values:
        lo = (v // bin_width) * bin_width
        hist[lo] = hist.get(lo, 0) + 1
    return dict(sorted(hist.items()))


def day_difference(query: Query, corpus: Corpus) -> int:
    """Whole days between query time and its relevant article's publish time."""
    relevant = corpus[query.relevant_article_id]
    return (query.timestamp - relevant.published_at) // 86400


def dataset_stats(
    queries: Sequence[Query],
    corpus: Corpus,
    splits: Optional[Sequence[DatasetSplit]] = None,
    token_bin_width: int = 10,
    day_bin_width: int = 30,
) -> dict:
    """Per-split dataset report: counts, i/j stats, token and day-gap histograms.

    Token counts are whitespace tokens of the event and context texts.
    """
    by_qid = {q.qid: q for q in queries}
    if splits is None:
        groups = [("all", list(queries))]
    else:
        groups = [(s.name, [by_qid[qid] for qid in s.qids]) for s in splits]

    report: dict = {"splits": {}}
    for name, qs in groups:
        if not qs:
            report["splits"][name] = {"queries": 0}
            continue
        i_vals = [q.link_paragraph_index for q in qs]
        j_vals = [q.link_sentence_index for q in qs]
        report["splits"][name] = {
            "queries": len(qs),
            "unique_source_articles": len({q.source_article_id for q in qs}),
            "unique_relevant_articles": len({q.relevant_article_id for q in qs}),
            "link_paragraph_index": {
                "mean": statistics.fmean(i_vals),
                "median": statistics.median(i_vals),
            },
            "link_sentence_index": {
                "mean": statistics.fmean(j_vals),
                "median": statistics.median(j_vals),
            },
            "event_token_histogram": {
                "bin_width": token_bin_width,
                "bins": _histogram((len(q.event_text.split()) for q in qs), token_bin_width),
            },
            "context_token_histogram": {
                "bin_width": token_bin_width,
                "bins": _histogram((len(q.context_text.split()) for q in qs), token_bin_width),
            },
            "day_difference_histogram": {
                "bin_width": day_bin_width,
                "bins": _histogram((day_difference(q, corpus) for q in qs), day_bin_width),
            },
        }
    return report


# --- file formats ---------------------------------------------------------

def query_to_record(query: Query) -> dict:
    return {
        "qid": query.qid,
        "event_text": query.event_text,
        "context_text": query.context_text,
        "timestamp": format_timestamp(query.timestamp),
        "source_article_id": query.source_article_id,
        "link_paragraph_index": query.link_paragraph_index,
        "link_sentence_index": query.link_sentence_index,
        "link_sentence_text": query.link_sentence_text,
        "relevant_article_id": query.relevant_article_id,
    }


def query_from_record(record: dict) -> Query:
    return Query(
        qid=record["qid"],
        event_text=record["event_text"],
        context_text=record["context_text"],
        timestamp=parse_timestamp(record["timestamp"]),
        source_article_id=record["source_article_id"],
        link_paragraph_index=int(record["link_paragraph_index"]),
        link_sentence_index=int(record["link_sentence_index"]),
        link_sentence_text=record["link_sentence_text"],
        relevant_article_id=record["relevant_article_id"],
    )


def write_queries(queries: Iterable[Query], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for q in queries:
            fh.write(json.dumps(query_to_record(q), ensure_ascii=False) + "\n")


def read_queries(path: str | Path) -> list[Query]:
    queries = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                queries.append(query_from_record(json.loads(line)))
    return queries


def write_skip_report(skips: dict[str, int], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for reason in SKIP_REASONS:
            fh.write(f"{reason}\t{skips.get(reason, 0)}\n")
