"""Result breakdowns: vocabulary gap, temporal distance, entity popularity.

Each report bins queries along one dimension and gives per-bin MRR for every
system under comparison, with excluded queries counted rather than dropped.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .corpus import Article, Corpus
from .dataset_builder import Query, day_difference
from .evaluation import EvalReport
from .index_bm25 import tokenize

DEFAULT_JACCARD_EDGES = (0.0, 0.05, 0.1, 0.2, 0.4, 1.0)
DEFAULT_DAY_EDGES = (7, 30, 90, 365)  # inclusive upper bounds; a final open bin is added

DIMENSION_JACCARD_Q = "jaccard-q"
DIMENSION_JACCARD_C = "jaccard-c"
DIMENSION_DAYDIFF = "daydiff"
DIMENSION_ENTITY_IDF = "entity-idf"


class AnalysisError(Exception):
    pass


def jaccard(text_a: str, text_b: str) -> float:
    """Jaccard similarity of the two texts' token sets; both empty gives 0."""
    set_a = set(tokenize(text_a))
    set_b = set(tokenize(text_b))
    if not set_a and not set_b:
        return 0.0
    return len(set_a & set_b) / len(set_a | set_b)


@dataclass
class Bin:
    label: str
    count: int
    mrr: dict[str, float]  # system -> mean reciprocal rank of queries in the bin


@dataclass
class BinnedReport:
    dimension: str
    bins: list[Bin]
    excluded: dict[str, int] = field(default_factory=dict)
    heuristic_entities: bool = False

    @property
    def total_binned(self) -> int:
        return sum(b.count for b in self.bins)

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "bins": [{"label": b.label, "count": b.count, "mrr": b.mrr} for b in self.bins],
            "excluded": self.excluded,
            "heuristic_entities": self.heuristic_entities,
        }

    def to_tsv(self) -> str:
        systems = sorted({s for b in self.bins for s in b.mrr})
        lines = ["\t".join(["bin", "count"] + [f"mrr:{s}" for s in systems])]
        for b in self.bins:
            cells = [b.label, str(b.count)]
            cells += [f"{b.mrr[s]:.4f}" if s in b.mrr else "-" for s in systems]
            lines.append("\t".join(cells))
        for reason, count in sorted(self.excluded.items()):
            lines.append(f"# excluded {reason}\t{count}")
        return "\n".join(lines) + "\n"


def _mean_rr(qids: Sequence[str], reports: Mapping[str, EvalReport]) -> dict[str, float]:
    out = {}
    for system, report in reports.items():
        values = [report.per_query[qid].rr for qid in qids if qid in report.per_query]
        out[system] = sum(values) / len(values) if values else 0.0
    return out


def _bin_by_edges(
    values: dict[str, float],
    edges: Sequence[float],
    reports: Mapping[str, EvalReport],
    dimension: str,
    excluded: dict[str, int],
) -> BinnedReport:
    """Left-closed bins over consecutive edges; final bin includes its upper edge."""
    assignments: list[list[str]] = [[] for _ in range(len(edges) - 1)]
    for qid, value in values.items():
        placed = False
        for i in range(len(edges) - 1):
            lo, hi = edges[i], edges[i + 1]
            last = i == len(edges) - 2
            if (lo <= value < hi) or (last and lo <= value <= hi):
                assignments[i].append(qid)
                placed = True
                break
        if not placed:
            excluded["out-of-range"] = excluded.get("out-of-range", 0) + 1
    bins = []
    for i, qids in enumerate(assignments):
        lo, hi = edges[i], edges[i + 1]
        closer = "]" if i == len(edges) - 2 else ")"
        bins.append(Bin(label=f"[{lo:g}, {hi:g}{closer}", count=len(qids), mrr=_mean_rr(qids, reports)))
    return BinnedReport(dimension=dimension, bins=bins, excluded=excluded)


def relevant_text(article: Article) -> str:
    """The relevant article's side of the overlap comparison: headline + lead."""
    return article.headline + " " + article.lead_text


def vocabulary_gap_report(
    queries: Sequence[Query],
    corpus: Corpus,
    reports: Mapping[str, EvalReport],
    variant: str = "full-query",
    edges: Sequence[float] = DEFAULT_JACCARD_EDGES,
) -> BinnedReport:
    """MRR per Jaccard-similarity bin between the query and its relevant article.

    ``variant`` selects the query side: event+context, or context alone.
    """
    if variant not in ("full-query", "context-only"):
        raise AnalysisError(f"unknown variant {variant!r}")
    dimension = DIMENSION_JACCARD_Q if variant == "full-query" else DIMENSION_JACCARD_C
    values = {}
    for q in queries:
        query_side = q.context_text if variant == "context-only" else q.event_text + " " + q.context_text
        values[q.qid] = jaccard(query_side, relevant_text(corpus[q.relevant_article_id]))
    return _bin_by_edges(values, edges, reports, dimension, excluded={})


def temporal_report(
    queries: Sequence[Query],
    corpus: Corpus,
    reports: Mapping[str, EvalReport],
    day_edges: Sequence[int] = DEFAULT_DAY_EDGES,
) -> BinnedReport:
    """MRR grouped by whole-day gap between query and relevant article.

    Bins are [0, e1], (e1, e2], ..., plus a final open bin. Negative gaps
    violate the dataset invariant and are excluded with a count.
    """
    excluded: dict[str, int] = {}
    per_bin: list[list[str]] = [[] for _ in range(len(day_edges) + 1)]
    labels = []
    prev = 0
    for edge in day_edges:
        labels.append(f"[{prev}, {edge}]" if prev == 0 else f"({prev}, {edge}]")
        prev = edge
    labels.append(f"({prev}, inf)")

    for q in queries:
        gap = day_difference(q, corpus)
        if gap < 0:
            excluded["negative-day-difference"] = excluded.get("negative-day-difference", 0) + 1
            continue
        placed = False
        for i, edge in enumerate(day_edges):
            if gap <= edge:
                per_bin[i].append(q.qid)
                placed = True
                break
        if not placed:
            per_bin[-1].append(q.qid)

    bins = [
        Bin(label=labels[i], count=len(qids), mrr=_mean_rr(qids, reports))
        for i, qids in enumerate(per_bin)
    ]
    return BinnedReport(dimension=DIMENSION_DAYDIFF, bins=bins, excluded=excluded)


# --- entity popularity ---------------------------------------------------------

_CAP_TOKEN = re.compile(r"^[\"'(\[]*[A-Z]")


def heuristic_entities(text: str) -> list[str]:
    """Maximal runs of capitalized tokens, skipping the first token.

    A crude stand-in for real annotations: reported output is labeled as
    heuristic whenever this path is used.
    """
    words = text.split()
    entities = []
    run: list[str] = []
    for pos, word in enumerate(words):
        if pos > 0 and _CAP_TOKEN.match(word):
            run.append(word.strip("\"'()[],.;:!?"))
        else:
            if run:
                entities.append(" ".join(w for w in run if w))
            run = []
    if run:
        entities.append(" ".join(w for w in run if w))
    return [e for e in entities if e]


def _corpus_entities(corpus: Corpus) -> tuple[dict[str, list[str]], bool]:
    """Entity surfaces per article; falls back to the heuristic when none shipped."""
    annotated = any(a.entities is not None for a in corpus)
    per_article = {}
    for a in corpus:
        if annotated:
            per_article[a.id] = list(a.entities or ())
        else:
            per_article[a.id] = heuristic_entities(a.headline + " " + a.lead_text)
    return per_article, not annotated


def entity_document_frequencies(corpus: Corpus) -> tuple[dict[str, int], bool]:
    """Case-folded entity -> number of articles mentioning it."""
    per_article, heuristic = _corpus_entities(corpus)
    df: dict[str, int] = {}
    for ents in per_article.values():
        for ent in {e.lower() for e in ents}:
            df[ent] = df.get(ent, 0) + 1
    return df, heuristic


def query_entities(query: Query, corpus: Corpus, text_source: str = "ec") -> list[str]:
    """Entities mentioned in the query text.

    With annotations, the source article's entities are matched against the
    query text; otherwise the capitalized-run heuristic runs on it directly.
    """
    if text_source == "e":
        text = query.event_text
    elif text_source == "ec":
        text = query.event_text + " " + query.context_text
    else:
        raise AnalysisError(f"unknown text_source {text_source!r}")
    source = corpus.get(query.source_article_id)
    if source is not None and source.entities is not None:
        folded = text.lower()
        return [ent for ent in source.entities if ent.lower() in folded]
    return heuristic_entities(text)


def entity_idf_report(
    queries: Sequence[Query],
    corpus: Corpus,
    reports: Mapping[str, EvalReport],
    text_source: str = "ec",
    n_bins: int = 5,
) -> BinnedReport:
    """MRR grouped by the mean idf ln(N/df) of the query's entities.

    Bin edges are quantiles of the observed per-query values. Queries with
    no (known) entities are excluded and counted.
    """
    if len(corpus) == 0:
        raise AnalysisError("empty corpus")
    df, heuristic = entity_document_frequencies(corpus)
    n_articles = len(corpus)
    excluded: dict[str, int] = {}
    values: dict[str, float] = {}
    for q in queries:
        ents = query_entities(q, corpus, text_source)
        idfs = [math.log(n_articles / df[e.lower()]) for e in ents if e.lower() in df]
        if not idfs:
            reason = "no-entities" if not ents else "entities-unseen-in-corpus"
            excluded[reason] = excluded.get(reason, 0) + 1
            continue
        values[q.qid] = sum(idfs) / len(idfs)

    if not values:
        report = BinnedReport(dimension=DIMENSION_ENTITY_IDF, bins=[], excluded=excluded)
        report.heuristic_entities = heuristic
        return report

    ordered = sorted(values.values())
    edges = [ordered[0]]
    for i in range(1, n_bins):
        edges.append(ordered[min(len(ordered) - 1, int(i * len(ordered) / n_bins))])
    edges.append(ordered[-1])
    # collapse duplicate quantile edges so bins stay disjoint
    unique_edges = sorted(set(edges))
    if len(unique_edges) < 2:
        unique_edges = [unique_edges[0], unique_edges[0] + 1e-9]
    report = _bin_by_edges(values, unique_edges, reports, DIMENSION_ENTITY_IDF, excluded)
    report.heuristic_entities = heuristic
    return report


# --- output ---------------------------------------------------------------------

def write_report(report: BinnedReport, tsv_path: str | Path, json_path: Optional[str | Path] = None) -> None:
    with open(tsv_path, "w", encoding="utf-8") as fh:
        fh.write(report.to_tsv())
    if json_path is not None:
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def render_report_figure(report: BinnedReport, path: str | Path) -> None:
    """Static grouped-bar figure of per-bin MRR per system."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    systems = sorted({s for b in report.bins for s in b.mrr})
    labels = [b.label for b in report.bins]
    x = range(len(labels))
    width = 0.8 / max(1, len(systems))
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for i, system in enumerate(systems):
        heights = [b.mrr.get(system, 0.0) for b in report.bins]
        ax.bar([xi + i * width for xi in x], heights, width=width, label=system)
    ax.set_xticks([xi + 0.4 - width / 2 for xi in x])
    ax.set_xticklabels(labels, rotation=20, ha="right", fontsize=8)
    counts = ", ".join(str(b.count) for b in report.bins)
    ax.set_title(f"MRR by {report.dimension} (bin sizes: {counts})")
    ax.set_ylabel("MRR")
    if systems:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
