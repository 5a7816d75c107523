"""Scoring of run files against qrels: MRR, recall cutoffs, significance.

Each query has exactly one relevant article, so reciprocal rank fully
determines the per-query contribution and recall at a cutoff is binary.
The paired two-tailed t-test computes its p-value exactly from the
regularized incomplete beta function, so small datasets get correct values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .dataset_builder import QrelPair, Query
from .index_bm25 import RankedList
from .rankers import Pipeline

MODE_E = "E"
MODE_C = "C"
MODE_EC = "EC"
MODE_LS = "LS"
MODES = (MODE_E, MODE_C, MODE_EC, MODE_LS)

SIGNIFICANCE_ALPHA = 0.01


class EvaluationError(Exception):
    pass


def build_query_text(query: Query, mode: str) -> str:
    """Query text for a variation mode: event, context, both, or link sentence."""
    if mode == MODE_E:
        return query.event_text
    if mode == MODE_C:
        return query.context_text
    if mode == MODE_EC:
        return (query.event_text + " " + query.context_text).strip()
    if mode == MODE_LS:
        if not query.link_sentence_text:
            raise EvaluationError(f"query {query.qid} has no link sentence text for LS mode")
        return query.link_sentence_text
    raise EvaluationError(f"unknown query mode {mode!r}; expected one of {MODES}")


@dataclass(frozen=True)
class QueryEval:
    rank: Optional[int]  # 1-based rank of the relevant article, None if absent
    rr: float
    r20: int
    r1000: int


@dataclass
class EvalReport:
    per_query: dict[str, QueryEval]
    mrr: float
    r20: float
    r1000: float
    n: int
    # per-metric paired t-test against a baseline report, filled by attach_ttests
    ttest_vs_baseline: Optional[dict[str, "TTestResult"]] = None

    def metric_values(self, metric: str) -> list[float]:
        """Per-query values in sorted-qid order for paired comparisons."""
        picker = {
            "rr": lambda ev: ev.rr,
            "r20": lambda ev: float(ev.r20),
            "r1000": lambda ev: float(ev.r1000),
        }
        if metric not in picker:
            raise EvaluationError(f"unknown metric {metric!r}")
        return [picker[metric](self.per_query[qid]) for qid in sorted(self.per_query)]

    def to_dict(self) -> dict:
        out = {
            "n": self.n,
            "mrr": self.mrr,
            "r20": self.r20,
            "r1000": self.r1000,
            "per_query": {
                qid: {"rank": ev.rank, "rr": ev.rr, "r20": ev.r20, "r1000": ev.r1000}
                for qid, ev in sorted(self.per_query.items())
            },
        }
        if self.ttest_vs_baseline is not None:
            out["ttest_vs_baseline"] = {
                metric: {
                    "t": res.t, "p": res.p, "n": res.n,
                    "degenerate": res.degenerate, "note": res.note,
                }
                for metric, res in sorted(self.ttest_vs_baseline.items())
            }
        return out


def _as_qrel_map(qrels) -> dict[str, str]:
    if isinstance(qrels, Mapping):
        return dict(qrels)
    return {pair.qid: pair.relevant_article_id for pair in qrels}


def evaluate(run: Mapping[str, RankedList], qrels) -> EvalReport:
    """Score one ranked list per qid against single-relevant qrels.

    Reciprocal rank is 0 when the relevant article is absent from the list.
    """
    qrel_map = _as_qrel_map(qrels)
    per_query: dict[str, QueryEval] = {}
    for qid, ranked in run.items():
        if qid not in qrel_map:
            raise EvaluationError(f"run qid {qid!r} has no qrel")
        ids = ranked.ids() if isinstance(ranked, RankedList) else [d for d, _ in ranked]
        if len(set(ids)) != len(ids):
            raise EvaluationError(f"run for qid {qid!r} contains duplicate docids")
        relevant = qrel_map[qid]
        rank = ids.index(relevant) + 1 if relevant in ids else None
        per_query[qid] = QueryEval(
            rank=rank,
            rr=1.0 / rank if rank else 0.0,
            r20=1 if rank and rank <= 20 else 0,
            r1000=1 if rank and rank <= 1000 else 0,
        )
    n = len(per_query)
    if n == 0:
        return EvalReport(per_query={}, mrr=0.0, r20=0.0, r1000=0.0, n=0)
    return EvalReport(
        per_query=per_query,
        mrr=sum(ev.rr for ev in per_query.values()) / n,
        r20=sum(ev.r20 for ev in per_query.values()) / n,
        r1000=sum(ev.r1000 for ev in per_query.values()) / n,
        n=n,
    )


# --- paired two-tailed t-test ------------------------------------------------

@dataclass(frozen=True)
class TTestResult:
    t: Optional[float]
    p: Optional[float]
    n: int
    degenerate: bool = False
    note: str = ""

    @property
    def significant(self) -> bool:
        return self.p is not None and self.p < SIGNIFICANCE_ALPHA


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    # Lentz's algorithm for the incomplete beta continued fraction.
    max_iterations = 300
    eps = 3e-16
    fpmin = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < fpmin:
        d = fpmin
    d = 1.0 / d
    h = d
    for m in range(1, max_iterations + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            break
    return h


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log(1.0 - x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, df: int) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


def paired_ttest(
    report_a: EvalReport,
    report_b: EvalReport,
    metric: str = "rr",
) -> TTestResult:
    """Classic paired t on per-query differences (a - b), two-sided.

    Both reports must cover the same qid set. Zero variance of differences
    leaves t and p undefined and is reported as degenerate.
    """
    if set(report_a.per_query) != set(report_b.per_query):
        raise EvaluationError("paired t-test requires identical qid sets")
    a = report_a.metric_values(metric)
    b = report_b.metric_values(metric)
    n = len(a)
    if n < 2:
        raise EvaluationError(f"paired t-test needs n >= 2, got {n}")
    diffs = [x - y for x, y in zip(a, b)]
    mean = sum(diffs) / n
    var = sum((d - mean) ** 2 for d in diffs) / (n - 1)
    if var == 0.0:
        return TTestResult(
            t=None, p=None, n=n, degenerate=True,
            note="zero variance of differences; t and p undefined",
        )
    t = mean / math.sqrt(var / n)
    return TTestResult(t=t, p=student_t_two_sided_p(t, n - 1), n=n)


def attach_ttests(report: EvalReport, baseline: EvalReport) -> EvalReport:
    """Fill ttest_vs_baseline with one paired test per metric."""
    report.ttest_vs_baseline = {
        metric: paired_ttest(report, baseline, metric=metric)
        for metric in ("rr", "r20", "r1000")
    }
    return report


# --- TREC-format files --------------------------------------------------------

def write_run(run: Mapping[str, RankedList], path: str | Path, tag: Optional[str] = None) -> None:
    """TREC run format: ``qid Q0 docid rank score tag``."""
    with open(path, "w", encoding="utf-8") as fh:
        for qid in sorted(run):
            ranked = run[qid]
            line_tag = tag or ranked.tag
            for rank, (doc_id, score) in enumerate(ranked.items, start=1):
                fh.write(f"{qid} Q0 {doc_id} {rank} {score:.6f} {line_tag}\n")


def read_run(path: str | Path) -> dict[str, RankedList]:
    per_qid: dict[str, list[tuple[str, float]]] = {}
    tags: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 6:
                raise EvaluationError(f"{path} line {line_no}: expected 6 fields, got {len(parts)}")
            qid, _, doc_id, _, score, tag = parts
            per_qid.setdefault(qid, []).append((doc_id, float(score)))
            tags[qid] = tag
    return {
        qid: RankedList(qid=qid, items=tuple(items), tag=tags[qid])
        for qid, items in per_qid.items()
    }


def write_qrels(qrels: Iterable[QrelPair], path: str | Path) -> None:
    """TREC qrels format: ``qid 0 docid grade``."""
    with open(path, "w", encoding="utf-8") as fh:
        for pair in sorted(qrels, key=lambda p: p.qid):
            fh.write(f"{pair.qid} 0 {pair.relevant_article_id} {pair.grade}\n")


def read_qrels(path: str | Path) -> dict[str, str]:
    qrels: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 4:
                raise EvaluationError(f"{path} line {line_no}: expected 4 fields, got {len(parts)}")
            qid, _, doc_id, grade = parts
            if int(grade) < 1:
                continue
            if qid in qrels:
                raise EvaluationError(f"{path} line {line_no}: duplicate qrel for qid {qid!r}")
            qrels[qid] = doc_id
    return qrels


# --- experiment driver --------------------------------------------------------

def run_experiment(
    pipeline: Pipeline,
    queries: Sequence[Query],
    qrels,
    mode: str = MODE_EC,
    system: str = "rrf",
    depth: int = 1000,
    run_path: Optional[str | Path] = None,
    report_path: Optional[str | Path] = None,
) -> tuple[dict[str, RankedList], EvalReport]:
    """Run every query through the pipeline for one (mode, system) cell.

    Emits a TREC run file and a json report when paths are given.
    """
    run: dict[str, RankedList] = {}
    for query in queries:
        result = pipeline.run(
            event_text=query.event_text,
            context_text=query.context_text,
            timestamp=query.timestamp,
            system=system,
            depth=depth,
            qid=query.qid,
            query_text=build_query_text(query, mode),
        )
        run[query.qid] = result.final
    report = evaluate(run, qrels)
    tag = f"{system}.{mode}"
    if run_path is not None:
        write_run(run, run_path, tag=tag)
    if report_path is not None:
        with open(report_path, "w", encoding="utf-8") as fh:
            json.dump({"system": system, "mode": mode, "depth": depth, **report.to_dict()},
                      fh, indent=2, sort_keys=True)
            fh.write("\n")
    return run, report
