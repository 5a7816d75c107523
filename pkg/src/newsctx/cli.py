"""Command-line entry points for the batch pipeline and the service.

Verbs map one-to-one onto module operations: ingest, filter, build-dataset,
split, index, stats, run, eval, analyze, bench, serve. Parameters may come
from flags or from a json config file (flags win).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import analysis, corpus as corpus_mod, dataset_builder, evaluation, synth
from .index_bm25 import Bm25Params, build_index, load_index, save_index
from .rankers import Pipeline, RrfConfig, load_embedding_store
from .service import SnapshotPaths, serve


class CliError(Exception):
    pass


def _load_corpus(path: str, lenient: bool = False, fallback_split: bool = False):
    try:
        return corpus_mod.ingest(path, strict=not lenient, fallback_split=fallback_split)
    except corpus_mod.CorpusError as exc:
        raise CliError(f"ingest failed: {exc}") from exc


def cmd_ingest(args) -> int:
    corpus = _load_corpus(args.input, lenient=args.lenient, fallback_split=args.fallback_split)
    for line_no, message in corpus.issues:
        print(f"skipped line {line_no}: {message}", file=sys.stderr)
    corpus_mod.write_corpus(corpus, args.output)
    stats = corpus.stats()
    print(f"ingested {stats.article_count} articles -> {args.output}")
    return 0


def cmd_filter(args) -> int:
    corpus = _load_corpus(args.input)
    allowed = (
        {s.strip() for s in args.sections.split(",") if s.strip()}
        if args.sections else corpus_mod.DEFAULT_SECTIONS
    )
    filtered = corpus_mod.filter_by_section(corpus, allowed)
    corpus_mod.write_corpus(filtered, args.output)
    print(f"kept {len(filtered)} of {len(corpus)} articles -> {args.output}")
    return 0


def cmd_build_dataset(args) -> int:
    corpus = _load_corpus(args.corpus)
    result = dataset_builder.build_dataset(corpus)
    dataset_builder.write_queries(result.queries, args.queries)
    evaluation.write_qrels(result.qrels, args.qrels)
    if args.skip_report:
        dataset_builder.write_skip_report(result.skips, args.skip_report)
    if args.stats:
        report = dataset_builder.dataset_stats(result.queries, corpus)
        with open(args.stats, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    skipped = sum(result.skips.values())
    print(f"built {len(result.queries)} queries ({skipped} links skipped) -> {args.queries}")
    return 0


def cmd_split(args) -> int:
    queries = dataset_builder.read_queries(args.queries)
    fractions = tuple(float(x) for x in args.fractions.split(","))
    if len(fractions) != 3:
        raise CliError(f"--fractions needs three values, got {args.fractions!r}")
    try:
        splits = dataset_builder.chronological_split(queries, fractions)  # type: ignore[arg-type]
    except dataset_builder.DatasetError as exc:
        raise CliError(str(exc)) from exc
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    by_qid = {q.qid: q for q in queries}
    sizes = []
    for split in splits:
        dataset_builder.write_queries((by_qid[qid] for qid in split.qids), outdir / f"{split.name}.jsonl")
        sizes.append(f"{split.name}={len(split.qids)}")
    print(f"split {len(queries)} queries: {' '.join(sizes)} -> {outdir}")
    return 0


def cmd_index(args) -> int:
    corpus = _load_corpus(args.corpus)
    try:
        params = Bm25Params(k1=args.k1, b=args.b)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    index = build_index(corpus, params)
    save_index(index, args.output)
    print(f"indexed {index.N} articles, vocabulary {index.vocabulary_size} -> {args.output}")
    return 0


def cmd_stats(args) -> int:
    index = load_index(args.index)
    print(f"articles: {index.N}")
    print(f"vocabulary: {index.vocabulary_size}")
    print(f"avgdl: {index.avgdl:.4f}")
    print(f"bm25: k1={index.params.k1} b={index.params.b}")
    return 0


def _make_pipeline(args, corpus) -> Pipeline:
    index = load_index(args.index)
    store = None
    if args.embeddings:
        store = load_embedding_store(args.embeddings, args.word_vectors)
    return Pipeline(
        index, corpus, store=store, scorer_endpoint=args.scorer,
        rrf=RrfConfig(k=args.rrf_k), candidates=args.candidates,
    )


def cmd_run(args) -> int:
    corpus = _load_corpus(args.corpus)
    queries = dataset_builder.read_queries(args.queries)
    qrels = evaluation.read_qrels(args.qrels) if args.qrels else {
        q.qid: q.relevant_article_id for q in queries
    }
    pipeline = _make_pipeline(args, corpus)
    _, report = evaluation.run_experiment(
        pipeline, queries, qrels,
        mode=args.mode, system=args.system, depth=args.depth,
        run_path=args.output, report_path=args.report,
    )
    print(
        f"{args.system}/{args.mode} n={report.n} "
        f"MRR={report.mrr:.4f} R@20={report.r20:.4f} R@1000={report.r1000:.4f} -> {args.output}"
    )
    return 0


def cmd_eval(args) -> int:
    run = evaluation.read_run(args.run)
    qrels = evaluation.read_qrels(args.qrels)
    try:
        report = evaluation.evaluate(run, qrels)
    except evaluation.EvaluationError as exc:
        raise CliError(str(exc)) from exc
    print(f"n={report.n} MRR={report.mrr:.4f} R@20={report.r20:.4f} R@1000={report.r1000:.4f}")
    if args.baseline:
        baseline = evaluation.evaluate(evaluation.read_run(args.baseline), qrels)
        evaluation.attach_ttests(report, baseline)
        ttest = report.ttest_vs_baseline[args.metric]
        if ttest.degenerate:
            print(f"paired t-test ({args.metric}): {ttest.note}")
        else:
            marker = " (significant, p < 0.01)" if ttest.significant else ""
            print(f"paired t-test ({args.metric}): t={ttest.t:.4f} p={ttest.p:.6f}{marker}")
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def cmd_analyze(args) -> int:
    corpus = _load_corpus(args.corpus)
    queries = dataset_builder.read_queries(args.queries)
    qrels = evaluation.read_qrels(args.qrels)
    reports = {}
    for spec in args.run or []:
        if "=" not in spec:
            raise CliError(f"--run expects NAME=PATH, got {spec!r}")
        name, path = spec.split("=", 1)
        reports[name] = evaluation.evaluate(evaluation.read_run(path), qrels)
    if not reports:
        raise CliError("analyze needs at least one --run NAME=PATH")

    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    binned = {
        "jaccard_query": analysis.vocabulary_gap_report(queries, corpus, reports, variant="full-query"),
        "jaccard_context": analysis.vocabulary_gap_report(queries, corpus, reports, variant="context-only"),
        "day_difference": analysis.temporal_report(queries, corpus, reports),
        "entity_idf": analysis.entity_idf_report(queries, corpus, reports),
    }
    for name, report in binned.items():
        analysis.write_report(report, outdir / f"{name}.tsv", outdir / f"{name}.json")
        if args.figures:
            analysis.render_report_figure(report, outdir / f"{name}.png")
        note = " (heuristic entities)" if report.heuristic_entities else ""
        print(f"{name}: {report.total_binned} binned, excluded {report.excluded}{note}")
    return 0


def cmd_bench(args) -> int:
    config = synth.BenchmarkConfig(n_queries=args.n_queries, seed=args.seed)
    benchmark = synth.generate_benchmark(config)
    paths = benchmark.write(args.output_dir)
    print(
        f"benchmark: {len(benchmark.corpus)} articles, {len(benchmark.planted)} planted queries "
        f"-> {paths['corpus'].parent}"
    )
    return 0


def cmd_serve(args) -> int:
    # NEWSCTX_HOST / NEWSCTX_PORT env vars sit between flags and defaults
    host = args.host or os.environ.get("NEWSCTX_HOST") or "127.0.0.1"
    port = args.port if args.port is not None else int(os.environ.get("NEWSCTX_PORT", "8321"))
    serve(
        SnapshotPaths(
            corpus_path=args.corpus,
            index_path=args.index,
            embeddings_path=args.embeddings,
            word_vectors_path=args.word_vectors,
        ),
        host=host,
        port=port,
        candidates=args.candidates,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="newsctx", description=__doc__)
    parser.add_argument("--config", help="json file of defaults for any flag")
    sub = parser.add_subparsers(dest="verb")

    p = sub.add_parser("ingest", help="validate and normalize a corpus file")
    p.add_argument("--input")
    p.add_argument("--output")
    p.add_argument("--lenient", action="store_true", help="skip bad records instead of failing")
    p.add_argument("--fallback-split", action="store_true",
                   help="apply the approximate sentence splitter to flat-text paragraphs")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("filter", help="keep articles in the allowed sections")
    p.add_argument("--input")
    p.add_argument("--output")
    p.add_argument("--sections", help="comma-separated allow-list (default: built-in domain list)")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("build-dataset", help="derive queries and qrels from hyperlinks")
    p.add_argument("--corpus")
    p.add_argument("--queries")
    p.add_argument("--qrels")
    p.add_argument("--skip-report")
    p.add_argument("--stats")
    p.set_defaults(func=cmd_build_dataset)

    p = sub.add_parser("split", help="chronological train/dev/test split")
    p.add_argument("--queries")
    p.add_argument("--output-dir")
    p.add_argument("--fractions")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("index", help="build and persist the inverted index")
    p.add_argument("--corpus")
    p.add_argument("--output")
    p.add_argument("--k1", type=float)
    p.add_argument("--b", type=float)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("stats", help="dump index statistics")
    p.add_argument("--index")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("run", help="run a (system, mode) experiment to a TREC run file")
    p.add_argument("--corpus")
    p.add_argument("--index")
    p.add_argument("--queries")
    p.add_argument("--qrels")
    p.add_argument("--output")
    p.add_argument("--report")
    p.add_argument("--mode", choices=list(evaluation.MODES))
    p.add_argument("--system")
    p.add_argument("--depth", type=int)
    p.add_argument("--candidates", type=int)
    p.add_argument("--rrf-k", type=float)
    p.add_argument("--embeddings")
    p.add_argument("--word-vectors")
    p.add_argument("--scorer", help="external scorer endpoint (http(s):// or exec:)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="score a run file against qrels")
    p.add_argument("--run")
    p.add_argument("--qrels")
    p.add_argument("--baseline", help="second run file for a paired t-test")
    p.add_argument("--metric", choices=["rr", "r20", "r1000"])
    p.add_argument("--output", help="write the full report as json")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("analyze", help="binned breakdowns of per-system results")
    p.add_argument("--corpus")
    p.add_argument("--queries")
    p.add_argument("--qrels")
    p.add_argument("--run", action="append", metavar="NAME=PATH")
    p.add_argument("--output-dir")
    p.add_argument("--figures", action="store_true", help="also render png figures")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("bench", help="generate the synthetic planted-signal benchmark")
    p.add_argument("--output-dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--n-queries", type=int)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("serve", help="run the HTTP search service")
    p.add_argument("--corpus")
    p.add_argument("--index")
    p.add_argument("--embeddings")
    p.add_argument("--word-vectors")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--candidates", type=int)
    p.set_defaults(func=cmd_serve)

    return parser


# fallback defaults applied after the config merge
VALUE_DEFAULTS = {
    "split": {"fractions": "0.9,0.05,0.05"},
    "index": {"k1": 0.9, "b": 0.4},
    "run": {"mode": "EC", "system": "bm25", "depth": 1000, "candidates": 1000, "rrf_k": 60.0},
    "eval": {"metric": "rr"},
    "bench": {"seed": 13, "n_queries": 60},
    "serve": {"candidates": 1000},
}

# per-verb parameters that must come from a flag or the config file
REQUIRED_ARGS = {
    "ingest": ("input", "output"),
    "filter": ("input", "output"),
    "build-dataset": ("corpus", "queries", "qrels"),
    "split": ("queries", "output_dir"),
    "index": ("corpus", "output"),
    "stats": ("index",),
    "run": ("corpus", "index", "queries", "output"),
    "eval": ("run", "qrels"),
    "analyze": ("corpus", "queries", "qrels", "output_dir"),
    "bench": ("output_dir",),
    "serve": ("corpus",),
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                defaults = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot read config {args.config}: {exc}", file=sys.stderr)
            return 2
        # config supplies values only where no flag was given
        for key, value in defaults.items():
            dest = key.replace("-", "_")
            if getattr(args, dest, None) in (None, False):
                setattr(args, dest, value)
    for dest, value in VALUE_DEFAULTS.get(args.verb, {}).items():
        if getattr(args, dest, None) is None:
            setattr(args, dest, value)
    missing = [
        dest for dest in REQUIRED_ARGS.get(args.verb, ())
        if getattr(args, dest, None) is None
    ]
    if missing:
        flags = ", ".join("--" + d.replace("_", "-") for d in missing)
        print(f"error: {args.verb} needs {flags} (flag or config)", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
