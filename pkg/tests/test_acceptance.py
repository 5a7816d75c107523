"""Acceptance criteria, one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines; tolerances are pinned in the asserts.
"""

import filecmp
import math
import random
import time

import pytest
from scipy import stats as scipy_stats

from newsctx.cli import main
from newsctx.corpus import Corpus, OutLink, filter_by_section
from newsctx.dataset_builder import build_dataset, chronological_split, Query
from newsctx.evaluation import evaluate, paired_ttest, run_experiment
from newsctx.fixtures import load_table1_corpus
from newsctx.index_bm25 import RankedList, build_index, search, tokenize
from newsctx.rankers import EmbeddingStore, Pipeline, RrfConfig, rrf_fuse
from newsctx.synth import generate_benchmark

from conftest import make_article
from test_evaluation import report_from_values
from test_index_bm25 import corpus_of_texts, naive_bm25


def _passed(name: str) -> None:
    print(f"PASS {name}")


def test_c1_golden_fixture_table1():
    started = time.perf_counter()
    corpus = load_table1_corpus()
    result = build_dataset(corpus)

    source = corpus.lookup("wapo-malta-rescue-ship")
    relevant = corpus.lookup("wapo-italy-rejects-rescue-ship")
    assert len(result.queries) == 1
    q = result.queries[0]
    assert q.event_text == source.headline + " " + " ".join(source.paragraphs[0])
    assert q.context_text == source.paragraphs[1][0]
    assert q.context_text.startswith("In earlier years of Europe")
    assert q.relevant_article_id == relevant.id
    assert relevant.headline.startswith("Italy")
    assert len(result.qrels) == 1
    assert result.qrels[0].relevant_article_id == relevant.id
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0, f"golden fixture took {elapsed:.3f}s"
    _passed("criterion 1: golden fixture (Table 1 article) builds the one expected query")


def _random_linked_corpus(rng: random.Random) -> Corpus:
    n = rng.randint(3, 10)
    base = 1_600_000_000
    articles = []
    for idx in range(n):
        n_paras = rng.randint(1, 4)
        paragraphs = tuple(
            tuple(f"s {idx} {p} {s}." for s in range(rng.randint(1, 3)))
            for p in range(n_paras)
        )
        links = []
        for _ in range(rng.randint(0, 4)):
            p_i = rng.randint(1, n_paras)
            s_j = rng.randint(1, len(paragraphs[p_i - 1]))
            if rng.random() < 0.15:
                url = "https://elsewhere.org/missing"
            else:
                url = f"https://example.com/d{rng.randrange(n)}"
            links.append(OutLink(p_i, s_j, url, "a"))
        articles.append(make_article(
            id=f"d{idx}",
            url=f"https://example.com/d{idx}",
            paragraphs=paragraphs,
            published_at=base + rng.randrange(0, 1_000_000),
            out_links=links,
        ))
    return Corpus(articles)


def test_c2_constraint_suite_500_corpora():
    violations = 0
    for seed in range(500):
        rng = random.Random(91_000 + seed)
        corpus = _random_linked_corpus(rng)
        result = build_dataset(corpus)
        total_links = sum(len(a.out_links) for a in corpus)
        if len(result.queries) + sum(result.skips.values()) != total_links:
            violations += 1
        for q in result.queries:
            if q.link_paragraph_index <= 1 or q.link_sentence_index <= 1:
                violations += 1
            if corpus[q.relevant_article_id].published_at >= q.timestamp:
                violations += 1
    assert violations == 0
    _passed("criterion 2: 500 randomized corpora, i>1 / j>1 / precedence / conservation hold")


def test_c3_bm25_oracle_equivalence_100_corpora():
    vocab = [f"w{k}" for k in range(12)]
    for seed in range(100):
        rng = random.Random(37_000 + seed)
        texts = {
            f"d{i}": " ".join(rng.choices(vocab, k=rng.randint(1, 20)))
            for i in range(rng.randint(2, 50))
        }
        times = {d: rng.randrange(0, 100_000) for d in texts}
        corpus = corpus_of_texts(texts, times)
        index = build_index(corpus)
        docs = {d: tokenize(t) for d, t in texts.items()}
        query = " ".join(rng.choices(vocab, k=rng.randint(1, 6)))
        q_tokens = tokenize(query)

        from newsctx.index_bm25 import bm25_score

        for doc_id in texts:
            indexed = bm25_score(index, q_tokens, doc_id)
            naive = naive_bm25(docs, q_tokens, doc_id)
            assert abs(indexed - naive) <= 1e-9, (seed, doc_id, indexed, naive)

        cutoff = rng.randrange(10_000, 120_000)
        got = search(index, query, cutoff_time=cutoff).ids()
        expected = [
            (d, naive_bm25(docs, q_tokens, d)) for d in texts
            if times[d] < cutoff and naive_bm25(docs, q_tokens, d) > 0
        ]
        expected.sort(key=lambda it: (-it[1], -times[it[0]], it[0]))
        assert got == [d for d, _ in expected], seed
    _passed("criterion 3: BM25 matches the direct-formula oracle (1e-9) and ordering exactly")


def test_c4_temporal_safety_10000_searches():
    rng = random.Random(55_001)
    vocab = [f"w{k}" for k in range(15)]
    checked = 0
    for _ in range(10):
        texts = {
            f"d{i}": " ".join(rng.choices(vocab, k=rng.randint(2, 10)))
            for i in range(rng.randint(5, 60))
        }
        times = {d: rng.randrange(0, 1_000_000) for d in texts}
        index = build_index(corpus_of_texts(texts, times))
        for _ in range(1000):
            cutoff = rng.randrange(0, 1_200_000)
            query = " ".join(rng.choices(vocab, k=rng.randint(1, 4)))
            for doc_id in search(index, query, cutoff_time=cutoff).ids():
                assert times[doc_id] < cutoff
            checked += 1
    assert checked == 10_000
    _passed("criterion 4: 10,000 randomized searches returned no article at/after the cutoff")


def test_c5_rrf_exactness_and_properties():
    def lst(tag, *ids):
        return RankedList(qid="q", tag=tag, items=tuple((d, float(99 - i)) for i, d in enumerate(ids)))

    corpus = Corpus([
        make_article(id=f"d{i}", url=f"https://example.com/d{i}", published_at=i)
        for i in range(8)
    ])
    # article ranked 1 in all of 3 lists -> 3/61, exact
    fused = rrf_fuse([lst("a", "d0", "d1"), lst("b", "d0", "d2"), lst("c", "d0", "d3")], corpus)
    assert dict(fused.items)["d0"] == 3 / 61
    # ranks 2 and 5 in two lists -> 1/62 + 1/65, exact
    fused = rrf_fuse(
        [lst("a", "d1", "d0"), lst("b", "d1", "d2", "d3", "d4", "d0")], corpus,
    )
    assert dict(fused.items)["d0"] == 1 / 62 + 1 / 65

    rng = random.Random(77_400)
    for _ in range(1000):
        n_docs = rng.randint(2, 10)
        ids = [f"d{i}" for i in range(n_docs)]
        times = {d: rng.randrange(0, 10_000) for d in ids}
        small = Corpus([
            make_article(id=d, url=f"https://example.com/{d}", published_at=times[d])
            for d in ids
        ])
        lists = []
        for li in range(rng.randint(1, 4)):
            members = rng.sample(ids, rng.randint(1, n_docs))
            scores = sorted((rng.uniform(0, 9) for _ in members), reverse=True)
            lists.append(RankedList(
                qid="q", tag=f"t{li}", items=tuple(zip(members, scores)),
            ))
        fused = rrf_fuse(lists, small, RrfConfig(k=60))
        relabeled = [
            RankedList(qid="q", tag=l.tag, items=tuple(
                (d, float(500 - 3 * i)) for i, (d, _) in enumerate(l.items)
            ))
            for l in lists
        ]
        assert rrf_fuse(relabeled, small).items == fused.items  # rank-only dependence
        shuffled = lists[:]
        rng.shuffle(shuffled)
        assert rrf_fuse(shuffled, small).items == fused.items  # permutation symmetry
    _passed("criterion 5: RRF equals hand-computed fixtures exactly; 1,000 property sets hold")


def test_c6_metric_oracle_and_ttest_reference():
    rng = random.Random(41_500)
    for _ in range(1000):
        n_docs = rng.randint(1, 60)
        ids = [f"d{i}" for i in range(n_docs)]
        rng.shuffle(ids)
        relevant = rng.choice(ids + ["absent"])
        run = {"q": RankedList(qid="q", tag="t", items=tuple(
            (d, float(n_docs - i)) for i, d in enumerate(ids)
        ))}
        report = evaluate(run, {"q": relevant})
        # brute-force linear scan
        rr, r20, r1000 = 0.0, 0, 0
        for pos, d in enumerate(ids, start=1):
            if d == relevant:
                rr = 1.0 / pos
                r20 = 1 if pos <= 20 else 0
                r1000 = 1 if pos <= 1000 else 0
                break
        ev = report.per_query["q"]
        assert (ev.rr, ev.r20, ev.r1000) == (rr, r20, r1000)
        assert report.mrr == rr

    for seed in range(20):
        srng = random.Random(8_600 + seed)
        n = srng.randint(4, 50)
        xs = [srng.random() for _ in range(n)]
        ys = [min(1.0, max(0.0, x + srng.gauss(0.03, 0.1))) for x in xs]
        ours = paired_ttest(
            report_from_values({f"q{i:03d}": x for i, x in enumerate(xs)}),
            report_from_values({f"q{i:03d}": y for i, y in enumerate(ys)}),
        )
        ref_t, ref_p = scipy_stats.ttest_rel(xs, ys)
        assert abs(ours.t - float(ref_t)) <= 1e-6
        assert abs(ours.p - float(ref_p)) <= 1e-6
    _passed("criterion 6: metrics equal the scan oracle on 1,000 runs; t-test matches the reference (1e-6)")


def test_c7_split_law_3_to_500():
    rng = random.Random(66_123)
    violations = 0
    for n in range(3, 501):
        queries = [
            Query(
                qid=f"q{i:04d}", event_text="e", context_text="c",
                timestamp=rng.randrange(0, 10_000_000), source_article_id="s",
                link_paragraph_index=2, link_sentence_index=2,
                link_sentence_text="ls", relevant_article_id="r",
            )
            for i in range(n)
        ]
        train, dev, test = chronological_split(queries)
        expected = (
            int(0.90 * n),
            int(0.95 * n) - int(0.90 * n),
            n - int(0.95 * n),
        )
        if (len(train.qids), len(dev.qids), len(test.qids)) != expected:
            violations += 1
        by_qid = {q.qid: q.timestamp for q in queries}
        if train.qids and dev.qids and max(by_qid[q] for q in train.qids) > min(by_qid[q] for q in dev.qids):
            violations += 1
        if dev.qids and test.qids and max(by_qid[q] for q in dev.qids) > min(by_qid[q] for q in test.qids):
            violations += 1
        if set(train.qids) | set(dev.qids) | set(test.qids) != set(by_qid):
            violations += 1
    assert violations == 0
    _passed("criterion 7: floor-rule split sizes and temporal ordering hold for n in 3..500")


def test_c8_directional_fusion_check():
    started = time.perf_counter()
    benchmark = generate_benchmark()  # fixed seed in the default config
    filtered = filter_by_section(benchmark.corpus)
    dataset = build_dataset(filtered)
    qrels = {p.qid: p.relevant_article_id for p in dataset.qrels}
    index = build_index(filtered)
    store = EmbeddingStore(
        vectors=benchmark.article_vectors,
        dim=3 * benchmark.config.n_queries,
        word_vectors=benchmark.word_vectors,
    )
    pipeline = Pipeline(index, filtered, store=store)

    mrr = {}
    for system in ("bm25", "recency", "semantic", "rrf"):
        _, report = run_experiment(pipeline, dataset.queries, qrels, mode="EC", system=system)
        mrr[system] = report.mrr
    assert mrr["rrf"] > mrr["bm25"], mrr
    assert mrr["rrf"] > mrr["recency"], mrr
    assert mrr["rrf"] > mrr["semantic"], mrr

    recall = {}
    for mode in ("E", "C", "EC"):
        _, report = run_experiment(pipeline, dataset.queries, qrels, mode=mode, system="bm25")
        recall[mode] = report.r1000
    assert recall["EC"] >= recall["E"]
    assert recall["EC"] >= recall["C"]

    elapsed = time.perf_counter() - started
    assert elapsed < 60.0, f"directional check took {elapsed:.1f}s"
    _passed(
        "criterion 8: RRF MRR beats every single ranker "
        f"(rrf={mrr['rrf']:.3f} vs bm25={mrr['bm25']:.3f}, recency={mrr['recency']:.3f}, "
        f"semantic={mrr['semantic']:.3f}); e&c R@1000 {recall['EC']:.3f} >= "
        f"e {recall['E']:.3f}, c {recall['C']:.3f}"
    )


def test_c9_end_to_end_determinism(tmp_path):
    inputs = tmp_path / "inputs"
    assert main(["bench", "--output-dir", str(inputs), "--n-queries", "15"]) == 0

    def one_pass(outdir):
        outdir.mkdir()
        assert main(["ingest", "--input", str(inputs / "corpus.jsonl"),
                     "--output", str(outdir / "corpus.jsonl")]) == 0
        assert main(["filter", "--input", str(outdir / "corpus.jsonl"),
                     "--output", str(outdir / "filtered.jsonl")]) == 0
        assert main(["build-dataset", "--corpus", str(outdir / "filtered.jsonl"),
                     "--queries", str(outdir / "queries.jsonl"),
                     "--qrels", str(outdir / "qrels.txt"),
                     "--skip-report", str(outdir / "skips.tsv")]) == 0
        assert main(["index", "--corpus", str(outdir / "filtered.jsonl"),
                     "--output", str(outdir / "index.bin")]) == 0
        for system in ("bm25", "rrf"):
            args = ["run", "--corpus", str(outdir / "filtered.jsonl"),
                    "--index", str(outdir / "index.bin"),
                    "--queries", str(outdir / "queries.jsonl"),
                    "--qrels", str(outdir / "qrels.txt"),
                    "--output", str(outdir / f"run_{system}.txt"),
                    "--report", str(outdir / f"report_{system}.json"),
                    "--system", system]
            if system == "rrf":
                args += ["--embeddings", str(inputs / "embeddings.txt"),
                         "--word-vectors", str(inputs / "word_vectors.txt")]
            assert main(args) == 0
        assert main(["eval", "--run", str(outdir / "run_rrf.txt"),
                     "--qrels", str(outdir / "qrels.txt"),
                     "--output", str(outdir / "eval_rrf.json")]) == 0

    one_pass(tmp_path / "first")
    one_pass(tmp_path / "second")
    compared = [
        "corpus.jsonl", "filtered.jsonl", "queries.jsonl", "qrels.txt", "skips.tsv",
        "index.bin", "run_bm25.txt", "run_rrf.txt",
        "report_bm25.json", "report_rrf.json", "eval_rrf.json",
    ]
    for name in compared:
        a, b = tmp_path / "first" / name, tmp_path / "second" / name
        assert filecmp.cmp(a, b, shallow=False), f"{name} differs between runs"
    _passed("criterion 9: two identical pipeline passes produced byte-identical artifacts")
