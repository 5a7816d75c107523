import json

import pytest

from newsctx.cli import main
from newsctx.corpus import export, ingest
from newsctx.fixtures import table1_corpus_path


@pytest.fixture
def fixture_corpus_file(tmp_path):
    path = tmp_path / "corpus.jsonl"
    path.write_text(table1_corpus_path().read_text(encoding="utf-8"), encoding="utf-8")
    return path


def test_build_dataset_on_table1_fixture(tmp_path, fixture_corpus_file, capsys):
    queries = tmp_path / "queries.jsonl"
    qrels = tmp_path / "qrels.txt"
    code = main([
        "build-dataset", "--corpus", str(fixture_corpus_file),
        "--queries", str(queries), "--qrels", str(qrels),
        "--skip-report", str(tmp_path / "skips.tsv"),
    ])
    assert code == 0
    records = [json.loads(l) for l in queries.read_text(encoding="utf-8").splitlines()]
    assert len(records) == 1
    assert records[0]["relevant_article_id"] == "wapo-italy-rejects-rescue-ship"
    assert qrels.read_text() == "wapo-malta-rescue-ship.2.2.1 0 wapo-italy-rejects-rescue-ship 1\n"


def test_eval_prints_mrr_one_for_perfect_run(tmp_path, capsys):
    (tmp_path / "qrels.txt").write_text("q1 0 d9 1\nq2 0 d3 1\n")
    (tmp_path / "run.txt").write_text(
        "q1 Q0 d9 1 5.000000 t\nq1 Q0 d2 2 4.000000 t\n"
        "q2 Q0 d3 1 5.000000 t\n"
    )
    code = main(["eval", "--run", str(tmp_path / "run.txt"), "--qrels", str(tmp_path / "qrels.txt")])
    assert code == 0
    out = capsys.readouterr().out
    assert "MRR=1.0000" in out


def test_split_produces_90_5_5(tmp_path):
    import random

    from newsctx.dataset_builder import Query, write_queries

    rng = random.Random(5)
    queries = [
        Query(
            qid=f"q{i:03d}", event_text="e", context_text="c",
            timestamp=1_000_000 + rng.randrange(0, 500_000),
            source_article_id="s", link_paragraph_index=2, link_sentence_index=2,
            link_sentence_text="ls", relevant_article_id="r",
        )
        for i in range(100)
    ]
    qfile = tmp_path / "queries.jsonl"
    write_queries(queries, qfile)
    code = main([
        "split", "--queries", str(qfile), "--output-dir", str(tmp_path / "splits"),
        "--fractions", "0.9,0.05,0.05",
    ])
    assert code == 0
    sizes = {
        name: len((tmp_path / "splits" / f"{name}.jsonl").read_text().splitlines())
        for name in ("train", "dev", "test")
    }
    assert sizes == {"train": 90, "dev": 5, "test": 5}


def test_missing_required_flag_reports_error(tmp_path, capsys):
    code = main(["stats"])
    assert code == 2
    assert "needs --index" in capsys.readouterr().err


def test_missing_file_reports_error(tmp_path, capsys):
    code = main(["stats", "--index", str(tmp_path / "none.bin")])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_config_file_supplies_parameters(tmp_path, fixture_corpus_file, capsys):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({
        "corpus": str(fixture_corpus_file),
        "output": str(tmp_path / "index.bin"),
    }))
    code = main(["--config", str(config), "index"])
    assert code == 0
    assert (tmp_path / "index.bin").exists()
    assert main(["stats", "--index", str(tmp_path / "index.bin")]) == 0
    assert "articles: 2" in capsys.readouterr().out


def test_flag_overrides_config(tmp_path, fixture_corpus_file):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({
        "corpus": str(fixture_corpus_file),
        "output": str(tmp_path / "from_config.bin"),
    }))
    code = main([
        "--config", str(config), "index", "--output", str(tmp_path / "from_flag.bin"),
    ])
    assert code == 0
    assert (tmp_path / "from_flag.bin").exists()
    assert not (tmp_path / "from_config.bin").exists()


def test_ingest_normalizes_and_filter_drops(tmp_path, capsys):
    raw = tmp_path / "raw.jsonl"
    records = [
        {
            "id": "a1", "url": "https://example.com/a1", "headline": "h",
            "published_at": "2019-05-10", "section": "News",
            "paragraphs": [["s1"]], "out_links": [],
        },
        {
            "id": "a2", "url": "https://example.com/a2", "headline": "h",
            "published_at": "2019-05-11", "section": "opinion",
            "paragraphs": [["s1"]], "out_links": [],
        },
    ]
    raw.write_text("\n".join(json.dumps(r) for r in records))
    assert main(["ingest", "--input", str(raw), "--output", str(tmp_path / "corpus.jsonl")]) == 0
    normalized = (tmp_path / "corpus.jsonl").read_text()
    assert "2019-05-10T00:00:00Z" in normalized  # day input normalized
    assert main([
        "filter", "--input", str(tmp_path / "corpus.jsonl"),
        "--output", str(tmp_path / "filtered.jsonl"),
    ]) == 0
    kept = (tmp_path / "filtered.jsonl").read_text().splitlines()
    assert len(kept) == 1
    assert json.loads(kept[0])["id"] == "a1"


def test_end_to_end_run_and_analyze(tmp_path, capsys):
    assert main(["bench", "--output-dir", str(tmp_path / "raw"), "--n-queries", "12"]) == 0
    base = tmp_path / "raw"
    assert main(["filter", "--input", str(base / "corpus.jsonl"),
                 "--output", str(tmp_path / "filtered.jsonl")]) == 0
    assert main(["build-dataset", "--corpus", str(tmp_path / "filtered.jsonl"),
                 "--queries", str(tmp_path / "queries.jsonl"),
                 "--qrels", str(tmp_path / "qrels.txt")]) == 0
    assert main(["index", "--corpus", str(tmp_path / "filtered.jsonl"),
                 "--output", str(tmp_path / "index.bin")]) == 0
    assert main(["run", "--corpus", str(tmp_path / "filtered.jsonl"),
                 "--index", str(tmp_path / "index.bin"),
                 "--queries", str(tmp_path / "queries.jsonl"),
                 "--qrels", str(tmp_path / "qrels.txt"),
                 "--output", str(tmp_path / "run_bm25.txt"), "--system", "bm25"]) == 0
    assert main(["run", "--corpus", str(tmp_path / "filtered.jsonl"),
                 "--index", str(tmp_path / "index.bin"),
                 "--queries", str(tmp_path / "queries.jsonl"),
                 "--qrels", str(tmp_path / "qrels.txt"),
                 "--output", str(tmp_path / "run_rrf.txt"), "--system", "rrf",
                 "--embeddings", str(base / "embeddings.txt"),
                 "--word-vectors", str(base / "word_vectors.txt")]) == 0
    assert main(["eval", "--run", str(tmp_path / "run_rrf.txt"),
                 "--qrels", str(tmp_path / "qrels.txt"),
                 "--baseline", str(tmp_path / "run_bm25.txt")]) == 0
    out = capsys.readouterr().out
    assert "paired t-test" in out
    assert main(["analyze", "--corpus", str(tmp_path / "filtered.jsonl"),
                 "--queries", str(tmp_path / "queries.jsonl"),
                 "--qrels", str(tmp_path / "qrels.txt"),
                 "--run", f"bm25={tmp_path / 'run_bm25.txt'}",
                 "--run", f"rrf={tmp_path / 'run_rrf.txt'}",
                 "--output-dir", str(tmp_path / "analysis")]) == 0
    assert (tmp_path / "analysis" / "day_difference.tsv").exists()
    assert (tmp_path / "analysis" / "jaccard_query.json").exists()
