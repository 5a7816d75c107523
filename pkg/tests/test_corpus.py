import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from newsctx.corpus import (
    DEFAULT_SECTIONS,
    Corpus,
    RecordError,
    canonicalize_url,
    export,
    filter_by_section,
    format_timestamp,
    ingest,
    parse_timestamp,
    split_sentences_naive,
)

from conftest import article_record, make_article, random_corpus, record_lines


class TestIngest:
    def test_three_valid_records(self):
        lines = record_lines(
            article_record(id="a1", url="https://example.com/a1"),
            article_record(id="a2", url="https://example.com/a2"),
            article_record(id="a3", url="https://example.com/a3"),
        )
        corpus = ingest(lines)
        assert len(corpus) == 3
        assert corpus.stats().article_count == 3

    def test_missing_headline_names_line_and_field(self):
        record = article_record(id="a2", url="https://example.com/a2")
        del record["headline"]
        lines = record_lines(article_record(), record)
        with pytest.raises(RecordError, match="line 2.*headline"):
            ingest(lines)

    def test_duplicate_id_strict_is_fatal(self):
        lines = record_lines(
            article_record(id="dup", url="https://example.com/a1"),
            article_record(id="dup", url="https://example.com/a2"),
        )
        with pytest.raises(RecordError, match="duplicate id"):
            ingest(lines)

    def test_duplicate_url_strict_is_fatal(self):
        lines = record_lines(
            article_record(id="a1", url="https://example.com/same"),
            article_record(id="a2", url="https://example.com/same/"),
        )
        with pytest.raises(RecordError, match="duplicate url"):
            ingest(lines)

    def test_lenient_mode_skips_and_reports(self):
        bad = article_record(id="a2", url="https://example.com/a2")
        del bad["published_at"]
        lines = record_lines(article_record(), bad)
        corpus = ingest(lines, strict=False)
        assert len(corpus) == 1
        assert corpus.issues[0][0] == 2

    def test_bad_timestamp_is_a_record_error(self):
        lines = record_lines(article_record(published_at="not-a-date"))
        with pytest.raises(RecordError, match="bad timestamp"):
            ingest(lines)

    def test_out_link_coordinates_validated(self):
        record = article_record(out_links=[{
            "paragraph_index": 9, "sentence_index": 1,
            "target_url": "https://example.com/x", "anchor_text": "x",
        }])
        with pytest.raises(RecordError, match="out of range"):
            ingest(record_lines(record))

    def test_flat_paragraph_needs_fallback_flag(self):
        record = article_record(paragraphs=["One sentence. Then another one."])
        with pytest.raises(RecordError, match="pre-split"):
            ingest(record_lines(record))
        corpus = ingest(record_lines(record), fallback_split=True)
        assert corpus.articles[0].paragraphs[0] == ("One sentence.", "Then another one.")


class TestTimestamps:
    def test_day_granularity_normalizes_to_midnight_utc(self):
        assert parse_timestamp("2019-05-10") == parse_timestamp("2019-05-10T00:00:00Z")

    def test_round_trip(self):
        epoch = parse_timestamp("2019-05-10T08:30:01Z")
        assert format_timestamp(epoch) == "2019-05-10T08:30:01Z"

    def test_offset_is_converted(self):
        assert parse_timestamp("2019-05-10T10:00:00+02:00") == parse_timestamp("2019-05-10T08:00:00Z")


class TestCanonicalization:
    # one case per rule, plus combinations
    CASES = [
        ("HTTPS://Example.com/a", "https://example.com/a"),  # scheme+host case
        ("https://example.com/a#frag", "https://example.com/a"),  # fragment
        ("https://example.com/a/", "https://example.com/a"),  # trailing slash
        ("https://example.com/a?utm_source=tw", "https://example.com/a"),  # utm_*
        ("https://example.com/a?fbclid=123", "https://example.com/a"),  # fixed list
        ("https://example.com/a?id=7&utm_campaign=x", "https://example.com/a?id=7"),  # keep real params
        ("HTTPS://Example.COM/B/?utm_medium=e&gclid=1#top", "https://example.com/B"),  # all rules
        ("https://example.com/a?gclid=1&q=news", "https://example.com/a?q=news"),
    ]

    @pytest.mark.parametrize("raw,expected", CASES)
    def test_rules(self, raw, expected):
        assert canonicalize_url(raw) == expected

    def test_path_case_is_preserved(self):
        assert canonicalize_url("https://example.com/Article-One") == "https://example.com/Article-One"


class TestLookup:
    def test_lookup_by_id_round_trips(self):
        corpus = ingest(record_lines(article_record(id="a1")))
        assert corpus.lookup("a1").id == "a1"

    def test_unknown_url_is_absent(self):
        corpus = ingest(record_lines(article_record()))
        assert corpus.lookup("https://example.com/nope") is None

    def test_trailing_slash_resolves_to_same_article(self):
        corpus = ingest(record_lines(article_record(id="a1", url="https://example.com/a1")))
        assert corpus.lookup("https://example.com/a1/").id == "a1"

    def test_tracking_params_resolve_to_same_article(self):
        corpus = ingest(record_lines(article_record(id="a1", url="https://example.com/a1")))
        assert corpus.lookup("https://Example.com/a1?utm_source=mail#ref").id == "a1"


class TestFilterBySection:
    def test_default_allow_list_drops_opinion(self):
        corpus = Corpus([
            make_article(id="a", section="news"),
            make_article(id="b", section="opinion"),
            make_article(id="c", section="world"),
        ])
        kept = filter_by_section(corpus)
        assert sorted(a.id for a in kept) == ["a", "c"]

    def test_empty_allow_list_gives_empty_corpus(self):
        corpus = Corpus([make_article(id="a")])
        assert len(filter_by_section(corpus, set())) == 0

    def test_full_allow_list_is_identity(self):
        corpus = Corpus([make_article(id="a", section="x"), make_article(id="b", section="y")])
        assert len(filter_by_section(corpus, {"x", "y"})) == 2

    def test_match_is_case_insensitive(self):
        corpus = Corpus([make_article(id="a", section="News")])
        assert len(filter_by_section(corpus, {"news"})) == 1

    def test_idempotent_and_commutes_with_intersection(self, rng):
        corpus = random_corpus(rng, n_articles=12)
        allowed_a = {"news", "world"}
        allowed_b = {"world", "opinion"}
        once = filter_by_section(corpus, allowed_a)
        assert [a.id for a in filter_by_section(once, allowed_a)] == [a.id for a in once]
        ab = filter_by_section(filter_by_section(corpus, allowed_a), allowed_b)
        ba = filter_by_section(filter_by_section(corpus, allowed_b), allowed_a)
        direct = filter_by_section(corpus, allowed_a & allowed_b)
        assert [a.id for a in ab] == [a.id for a in ba] == [a.id for a in direct]


class TestExportRoundTrip:
    def test_export_ingest_export_is_bit_identical(self, rng):
        corpus = random_corpus(rng, n_articles=10)
        first = "\n".join(export(corpus))
        again = "\n".join(export(ingest(first.splitlines())))
        assert first == again

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_out_link_coordinates_always_resolve(self, seed):
        corpus = random_corpus(random.Random(seed), n_articles=6)
        reingested = ingest(export(corpus))
        for article in reingested:
            for link in article.out_links:
                assert article.sentence(link.paragraph_index, link.sentence_index)


class TestSentenceSplitter:
    def test_splits_on_terminator_then_uppercase(self):
        text = "One sentence. Then another! And a third? Yes."
        assert split_sentences_naive(text) == [
            "One sentence.", "Then another!", "And a third?", "Yes.",
        ]

    def test_does_not_split_before_lowercase(self):
        assert split_sentences_naive("approx. value is fine.") == ["approx. value is fine."]


def test_default_sections_match_expected_domain_list():
    assert DEFAULT_SECTIONS == {
        "news", "world", "business", "environment", "technology", "society",
        "science", "culture", "education", "global", "healthcare", "media",
        "money", "teacher", "local", "national",
    }
