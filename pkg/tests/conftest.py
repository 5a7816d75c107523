import json
import random

import pytest

from newsctx.corpus import Article, Corpus, OutLink


def make_article(
    id="a1",
    url=None,
    headline="Headline words here",
    paragraphs=(("Lead sentence one.",), ("Body sentence.", "Another body sentence.")),
    published_at=1_500_000_000,
    section="news",
    out_links=(),
    entities=None,
):
    return Article(
        id=id,
        url=url or f"https://example.com/{id}",
        headline=headline,
        paragraphs=tuple(tuple(p) for p in paragraphs),
        published_at=published_at,
        section=section,
        out_links=tuple(out_links),
        entities=tuple(entities) if entities is not None else None,
    )


def article_record(**kwargs):
    """A valid json-line record, overridable per field."""
    record = {
        "id": "a1",
        "url": "https://example.com/a1",
        "headline": "Headline words here",
        "published_at": "2019-05-10T08:00:00Z",
        "section": "news",
        "paragraphs": [["Lead sentence one."], ["Body sentence.", "Another body sentence."]],
        "out_links": [],
    }
    record.update(kwargs)
    return record


def record_lines(*records):
    return [json.dumps(r) for r in records]


def random_corpus(rng: random.Random, n_articles=8, with_links=True) -> Corpus:
    """Small random corpus; every out_link points at a valid sentence."""
    vocab = [f"w{k}" for k in range(30)]
    articles = []
    for i in range(n_articles):
        n_paras = rng.randint(1, 4)
        paragraphs = []
        for _ in range(n_paras):
            n_sents = rng.randint(1, 3)
            paragraphs.append(tuple(
                " ".join(rng.choices(vocab, k=rng.randint(3, 8))) + "."
                for _ in range(n_sents)
            ))
        links = []
        if with_links and n_articles > 1:
            for _ in range(rng.randint(0, 3)):
                p_i = rng.randint(1, n_paras)
                s_j = rng.randint(1, len(paragraphs[p_i - 1]))
                target = rng.randrange(n_articles)
                links.append(OutLink(
                    paragraph_index=p_i,
                    sentence_index=s_j,
                    target_url=f"https://example.com/d{target}"
                    if rng.random() > 0.15 else "https://elsewhere.org/x",
                    anchor_text="anchor",
                ))
        articles.append(Article(
            id=f"d{i}",
            url=f"https://example.com/d{i}",
            headline=" ".join(rng.choices(vocab, k=5)),
            paragraphs=tuple(paragraphs),
            published_at=1_500_000_000 + rng.randrange(0, 10_000_000),
            section=rng.choice(["news", "world", "opinion"]),
            out_links=tuple(links),
        ))
    return Corpus(articles)


@pytest.fixture
def rng():
    return random.Random(20240515)
