"""Article collection: ingest, validation, section filtering, and lookup.

The collection is immutable after ingest; every downstream stage (dataset
building, indexing, ranking) reads from a :class:`Corpus` handle.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence
from urllib.parse import parse_qsl, urlencode, urlsplit, urlunsplit

# Genre/domain allow-list used when filtering mixed newspaper collections
# down to real-world event coverage.
DEFAULT_SECTIONS = frozenset({
    "news", "world", "business", "environment", "technology", "society",
    "science", "culture", "education", "global", "healthcare", "media",
    "money", "teacher", "local", "national",
})

# Query parameters stripped during url canonicalization (plus any utm_*).
TRACKING_PARAMS = frozenset({"fbclid", "gclid", "igshid", "mc_cid", "mc_eid"})


class CorpusError(Exception):
    """Raised for malformed records, duplicates, and unusable corpora."""


class RecordError(CorpusError):
    """A single record failed validation; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no
        self.message = message


def canonicalize_url(url: str) -> str:
    """Normalize a url for link resolution.

    Lowercases scheme and host, strips the fragment and any trailing slash,
    and drops tracking query parameters (utm_* and a fixed list).
    """
    parts = urlsplit(url.strip())
    scheme = parts.scheme.lower()
    host = parts.netloc.lower()
    path = parts.path.rstrip("/")
    params = [
        (k, v)
        for k, v in parse_qsl(parts.query, keep_blank_values=True)
        if not k.lower().startswith("utm_") and k.lower() not in TRACKING_PARAMS
    ]
    query = urlencode(params)
    return urlunsplit((scheme, host, path, query, ""))


_DAY_RE = re.compile(r"^\d{4}-\d{2}-\d{2}$")


def parse_timestamp(value: str | int | float) -> int:
    """Parse a publish time into UTC epoch seconds.

    Accepts epoch seconds, full ISO 8601 strings, or day-granularity
    ``YYYY-MM-DD`` (normalized to 00:00:00 UTC).
    """
    if isinstance(value, (int, float)):
        return int(value)
    text = value.strip()
    if _DAY_RE.match(text):
        dt = datetime.strptime(text, "%Y-%m-%d").replace(tzinfo=timezone.utc)
        return int(dt.timestamp())
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def format_timestamp(epoch: int) -> str:
    """Render epoch seconds as canonical ``YYYY-MM-DDTHH:MM:SSZ``."""
    return datetime.fromtimestamp(epoch, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


_SENTENCE_BOUNDARY = re.compile(r"(?<=[.?!])\s+(?=[A-Z])")


def split_sentences_naive(text: str) -> list[str]:
    """Approximate sentence splitter for raw-text corpora.

    Splits after ``.``, ``?`` or ``!`` followed by whitespace and an
    uppercase letter. Producers should pre-split sentences instead;
    this fallback exists for corpora that only have flat paragraph text.
    """
    parts = [p.strip() for p in _SENTENCE_BOUNDARY.split(text.strip())]
    return [p for p in parts if p]


@dataclass(frozen=True)
class OutLink:
    """Hyperlink at sentence (paragraph_index, sentence_index), both 1-based."""

    paragraph_index: int
    sentence_index: int
    target_url: str
    anchor_text: str = ""


@dataclass(frozen=True)
class Article:
    id: str
    url: str
    headline: str
    paragraphs: tuple[tuple[str, ...], ...]
    published_at: int
    section: str
    out_links: tuple[OutLink, ...] = ()
    entities: Optional[tuple[str, ...]] = None

    @property
    def lead(self) -> tuple[str, ...]:
        """Sentences of the lead (first) paragraph."""
        return self.paragraphs[0]

    @property
    def lead_text(self) -> str:
        return " ".join(self.lead)

    def sentence(self, paragraph_index: int, sentence_index: int) -> str:
        return self.paragraphs[paragraph_index - 1][sentence_index - 1]

    def body_text(self) -> str:
        """Headline plus every sentence, flattened to one string."""
        parts = [self.headline]
        for para in self.paragraphs:
            parts.extend(para)
        return " ".join(parts)


@dataclass(frozen=True)
class CorpusStats:
    article_count: int
    section_counts: dict[str, int]
    published_min: Optional[int]
    published_max: Optional[int]
    token_bin_width: int
    token_histogram: dict[int, int]


class Corpus:
    """Immutable article collection with id- and url-keyed access."""

    def __init__(self, articles: Sequence[Article], issues: Sequence[tuple[int, str]] = ()):
        self.articles: tuple[Article, ...] = tuple(articles)
        self.issues: tuple[tuple[int, str], ...] = tuple(issues)
        self._by_id = {a.id: a for a in self.articles}
        self._by_url = {canonicalize_url(a.url): a for a in self.articles}

    def __len__(self) -> int:
        return len(self.articles)

    def __iter__(self) -> Iterator[Article]:
        return iter(self.articles)

    def __contains__(self, article_id: str) -> bool:
        return article_id in self._by_id

    def get(self, article_id: str) -> Optional[Article]:
        return self._by_id.get(article_id)

    def __getitem__(self, article_id: str) -> Article:
        return self._by_id[article_id]

    def lookup(self, key: str) -> Optional[Article]:
        """Exact-match retrieval by id, falling back to canonicalized url."""
        hit = self._by_id.get(key)
        if hit is not None:
            return hit
        return self._by_url.get(canonicalize_url(key))

    def published_at(self, article_id: str) -> int:
        return self._by_id[article_id].published_at

    def sections(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for a in self.articles:
            counts[a.section] = counts.get(a.section, 0) + 1
        return counts

    def stats(self, token_bin_width: int = 50) -> CorpusStats:
        times = [a.published_at for a in self.articles]
        hist: dict[int, int] = {}
        for a in self.articles:
            n_tokens = len(a.body_text().split())
            bin_lo = (n_tokens // token_bin_width) * token_bin_width
            hist[bin_lo] = hist.get(bin_lo, 0) + 1
        return CorpusStats(
            article_count=len(self.articles),
            section_counts=self.sections(),
            published_min=min(times) if times else None,
            published_max=max(times) if times else None,
            token_bin_width=token_bin_width,
            token_histogram=dict(sorted(hist.items())),
        )


def _parse_paragraphs(raw, line_no: int, fallback_split: bool) -> tuple[tuple[str, ...], ...]:
    if not isinstance(raw, list) or not raw:
        raise RecordError(line_no, "field 'paragraphs' must be a non-empty list")
    paragraphs = []
    for p_i, para in enumerate(raw, start=1):
        if isinstance(para, str):
            if not fallback_split:
                raise RecordError(
                    line_no,
                    f"paragraph {p_i} is flat text; pre-split sentences or pass fallback_split",
                )
            sentences = split_sentences_naive(para)
        elif isinstance(para, list) and all(isinstance(s, str) for s in para):
            sentences = list(para)
        else:
            raise RecordError(line_no, f"paragraph {p_i} must be a list of sentence strings")
        if not sentences:
            raise RecordError(line_no, f"paragraph {p_i} has no sentences")
        paragraphs.append(tuple(sentences))
    return tuple(paragraphs)


def _parse_record(line: str, line_no: int, fallback_split: bool) -> Article:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RecordError(line_no, f"invalid json: {exc}") from exc
    if not isinstance(record, dict):
        raise RecordError(line_no, "record must be an object")

    for field_name in ("id", "url", "headline", "paragraphs", "published_at", "section"):
        if field_name not in record:
            raise RecordError(line_no, f"missing field '{field_name}'")

    paragraphs = _parse_paragraphs(record["paragraphs"], line_no, fallback_split)
    try:
        published_at = parse_timestamp(record["published_at"])
    except (ValueError, TypeError) as exc:
        raise RecordError(line_no, f"bad timestamp {record['published_at']!r}: {exc}") from exc

    out_links = []
    for link in record.get("out_links", []):
        try:
            out_links.append(OutLink(
                paragraph_index=int(link["paragraph_index"]),
                sentence_index=int(link["sentence_index"]),
                target_url=str(link["target_url"]),
                anchor_text=str(link.get("anchor_text", "")),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise RecordError(line_no, f"bad out_link {link!r}: {exc}") from exc
    for link in out_links:
        if link.paragraph_index < 1 or link.sentence_index < 1:
            raise RecordError(line_no, "out_link indices must be >= 1")
        if link.paragraph_index > len(paragraphs):
            raise RecordError(line_no, f"out_link paragraph {link.paragraph_index} out of range")
        if link.sentence_index > len(paragraphs[link.paragraph_index - 1]):
            raise RecordError(
                line_no,
                f"out_link sentence ({link.paragraph_index}, {link.sentence_index}) out of range",
            )

    entities = record.get("entities")
    if entities is not None:
        if not isinstance(entities, list) or not all(isinstance(e, str) for e in entities):
            raise RecordError(line_no, "field 'entities' must be a list of strings")
        entities = tuple(entities)

    return Article(
        id=str(record["id"]),
        url=str(record["url"]),
        headline=str(record["headline"]),
        paragraphs=paragraphs,
        published_at=published_at,
        section=str(record["section"]),
        out_links=tuple(out_links),
        entities=entities,
    )


def ingest(
    source: str | Path | Iterable[str],
    strict: bool = True,
    fallback_split: bool = False,
) -> Corpus:
    """Parse line-delimited article records into an immutable corpus.

    ``source`` is a path or an iterable of json lines. In strict mode any
    invalid record, duplicate id, or duplicate url is fatal; otherwise bad
    records are skipped and reported in ``Corpus.issues`` with line numbers.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    else:
        lines = list(source)

    articles: list[Article] = []
    issues: list[tuple[int, str]] = []
    seen_ids: dict[str, int] = {}
    seen_urls: dict[str, int] = {}
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            article = _parse_record(line, line_no, fallback_split)
            if article.id in seen_ids:
                raise RecordError(
                    line_no, f"duplicate id {article.id!r} (first seen line {seen_ids[article.id]})"
                )
            canon = canonicalize_url(article.url)
            if canon in seen_urls:
                raise RecordError(
                    line_no, f"duplicate url {article.url!r} (first seen line {seen_urls[canon]})"
                )
        except RecordError as exc:
            if strict:
                raise
            issues.append((exc.line_no, exc.message))
            continue
        seen_ids[article.id] = line_no
        seen_urls[canon] = line_no
        articles.append(article)
    return Corpus(articles, issues)


def article_to_record(article: Article) -> dict:
    record = {
        "id": article.id,
        "url": article.url,
        "headline": article.headline,
        "published_at": format_timestamp(article.published_at),
        "section": article.section,
        "paragraphs": [list(p) for p in article.paragraphs],
        "out_links": [
            {
                "paragraph_index": l.paragraph_index,
                "sentence_index": l.sentence_index,
                "target_url": l.target_url,
                "anchor_text": l.anchor_text,
            }
            for l in article.out_links
        ],
    }
    if article.entities is not None:
        record["entities"] = list(article.entities)
    return record


def export(corpus: Corpus) -> Iterator[str]:
    """Emit the corpus as canonical json lines (round-trips through ingest)."""
    for article in corpus:
        yield json.dumps(article_to_record(article), ensure_ascii=False)


def write_corpus(corpus: Corpus, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in export(corpus):
            fh.write(line + "\n")


def filter_by_section(corpus: Corpus, allowed: Iterable[str] = DEFAULT_SECTIONS) -> Corpus:
    """Keep exactly the articles whose section is in ``allowed`` (case-insensitive)."""
    allowed_fold = {s.lower() for s in allowed}
    return Corpus([a for a in corpus if a.section.lower() in allowed_fold])
