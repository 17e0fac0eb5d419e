"""Article corpus: extraction from HTML, sanitization, and sampling.

The corpus file format is JSON Lines, one article per line with fields
``id, publisher_id, url, title, body, published_at, fetched_at, sanitized``.
Publisher metadata and per-publisher extraction rules live in one JSON
document keyed by publisher id.
"""

from __future__ import annotations

import hashlib
import json
import re
import unicodedata
from dataclasses import dataclass, replace
from datetime import date, datetime, timezone
from pathlib import Path
from urllib.parse import urlparse

from .errors import ExtractionEmpty, InsufficientArticles, RegistryInvalid
from .html_select import compile_selector, parse_html


@dataclass(frozen=True)
class Publisher:
    id: str
    name: str
    website: str
    scope: str = "national"  # national | local
    orientation: str | None = None
    risk_score: float | None = None


@dataclass(frozen=True)
class ExtractionRule:
    publisher_id: str
    title_selector: str
    body_selector: str
    date_selector: str | None = None


@dataclass(frozen=True)
class Article:
    id: str
    publisher_id: str
    url: str
    title: str
    body: str
    published_at: date | None
    fetched_at: datetime
    sanitized: bool = False

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "publisher_id": self.publisher_id,
            "url": self.url,
            "title": self.title,
            "body": self.body,
            "published_at": self.published_at.isoformat() if self.published_at else None,
            "fetched_at": self.fetched_at.isoformat(),
            "sanitized": self.sanitized,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Article":
        return cls(
            id=doc["id"],
            publisher_id=doc["publisher_id"],
            url=doc["url"],
            title=doc["title"],
            body=doc["body"],
            published_at=date.fromisoformat(doc["published_at"]) if doc.get("published_at") else None,
            fetched_at=datetime.fromisoformat(doc["fetched_at"]),
            sanitized=bool(doc.get("sanitized", False)),
        )


@dataclass(frozen=True)
class RedactionConfig:
    """Publisher names and author patterns to scrub before annotation."""

    publisher_names: tuple[str, ...]
    author_patterns: tuple[str, ...]
    placeholder_publisher: str = "[PUBLISHER]"
    placeholder_author: str = "[AUTHOR]"

    def __post_init__(self):
        if not self.placeholder_publisher or not self.placeholder_author:
            raise RegistryInvalid("redaction placeholders must be non-empty")
        targets = {t.lower() for t in self.publisher_names} | set(self.author_patterns)
        if self.placeholder_publisher.lower() in targets or self.placeholder_author in targets:
            raise RegistryInvalid("redaction placeholders must differ from every target")

    @classmethod
    def from_json(cls, doc: dict) -> "RedactionConfig":
        return cls(
            publisher_names=tuple(doc.get("publisher_names", [])),
            author_patterns=tuple(doc.get("author_patterns", [])),
            placeholder_publisher=doc.get("placeholder_publisher", "[PUBLISHER]"),
            placeholder_author=doc.get("placeholder_author", "[AUTHOR]"),
        )


@dataclass(frozen=True)
class SamplingSpec:
    per_publisher: int
    window_start: date
    window_end: date

    def __post_init__(self):
        if self.per_publisher < 1:
            raise RegistryInvalid("per_publisher must be >= 1")
        if not self.window_start < self.window_end:
            raise RegistryInvalid("window_start must precede window_end")


_WS_RE = re.compile(r"[ \t\r\n\f\v]+")


def normalize_whitespace(text: str) -> str:
    return _WS_RE.sub(" ", text).strip()


def _default_article_id(url: str) -> str:
    return "art-" + hashlib.sha256(url.encode("utf-8")).hexdigest()[:12]


_DATE_FORMATS = ("%Y-%m-%d", "%d/%m/%Y", "%d-%m-%Y", "%d.%m.%Y")


def parse_published_date(raw: str) -> date | None:
    raw = raw.strip()
    if not raw:
        return None
    # ISO timestamps ("2021-04-12T08:30:00+02:00") and plain dates
    try:
        return datetime.fromisoformat(raw.replace("Z", "+00:00")).date()
    except ValueError:
        pass
    token = raw.split("T")[0].split()[0]
    for fmt in _DATE_FORMATS:
        try:
            return datetime.strptime(token, fmt).date()
        except ValueError:
            continue
    return None


def ingest_article(
    raw_html: str,
    rule: ExtractionRule,
    url: str,
    publisher_id: str,
    article_id: str | None = None,
    fetched_at: datetime | None = None,
) -> Article:
    """Extract title and body from an HTML document using the publisher's rule.

    Multiple body matches are concatenated in document order, one per line;
    whitespace runs collapse to single spaces.  Raises ``ExtractionEmpty`` when
    the body selector yields nothing but whitespace, ``SelectorInvalid`` when a
    selector does not parse.
    """
    title_sel = compile_selector(rule.title_selector)
    body_sel = compile_selector(rule.body_selector)
    date_sel = compile_selector(rule.date_selector) if rule.date_selector else None

    root = parse_html(raw_html)
    titles = [normalize_whitespace(t) for t in title_sel.strings(root)]
    title = next((t for t in titles if t), "")

    paragraphs = [normalize_whitespace(t) for t in body_sel.strings(root)]
    body = "\n".join(p for p in paragraphs if p)
    if not body:
        raise ExtractionEmpty(f"body selector {rule.body_selector!r} matched no text at {url}")

    published = None
    if date_sel is not None:
        for raw in date_sel.strings(root):
            published = parse_published_date(raw)
            if published:
                break

    return Article(
        id=article_id or _default_article_id(url),
        publisher_id=publisher_id,
        url=url,
        title=title,
        body=body,
        published_at=published,
        fetched_at=fetched_at or datetime.now(timezone.utc),
        sanitized=False,
    )


def sanitize(article: Article, config: RedactionConfig) -> Article:
    """Replace publisher names and author-pattern matches with placeholders.

    Case-insensitive on publisher names; idempotent on its own output.  An
    article with no matches still comes back flagged ``sanitized=True``.
    """
    title, body = article.title, article.body
    for name in sorted(config.publisher_names, key=len, reverse=True):
        if not name:
            continue
        pattern = re.compile(re.escape(name), re.IGNORECASE)
        title = pattern.sub(config.placeholder_publisher, title)
        body = pattern.sub(config.placeholder_publisher, body)
    for raw in config.author_patterns:
        pattern = re.compile(raw)
        title = pattern.sub(config.placeholder_author, title)
        body = pattern.sub(config.placeholder_author, body)
    return replace(article, title=title, body=body, sanitized=True)


def scan_for_leaks(article: Article, config: RedactionConfig) -> list[str]:
    """Redaction targets still present in a sanitized article (should be none)."""
    text = article.title + "\n" + article.body
    hits = []
    for name in config.publisher_names:
        if name and re.search(re.escape(name), text, re.IGNORECASE):
            hits.append(name)
    for raw in config.author_patterns:
        if re.search(raw, text):
            hits.append(raw)
    return hits


def _publisher_rng_draw(seed: int, publisher_id: str, pool: list[Article], k: int) -> list[Article]:
    import random

    digest = hashlib.sha256(f"{seed}:{publisher_id}".encode("utf-8")).digest()
    rng = random.Random(int.from_bytes(digest[:8], "big"))
    return rng.sample(pool, k)


def sample_corpus(articles: list[Article], spec: SamplingSpec, seed: int = 0) -> list[Article]:
    """Seeded uniform draw of ``per_publisher`` in-window articles per publisher.

    Deterministic for a fixed seed.  Raises ``InsufficientArticles`` naming the
    first publisher that cannot fill its quota.
    """
    by_publisher: dict[str, list[Article]] = {}
    for art in articles:
        by_publisher.setdefault(art.publisher_id, []).append(art)

    sampled: list[Article] = []
    for publisher_id in sorted(by_publisher):
        eligible = [
            a
            for a in by_publisher[publisher_id]
            if a.published_at is not None and spec.window_start <= a.published_at <= spec.window_end
        ]
        eligible.sort(key=lambda a: (a.published_at, a.id))
        if len(eligible) < spec.per_publisher:
            raise InsufficientArticles(
                f"publisher {publisher_id}: have {len(eligible)}, need {spec.per_publisher}",
                publisher=publisher_id,
                have=len(eligible),
                need=spec.per_publisher,
            )
        sampled.extend(_publisher_rng_draw(seed, publisher_id, eligible, spec.per_publisher))

    sampled.sort(key=lambda a: (a.publisher_id, a.published_at, a.id))
    return sampled


# ---------------------------------------------------------------------------
# corpus and registry files
# ---------------------------------------------------------------------------

def load_corpus(path: str | Path) -> list[Article]:
    articles = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                articles.append(Article.from_json(json.loads(line)))
    return articles


def save_corpus(articles: list[Article], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for art in articles:
            fh.write(json.dumps(art.to_json(), ensure_ascii=False, sort_keys=True) + "\n")


def load_publisher_registry(path: str | Path) -> tuple[dict[str, Publisher], dict[str, ExtractionRule], dict[str, list[str]]]:
    """One JSON document keyed by publisher id with metadata, rule, and URLs."""
    doc = json.loads(Path(path).read_text("utf-8"))
    publishers: dict[str, Publisher] = {}
    rules: dict[str, ExtractionRule] = {}
    urls: dict[str, list[str]] = {}
    for pid, entry in doc.items():
        website = entry.get("website", "")
        parsed = urlparse(website)
        if parsed.scheme not in ("http", "https") or not parsed.netloc:
            raise RegistryInvalid(f"publisher {pid}: website {website!r} is not a valid URL")
        publishers[pid] = Publisher(
            id=pid,
            name=entry.get("name", pid),
            website=website,
            scope=entry.get("scope", "national"),
            orientation=entry.get("orientation"),
            risk_score=entry.get("risk_score"),
        )
        rules[pid] = ExtractionRule(
            publisher_id=pid,
            title_selector=entry["title_selector"],
            body_selector=entry["body_selector"],
            date_selector=entry.get("date_selector"),
        )
        # validate eagerly so a bad rule fails at load time, not mid-fetch
        compile_selector(rules[pid].title_selector)
        compile_selector(rules[pid].body_selector)
        if rules[pid].date_selector:
            compile_selector(rules[pid].date_selector)
        urls[pid] = list(entry.get("article_urls", []))
    return publishers, rules, urls
