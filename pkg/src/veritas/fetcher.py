"""Polite article fetching: plain GET, per-host delay, bounded parallelism."""

from __future__ import annotations

import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from urllib.parse import urlparse

import httpx

from .corpus import Article, ExtractionRule, ingest_article
from .errors import VeritasError

DEFAULT_USER_AGENT = "veritas-corpus/0.1 (+research; contact operator)"


@dataclass
class FetchFailure:
    url: str
    publisher_id: str
    error: str


@dataclass
class FetchResult:
    articles: list[Article] = field(default_factory=list)
    failures: list[FetchFailure] = field(default_factory=list)


class _HostThrottle:
    """Serializes requests per host with a minimum delay between them."""

    def __init__(self, delay: float):
        self.delay = delay
        self._locks: dict[str, threading.Lock] = {}
        self._last: dict[str, float] = {}
        self._guard = threading.Lock()

    def wait(self, host: str) -> None:
        with self._guard:
            lock = self._locks.setdefault(host, threading.Lock())
        with lock:
            last = self._last.get(host, 0.0)
            pause = self.delay - (time.monotonic() - last)
            if pause > 0:
                time.sleep(pause)
            self._last[host] = time.monotonic()


def fetch_corpus(
    rules: dict[str, ExtractionRule],
    urls: dict[str, list[str]],
    user_agent: str = DEFAULT_USER_AGENT,
    per_host_delay: float = 1.0,
    concurrency: int = 4,
    timeout: float = 20.0,
    transport: httpx.BaseTransport | None = None,
) -> FetchResult:
    """Fetch and extract every configured URL; failures are collected, not fatal."""
    throttle = _HostThrottle(per_host_delay)
    result = FetchResult()
    result_lock = threading.Lock()

    client = httpx.Client(
        headers={"User-Agent": user_agent},
        timeout=timeout,
        follow_redirects=True,
        transport=transport,
    )

    def fetch_one(publisher_id: str, url: str) -> None:
        try:
            rule = rules[publisher_id]
            throttle.wait(urlparse(url).netloc)
            resp = client.get(url)
            resp.raise_for_status()
            article = ingest_article(resp.text, rule, url=url, publisher_id=publisher_id)
            with result_lock:
                result.articles.append(article)
        except (httpx.HTTPError, VeritasError, KeyError) as exc:
            with result_lock:
                result.failures.append(
                    FetchFailure(url=url, publisher_id=publisher_id, error=f"{type(exc).__name__}: {exc}")
                )

    jobs = [(pid, url) for pid, pid_urls in urls.items() for url in pid_urls]
    try:
        with ThreadPoolExecutor(max_workers=max(1, concurrency)) as pool:
            for pid, url in jobs:
                pool.submit(fetch_one, pid, url)
    finally:
        client.close()

    result.articles.sort(key=lambda a: (a.publisher_id, a.url))
    result.failures.sort(key=lambda f: (f.publisher_id, f.url))
    return result
