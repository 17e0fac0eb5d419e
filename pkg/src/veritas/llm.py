"""LLM backend invocation: persona prompt, triple-repetition protocol, parsing.

Every (article, criterion) question is asked three times in independent
conversations; the final answer is the modal parsed value.  Model settings
default to fully deterministic output: temperature 0, both penalties 0, no
stop sequences, no output-token cap.

Response parsing is a normalization pipeline (casefold, strip accents,
punctuation to spaces) followed by exact option match, then unique
token-subsequence match.  All raw responses are persisted verbatim so parsing
can be re-run offline without re-querying.
"""

from __future__ import annotations

import json
import os
import threading
import time
import unicodedata
from dataclasses import dataclass, field
from datetime import datetime
from hashlib import sha256
from pathlib import Path
from typing import Mapping

import httpx

from .annotations import Annotation, LlmAnnotationEvidence
from .corpus import Article
from .criteria import AnswerSchema, Criterion, render_question
from .errors import (
    BackendError,
    FixtureMiss,
    InconsistentResponses,
    ResponseAmbiguous,
    ResponseUnparseable,
    SubanswerMissing,
    UnsanitizedArticle,
    VeritasError,
)

ENDPOINT_ENV = "VERITAS_LLM_ENDPOINT"
API_KEY_ENV = "VERITAS_LLM_KEY"

PERSONA = {
    "it": (
        "Sei un giornalista esperto. Valuti la qualità giornalistica degli "
        "articoli che ti vengono sottoposti."
    ),
    "en": (
        "You are an experienced journalist. You evaluate the journalistic "
        "quality of the articles you are given."
    ),
}

_ANSWER_INSTRUCTION = {
    "it": "Rispondi esattamente con una delle opzioni elencate, senza aggiungere altro.",
    "en": "Answer with exactly one of the listed options and nothing else.",
}
_SUB_INSTRUCTION = {
    "it": "Se la risposta è Sì, indica anche esattamente uno dei temi elencati.",
    "en": "If the answer is Yes, also give exactly one of the listed issues.",
}
_TITLE_LABEL = {"it": "Titolo", "en": "Title"}
_BODY_LABEL = {"it": "Testo", "en": "Text"}


@dataclass(frozen=True)
class BackendConfig:
    backend_kind: str = "http"  # http | mock | replay
    model_id: str = "gpt-4o"
    temperature: float = 0.0
    frequency_penalty: float = 0.0
    presence_penalty: float = 0.0
    stop_sequences: tuple[str, ...] | None = None
    max_output_tokens: int | None = None
    endpoint: str | None = None  # falls back to $VERITAS_LLM_ENDPOINT
    auth_env: str = API_KEY_ENV
    request_timeout: float = 60.0
    max_retries: int = 3
    rate_limit_per_minute: int = 60


@dataclass(frozen=True)
class LlmRequest:
    persona_instruction: str
    question_block: str
    article_text: str
    language: str

    def user_message(self) -> str:
        return self.question_block + "\n\n" + self.article_text


@dataclass(frozen=True)
class RequestContext:
    """Identifies one repetition of one cell, for fixtures and recording."""

    article_id: str
    criterion_id: str
    version: str
    repetition: int


@dataclass(frozen=True)
class ParsedAnswer:
    answer: str
    sub_answer: str | None = None

    def to_json(self) -> dict:
        return {"answer": self.answer, "sub_answer": self.sub_answer}


def build_request(article: Article, criterion: Criterion, version: str, language: str = "it") -> LlmRequest:
    """Deterministic prompt assembly; refuses articles not yet sanitized."""
    if not article.sanitized:
        raise UnsanitizedArticle(f"article {article.id} must be sanitized before annotation")
    question = render_question(criterion, version, language)
    instructions = [_ANSWER_INSTRUCTION.get(language, _ANSWER_INSTRUCTION["en"])]
    if criterion.schema[version].kind == "compound":
        instructions.append(_SUB_INSTRUCTION.get(language, _SUB_INSTRUCTION["en"]))
    question_block = question + "\n\n" + " ".join(instructions)
    article_text = (
        f"{_TITLE_LABEL.get(language, 'Title')}: {article.title}\n"
        f"{_BODY_LABEL.get(language, 'Text')}:\n<<<\n{article.body}\n>>>"
    )
    return LlmRequest(
        persona_instruction=PERSONA.get(language, PERSONA["en"]),
        question_block=question_block,
        article_text=article_text,
        language=language,
    )


# ---------------------------------------------------------------------------
# response parsing
# ---------------------------------------------------------------------------

def normalize_answer_text(raw: str) -> str:
    """Casefold, strip accents, and collapse punctuation to single spaces."""
    decomposed = unicodedata.normalize("NFKD", raw)
    stripped = "".join(ch for ch in decomposed if not unicodedata.combining(ch))
    out = []
    for ch in stripped.casefold():
        out.append(ch if ch.isalnum() else " ")
    return " ".join("".join(out).split())


def _option_surfaces(schema: AnswerSchema, language: str) -> list[tuple[str, list[tuple[str, ...]]]]:
    surfaces = []
    for opt in schema.options:
        variants = {normalize_answer_text(opt.label)}
        if language in opt.text:
            variants.add(normalize_answer_text(opt.text[language]))
        surfaces.append((opt.label, [tuple(v.split()) for v in variants if v]))
    return surfaces


def _match_option(tokens: tuple[str, ...], surfaces: list[tuple[str, list[tuple[str, ...]]]]) -> str | None:
    """Unique token-subsequence match; longer matches shadow contained ones.

    Returns the single matching option label, None when nothing matches, and
    raises ``ResponseAmbiguous`` when several distinct options survive.
    """
    joined = " ".join(tokens)
    # exact whole-response match wins outright
    for label, variants in surfaces:
        if any(" ".join(v) == joined for v in variants):
            return label

    spans: list[tuple[int, int, str]] = []  # (start, end, label)
    for label, variants in surfaces:
        for variant in variants:
            width = len(variant)
            if width == 0:
                continue
            for start in range(0, len(tokens) - width + 1):
                if tuple(tokens[start : start + width]) == variant:
                    spans.append((start, start + width, label))
    surviving = [
        (s, e, label)
        for (s, e, label) in spans
        if not any(
            (s2 <= s and e <= e2 and (e2 - s2) > (e - s)) for (s2, e2, _) in spans
        )
    ]
    labels = {label for _, _, label in surviving}
    if not labels:
        return None
    if len(labels) > 1:
        raise ResponseAmbiguous(f"response matches several options: {sorted(labels)}")
    return labels.pop()


def parse_response(raw: str, schema: AnswerSchema, language: str = "it") -> ParsedAnswer:
    """Map a raw model response onto the schema's option set.

    Raises ``ResponseUnparseable`` when no option occurs, ``ResponseAmbiguous``
    when several do, and ``SubanswerMissing`` when a compound head is Yes but
    no issue can be found.
    """
    tokens = tuple(normalize_answer_text(raw).split())
    label = _match_option(tokens, _option_surfaces(schema, language))
    if label is None:
        raise ResponseUnparseable(f"no option of {schema.labels()} found in response")
    if schema.kind != "compound":
        return ParsedAnswer(answer=label)
    if label != "Yes":
        return ParsedAnswer(answer=label)
    sub = _match_option(tokens, _option_surfaces(schema.sub_schema, language))
    if sub is None:
        raise SubanswerMissing("head answer is Yes but no issue option was found")
    return ParsedAnswer(answer=label, sub_answer=sub)


# ---------------------------------------------------------------------------
# repetition protocol
# ---------------------------------------------------------------------------

def classify_repetitions(parsed: list[ParsedAnswer | str]) -> tuple[str, ParsedAnswer | None]:
    """Consistency of three parses: unanimous, majority (2 of 3), inconsistent.

    Entries may be parse-error codes (strings); those never form a majority.
    """
    valid = [p for p in parsed if isinstance(p, ParsedAnswer)]
    counts: dict[ParsedAnswer, int] = {}
    for p in valid:
        counts[p] = counts.get(p, 0) + 1
    if len(valid) == 3 and len(counts) == 1:
        return "unanimous", valid[0]
    for value, count in counts.items():
        if count == 2:
            return "majority", value
    return "inconsistent", None


def annotate_llm(
    article: Article,
    criterion: Criterion,
    version: str,
    backend: "Backend",
    language: str = "it",
    annotator_id: str = "llm",
    created_at: datetime | None = None,
) -> Annotation:
    """Ask one question three times and reduce the answers to one annotation.

    Raises ``InconsistentResponses`` when the three parses are all distinct;
    the exception carries the final-less annotation so callers can still store
    the evidence.
    """
    request = build_request(article, criterion, version, language)
    schema = criterion.schema[version]

    raws: list[str] = []
    parsed: list[ParsedAnswer | str] = []
    for repetition in range(3):
        ctx = RequestContext(article.id, criterion.id, version, repetition)
        raw = backend.complete(ctx, request)
        raws.append(raw)
        try:
            parsed.append(parse_response(raw, schema, language))
        except (ResponseUnparseable, ResponseAmbiguous, SubanswerMissing) as exc:
            parsed.append(exc.code)

    consistency, final = classify_repetitions(parsed)
    evidence = LlmAnnotationEvidence(
        repetitions=tuple(raws),
        parsed=tuple(p.to_json() if isinstance(p, ParsedAnswer) else {"error": p} for p in parsed),
        consistency=consistency,
        final=final.to_json() if final else None,
    )
    annotation = Annotation(
        article_id=article.id,
        criterion_id=criterion.id,
        annotator_id=annotator_id,
        prompt_version=version,
        answer=final.answer if final else None,
        sub_answer=final.sub_answer if final else None,
        evidence=evidence,
        created_at=created_at,
    )
    if consistency == "inconsistent":
        raise InconsistentResponses(
            f"three distinct answers for ({article.id}, {criterion.id}, {version})",
            annotation=annotation,
        )
    return annotation


# ---------------------------------------------------------------------------
# backends
# ---------------------------------------------------------------------------

class Backend:
    """Interface: complete(ctx, request) -> raw response text."""

    def complete(self, ctx: RequestContext, request: LlmRequest) -> str:  # pragma: no cover
        raise NotImplementedError


class _RateLimiter:
    def __init__(self, per_minute: int):
        self.interval = 60.0 / per_minute if per_minute > 0 else 0.0
        self._lock = threading.Lock()
        self._next_at = 0.0

    def wait(self) -> None:
        if self.interval <= 0:
            return
        with self._lock:
            now = time.monotonic()
            delay = self._next_at - now
            self._next_at = max(now, self._next_at) + self.interval
        if delay > 0:
            time.sleep(delay)


class HttpBackend(Backend):
    """Chat-style JSON wire contract against a configurable endpoint.

    Request: {model, messages: [system persona, user question+article],
    temperature, frequency_penalty, presence_penalty, [stop], [max_tokens]}.
    Response: {choices: [{message: {content}}]}.  Retries with exponential
    backoff on 429/5xx and transport errors, then raises ``BackendError``.
    """

    def __init__(self, config: BackendConfig, transport: httpx.BaseTransport | None = None):
        self.config = config
        endpoint = config.endpoint or os.environ.get(ENDPOINT_ENV)
        if not endpoint:
            raise BackendError(f"no endpoint configured and ${ENDPOINT_ENV} is unset")
        self.endpoint = endpoint
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(config.auth_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self._client = httpx.Client(timeout=config.request_timeout, headers=headers, transport=transport)
        self._limiter = _RateLimiter(config.rate_limit_per_minute)

    def payload(self, request: LlmRequest) -> dict:
        body = {
            "model": self.config.model_id,
            "messages": [
                {"role": "system", "content": request.persona_instruction},
                {"role": "user", "content": request.user_message()},
            ],
            "temperature": self.config.temperature,
            "frequency_penalty": self.config.frequency_penalty,
            "presence_penalty": self.config.presence_penalty,
        }
        if self.config.stop_sequences:
            body["stop"] = list(self.config.stop_sequences)
        if self.config.max_output_tokens is not None:
            body["max_tokens"] = self.config.max_output_tokens
        return body

    def complete(self, ctx: RequestContext, request: LlmRequest) -> str:
        last_error = None
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                time.sleep(min(0.5 * 2 ** (attempt - 1), 8.0))
            self._limiter.wait()
            try:
                resp = self._client.post(self.endpoint, json=self.payload(request))
            except httpx.HTTPError as exc:
                last_error = f"{type(exc).__name__}: {exc}"
                continue
            if resp.status_code == 200:
                try:
                    return resp.json()["choices"][0]["message"]["content"]
                except (KeyError, IndexError, ValueError) as exc:
                    raise BackendError(f"malformed backend response: {exc}")
            if resp.status_code in (429,) or resp.status_code >= 500:
                last_error = f"HTTP {resp.status_code}"
                continue
            raise BackendError(f"backend rejected request: HTTP {resp.status_code}")
        raise BackendError(f"backend unreachable after {self.config.max_retries} retries: {last_error}")

    def close(self) -> None:
        self._client.close()


class MockBackend(Backend):
    """Deterministic fixture-driven backend for tests and dry runs.

    The fixture maps (article id or article-text sha256, criterion, version)
    to a response text, or to a list of per-repetition texts.
    """

    def __init__(self, fixture: Mapping | str | Path, strict: bool = True, default: str | None = None):
        if isinstance(fixture, (str, Path)):
            fixture = json.loads(Path(fixture).read_text("utf-8"))
        self.strict = strict
        self.default = fixture.get("default", default) if isinstance(fixture, dict) else default
        self._by_id: dict[tuple, str | list] = {}
        self._by_hash: dict[tuple, str | list] = {}
        entries = fixture.get("entries", []) if isinstance(fixture, dict) else []
        for entry in entries:
            response = entry.get("responses", entry.get("response"))
            key_tail = (entry["criterion"], entry["version"])
            if "article_id" in entry:
                self._by_id[(entry["article_id"], *key_tail)] = response
            if "content_sha256" in entry:
                self._by_hash[(entry["content_sha256"], *key_tail)] = response

    def complete(self, ctx: RequestContext, request: LlmRequest) -> str:
        hit = self._by_id.get((ctx.article_id, ctx.criterion_id, ctx.version))
        if hit is None and self._by_hash:
            digest = sha256(request.article_text.encode("utf-8")).hexdigest()
            hit = self._by_hash.get((digest, ctx.criterion_id, ctx.version))
        if hit is None:
            if self.default is not None and not self.strict:
                return self.default
            raise FixtureMiss(f"no fixture for ({ctx.article_id}, {ctx.criterion_id}, {ctx.version})")
        if isinstance(hit, list):
            return hit[ctx.repetition % len(hit)]
        return hit


class ReplayBackend(Backend):
    """Replays a recorded run exactly, keyed down to the repetition index."""

    def __init__(self, path: str | Path):
        self._responses: dict[tuple, str] = {}
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                row = json.loads(line)
                key = row["key"]
                self._responses[
                    (key["article_id"], key["criterion"], key["version"], key["repetition"])
                ] = row["response"]

    def complete(self, ctx: RequestContext, request: LlmRequest) -> str:
        key = (ctx.article_id, ctx.criterion_id, ctx.version, ctx.repetition)
        try:
            return self._responses[key]
        except KeyError:
            raise FixtureMiss(f"no recorded response for {key}")


class RecordingBackend(Backend):
    """Tees another backend's responses into a replay file."""

    def __init__(self, inner: Backend, path: str | Path):
        self.inner = inner
        self.path = Path(path)
        self._lock = threading.Lock()

    def complete(self, ctx: RequestContext, request: LlmRequest) -> str:
        response = self.inner.complete(ctx, request)
        row = {
            "key": {
                "article_id": ctx.article_id,
                "criterion": ctx.criterion_id,
                "version": ctx.version,
                "repetition": ctx.repetition,
            },
            "response": response,
        }
        with self._lock, open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
        return response


def write_replay_file(rows: list[tuple[RequestContext, str]], path: str | Path) -> None:
    """Write (context, response) pairs in the replay file format."""
    with open(path, "w", encoding="utf-8") as fh:
        for ctx, response in rows:
            row = {
                "key": {
                    "article_id": ctx.article_id,
                    "criterion": ctx.criterion_id,
                    "version": ctx.version,
                    "repetition": ctx.repetition,
                },
                "response": response,
            }
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")


def make_backend(config: BackendConfig, fixture_path: str | Path | None = None, **kwargs) -> Backend:
    if config.backend_kind == "http":
        return HttpBackend(config, **kwargs)
    if config.backend_kind == "mock":
        if fixture_path is None:
            raise BackendError("mock backend needs a fixture file")
        return MockBackend(fixture_path, **kwargs)
    if config.backend_kind == "replay":
        if fixture_path is None:
            raise BackendError("replay backend needs a recorded run file")
        return ReplayBackend(fixture_path)
    raise BackendError(f"unknown backend kind {config.backend_kind!r}")
