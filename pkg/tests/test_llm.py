import itertools
import json
from datetime import date, datetime, timezone

import httpx
import pytest

from veritas.corpus import Article
from veritas.errors import (
    BackendError,
    FixtureMiss,
    InconsistentResponses,
    ResponseAmbiguous,
    ResponseUnparseable,
    SubanswerMissing,
    UnsanitizedArticle,
)
from veritas.llm import (
    BackendConfig,
    HttpBackend,
    MockBackend,
    ParsedAnswer,
    RecordingBackend,
    ReplayBackend,
    RequestContext,
    annotate_llm,
    build_request,
    classify_repetitions,
    normalize_answer_text,
    parse_response,
    write_replay_file,
)

ARTICLE = Article(
    id="art-1",
    publisher_id="pub-1",
    url="https://x.example/1",
    title="Titolo di prova",
    body="Corpo dell'articolo.\nSecondo paragrafo.",
    published_at=date(2021, 5, 1),
    fetched_at=datetime(2021, 11, 1, tzinfo=timezone.utc),
    sanitized=True,
)


# -- request building ----------------------------------------------------------

def test_build_request_requires_sanitized(registry):
    raw = ARTICLE.__class__(**{**vars(ARTICLE), "sanitized": False})
    with pytest.raises(UnsanitizedArticle):
        build_request(raw, registry.get("Type"), "initial", "it")


def test_build_request_deterministic(registry):
    one = build_request(ARTICLE, registry.get("SensLang"), "initial", "it")
    two = build_request(ARTICLE, registry.get("SensLang"), "initial", "it")
    assert one == two
    assert one.user_message() == two.user_message()


def test_build_request_negtarg_lists_issues(registry):
    req = build_request(ARTICLE, registry.get("NegTarg"), "initial", "it")
    for issue in ("Politica", "Genere", "Religione", "Altro"):
        assert issue in req.question_block
    assert "giornalista" in req.persona_instruction
    assert ARTICLE.title in req.article_text
    assert ARTICLE.body in req.article_text


# -- normalization and parsing --------------------------------------------------

def test_normalize_strips_accents_case_punctuation():
    assert normalize_answer_text("  SÌ,  certo! ") == "si certo"
    assert normalize_answer_text("PIUTTOSTO   accurato.") == "piuttosto accurato"


# hand-labeled Italian phrasings; every entry must parse to exactly this answer
PARSER_FIXTURE = [
    ("HeadAcc", "Accurato", ("Accurate", None)),
    ("HeadAcc", "Il titolo è piuttosto accurato.", ("Quite accurate", None)),
    ("HeadAcc", "piuttosto inaccurato", ("Quite inaccurate", None)),
    ("HeadAcc", "Inaccurato.", ("Inaccurate", None)),
    ("LedePres", "Sì", ("Yes", None)),
    ("LedePres", "No.", ("No", None)),
    ("LedePres", "Sì, l'articolo inizia con un riassunto dei fatti principali.", ("Yes", None)),
    ("LedePres", "La risposta è: No", ("No", None)),
    ("NegTarg", "Sì. Politica.", ("Yes", "Politics")),
    ("NegTarg", "Sì, il gruppo è preso di mira per motivi di religione.", ("Yes", "Religion")),
    ("NegTarg", "No, non ci sono attacchi a individui o gruppi.", ("No", None)),
    ("NegTarg", "Sì, genere.", ("Yes", "Gender")),
    ("ArtBias", "Di parte.", ("Biased", None)),
    ("ArtBias", "L'articolo è piuttosto di parte.", ("Quite biased", None)),
    ("ArtBias", "Piuttosto imparziale", ("Quite unbiased", None)),
    ("ArtBias", "Imparziale", ("Unbiased", None)),
    ("SensLang", "Sensazionalistico", ("Sensational", None)),
    ("SensLang", "Il tono è piuttosto neutro.", ("Quite neutral", None)),
    ("Type", "Notizia diretta", ("Straight news", None)),
    ("Type", "Si tratta di un editoriale.", ("Editorial", None)),
]


def test_parser_fixture_all_twenty(registry):
    assert len(PARSER_FIXTURE) == 20
    for criterion_id, raw, (answer, sub) in PARSER_FIXTURE:
        schema = registry.get(criterion_id).initial_schema()
        parsed = parse_response(raw, schema, "it")
        assert (parsed.answer, parsed.sub_answer) == (answer, sub), raw


def test_parse_unparseable(registry):
    with pytest.raises(ResponseUnparseable):
        parse_response("Non saprei dire", registry.get("HeadAcc").initial_schema(), "it")


def test_parse_ambiguous(registry):
    with pytest.raises(ResponseAmbiguous):
        parse_response(
            "Accurato, anzi piuttosto accurato",
            registry.get("HeadAcc").initial_schema(),
            "it",
        )


def test_parse_subanswer_missing(registry):
    with pytest.raises(SubanswerMissing):
        parse_response("Sì.", registry.get("NegTarg").initial_schema(), "it")


def test_parse_ambiguous_head(registry):
    with pytest.raises(ResponseAmbiguous):
        parse_response("Sì e no", registry.get("NegTarg").initial_schema(), "it")


def test_parse_accepts_canonical_english_labels(registry):
    parsed = parse_response("Quite neutral", registry.get("SensLang").initial_schema(), "it")
    assert parsed.answer == "Quite neutral"


def test_parse_refined_binary(registry):
    schema = registry.get("SensLang").schema["refined"]
    assert parse_response("Direi neutro.", schema, "it").answer == "Neutral"


def test_parse_never_returns_out_of_schema(registry):
    # fuzz a little: every successful parse lands in the schema
    import random

    rng = random.Random(5)
    schema = registry.get("Type").initial_schema()
    words = ["notizia", "diretta", "satira", "leggera", "inchiesta", "editoriale", "boh", "forse"]
    for _ in range(200):
        raw = " ".join(rng.choice(words) for _ in range(rng.randint(1, 6)))
        try:
            parsed = parse_response(raw, schema, "it")
        except (ResponseUnparseable, ResponseAmbiguous):
            continue
        assert schema.has_label(parsed.answer)


# -- repetition protocol ---------------------------------------------------------

def test_classification_exhaustive_over_four_options():
    options = [ParsedAnswer(label) for label in ("A", "B", "C", "D")]
    for triple in itertools.product(options, repeat=3):
        consistency, final = classify_repetitions(list(triple))
        distinct = len(set(triple))
        if distinct == 1:
            assert consistency == "unanimous"
            assert final == triple[0]
        elif distinct == 2:
            assert consistency == "majority"
            counts = {p: triple.count(p) for p in triple}
            assert final == max(counts, key=counts.get)
        else:
            assert consistency == "inconsistent"
            assert final is None


def test_classification_with_parse_errors():
    a = ParsedAnswer("A")
    assert classify_repetitions([a, a, "RESPONSE_UNPARSEABLE"]) == ("majority", a)
    assert classify_repetitions([a, "RESPONSE_UNPARSEABLE", "RESPONSE_AMBIGUOUS"]) == ("inconsistent", None)
    assert classify_repetitions(["E1", "E1", "E1"]) == ("inconsistent", None)


def _mock(fixture_entries, **kwargs):
    return MockBackend({"entries": fixture_entries, **kwargs})


def test_annotate_unanimous(registry):
    backend = _mock(
        [{"article_id": "art-1", "criterion": "SensLang", "version": "initial", "response": "Piuttosto neutro."}]
    )
    ann = annotate_llm(ARTICLE, registry.get("SensLang"), "initial", backend)
    assert ann.answer == "Quite neutral"
    assert ann.evidence.consistency == "unanimous"
    assert len(ann.evidence.repetitions) == 3


def test_annotate_majority(registry):
    backend = _mock(
        [
            {
                "article_id": "art-1",
                "criterion": "LedePres",
                "version": "initial",
                "responses": ["Sì", "Sì", "No"],
            }
        ]
    )
    ann = annotate_llm(ARTICLE, registry.get("LedePres"), "initial", backend)
    assert ann.answer == "Yes"
    assert ann.evidence.consistency == "majority"


def test_annotate_inconsistent_raises_with_annotation(registry):
    backend = _mock(
        [
            {
                "article_id": "art-1",
                "criterion": "ArtBias",
                "version": "initial",
                "responses": ["Di parte", "Piuttosto di parte", "Imparziale"],
            }
        ]
    )
    with pytest.raises(InconsistentResponses) as err:
        annotate_llm(ARTICLE, registry.get("ArtBias"), "initial", backend)
    stored = err.value.annotation
    assert stored.answer is None
    assert stored.evidence.consistency == "inconsistent"
    assert len(stored.evidence.repetitions) == 3


def test_annotate_negtarg_records_issue(registry):
    backend = _mock(
        [{"article_id": "art-1", "criterion": "NegTarg", "version": "initial", "response": "Sì. Politica."}]
    )
    ann = annotate_llm(ARTICLE, registry.get("NegTarg"), "initial", backend)
    assert (ann.answer, ann.sub_answer) == ("Yes", "Politics")


# -- backends ---------------------------------------------------------------------

def test_mock_strict_miss():
    backend = _mock([])
    with pytest.raises(FixtureMiss):
        backend.complete(RequestContext("a", "c", "initial", 0), None)


def test_mock_default_when_not_strict():
    backend = MockBackend({"entries": [], "default": "No."}, strict=False)
    assert backend.complete(RequestContext("a", "c", "initial", 0), None) == "No."


def test_mock_content_hash_lookup(registry):
    req = build_request(ARTICLE, registry.get("LedePres"), "initial", "it")
    from hashlib import sha256

    digest = sha256(req.article_text.encode("utf-8")).hexdigest()
    backend = _mock(
        [{"content_sha256": digest, "criterion": "LedePres", "version": "initial", "response": "Sì"}]
    )
    assert backend.complete(RequestContext("whatever", "LedePres", "initial", 0), req) == "Sì"


def test_record_then_replay_reproduces_run(registry, tmp_path):
    fixture = _mock(
        [
            {"article_id": "art-1", "criterion": "LedePres", "version": "initial", "responses": ["Sì", "No", "Sì"]},
            {"article_id": "art-1", "criterion": "Type", "version": "initial", "response": "Satira"},
        ]
    )
    record_path = tmp_path / "run.jsonl"
    recorder = RecordingBackend(fixture, record_path)
    first = [
        annotate_llm(ARTICLE, registry.get("LedePres"), "initial", recorder),
        annotate_llm(ARTICLE, registry.get("Type"), "initial", recorder),
    ]
    replay = ReplayBackend(record_path)
    second = [
        annotate_llm(ARTICLE, registry.get("LedePres"), "initial", replay),
        annotate_llm(ARTICLE, registry.get("Type"), "initial", replay),
    ]
    for a, b in zip(first, second):
        assert a.answer == b.answer
        assert a.evidence.to_json() == b.evidence.to_json()


def test_replay_miss(tmp_path):
    path = tmp_path / "empty.jsonl"
    write_replay_file([], path)
    backend = ReplayBackend(path)
    with pytest.raises(FixtureMiss):
        backend.complete(RequestContext("a", "c", "initial", 0), None)


def _http_backend(handler, **config_kwargs):
    transport = httpx.MockTransport(handler)
    config = BackendConfig(
        backend_kind="http", endpoint="https://llm.example/v1/chat", max_retries=2,
        rate_limit_per_minute=0, **config_kwargs,
    )
    return HttpBackend(config, transport=transport)


def test_http_backend_payload_defaults(registry):
    captured = {}

    def handler(request):
        captured.update(json.loads(request.content))
        return httpx.Response(200, json={"choices": [{"message": {"content": "No."}}]})

    backend = _http_backend(handler)
    req = build_request(ARTICLE, registry.get("LedePres"), "initial", "it")
    out = backend.complete(RequestContext("art-1", "LedePres", "initial", 0), req)
    assert out == "No."
    assert captured["temperature"] == 0.0
    assert captured["frequency_penalty"] == 0.0
    assert captured["presence_penalty"] == 0.0
    assert "stop" not in captured
    assert "max_tokens" not in captured
    assert captured["messages"][0]["role"] == "system"
    assert "giornalista" in captured["messages"][0]["content"]


def test_http_backend_retries_then_succeeds(registry):
    calls = {"n": 0}

    def handler(request):
        calls["n"] += 1
        if calls["n"] < 3:
            return httpx.Response(503)
        return httpx.Response(200, json={"choices": [{"message": {"content": "Sì"}}]})

    backend = _http_backend(handler)
    req = build_request(ARTICLE, registry.get("LedePres"), "initial", "it")
    assert backend.complete(RequestContext("art-1", "LedePres", "initial", 0), req) == "Sì"
    assert calls["n"] == 3


def test_http_backend_gives_up_after_retries(registry):
    def handler(request):
        return httpx.Response(500)

    backend = _http_backend(handler)
    req = build_request(ARTICLE, registry.get("LedePres"), "initial", "it")
    with pytest.raises(BackendError):
        backend.complete(RequestContext("art-1", "LedePres", "initial", 0), req)


def test_http_backend_client_error_is_fatal(registry):
    def handler(request):
        return httpx.Response(401)

    backend = _http_backend(handler)
    req = build_request(ARTICLE, registry.get("LedePres"), "initial", "it")
    with pytest.raises(BackendError):
        backend.complete(RequestContext("art-1", "LedePres", "initial", 0), req)
