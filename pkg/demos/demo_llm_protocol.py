"""Walkthrough: persona prompt, triple repetition, constrained-choice parsing.

Run:  python3 demos/demo_llm_protocol.py
"""

from datetime import date, datetime, timezone

from veritas.corpus import Article
from veritas.criteria import registry_load
from veritas.errors import InconsistentResponses, ResponseUnparseable
from veritas.llm import MockBackend, annotate_llm, build_request, parse_response

registry = registry_load()
article = Article(
    id="demo-1",
    publisher_id="pub-x",
    url="https://demo.example/1",
    title="Titolo dimostrativo",
    body="[PUBLISHER] riferisce i fatti principali.\nSegue un approfondimento.",
    published_at=date(2021, 6, 1),
    fetched_at=datetime(2021, 11, 1, tzinfo=timezone.utc),
    sanitized=True,
)

print("=== 1. the assembled request (system persona + user message) ===")
request = build_request(article, registry.get("NegTarg"), "initial", "it")
print("[system]")
print(request.persona_instruction)
print("[user]")
print(request.user_message())

print()
print("=== 2. parsing free-form phrasings onto the option set ===")
schema = registry.get("HeadAcc").initial_schema()
for raw in ("Accurato", "Il titolo è piuttosto accurato.", "piuttosto inaccurato"):
    parsed = parse_response(raw, schema, "it")
    print(f"  {raw!r:45} -> {parsed.answer}")
try:
    parse_response("Non saprei dire", schema, "it")
except ResponseUnparseable as exc:
    print(f"  'Non saprei dire'                             -> error {exc.code}")

print()
print("=== 3. three repetitions reduced to one annotation ===")
backend = MockBackend({
    "entries": [
        {"article_id": "demo-1", "criterion": "SensLang", "version": "initial",
         "response": "Piuttosto neutro."},
        {"article_id": "demo-1", "criterion": "ArtBias", "version": "initial",
         "responses": ["Di parte", "Di parte", "Imparziale"]},
        {"article_id": "demo-1", "criterion": "HeadAcc", "version": "initial",
         "responses": ["Accurato", "Inaccurato", "Piuttosto accurato"]},
    ]
})
for criterion_id in ("SensLang", "ArtBias", "HeadAcc"):
    criterion = registry.get(criterion_id)
    try:
        annotation = annotate_llm(article, criterion, "initial", backend)
        print(f"  {criterion_id}: final={annotation.answer!r} "
              f"({annotation.evidence.consistency})")
    except InconsistentResponses as exc:
        print(f"  {criterion_id}: no final answer ({exc.code}); "
              f"evidence kept: {exc.annotation.evidence.repetitions}")
