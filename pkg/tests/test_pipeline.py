import json

from pipeline_helpers import write_human_csv, mock_fixture_doc, write_raw_corpus
from veritas.annotations import AnnotationStore, Annotator
from veritas.corpus import RedactionConfig, sanitize
from veritas.llm import MockBackend
from veritas.pipeline import AnnotateResult, deterministic_clock, run_annotate, run_report
from pipeline_helpers import REDACTIONS


def _sanitized_articles(tmp_path, n_publishers=1, per_publisher=4):
    raw = write_raw_corpus(tmp_path / "raw.jsonl", n_publishers, per_publisher)
    config = RedactionConfig.from_json(REDACTIONS)
    return [sanitize(a, config) for a in raw]


def _store(tmp_path, registry):
    store = AnnotationStore(tmp_path / "store", registry, clock=deterministic_clock())
    store.register_annotator(Annotator(id="h1", kind="human"))
    store.register_annotator(Annotator(id="h2", kind="human"))
    return store


def test_run_annotate_writes_and_skips(tmp_path, registry):
    articles = _sanitized_articles(tmp_path)
    store = _store(tmp_path, registry)
    backend = MockBackend(mock_fixture_doc(articles, registry))
    first = run_annotate(store, registry, articles, backend)
    assert first.cells_written == len(articles) * 6
    assert first.failures == []

    second = run_annotate(store, registry, articles, backend)
    assert second.cells_written == 0
    assert second.cells_skipped == len(articles) * 6


def test_run_annotate_ledgers_inconsistent_cells(tmp_path, registry):
    articles = _sanitized_articles(tmp_path, per_publisher=1)
    store = _store(tmp_path, registry)
    doc = mock_fixture_doc(articles, registry)
    for entry in doc["entries"]:
        if entry["criterion"] == "ArtBias":
            entry.pop("response", None)
            entry["responses"] = ["Di parte", "Piuttosto di parte", "Imparziale"]
    result = run_annotate(store, registry, articles, MockBackend(doc))
    assert [f["error"] for f in result.failures] == ["INCONSISTENT_RESPONSES"]
    evidence_row = store.llm_annotation(articles[0].id, "ArtBias", "initial")
    assert evidence_row.answer is None
    assert evidence_row.evidence.consistency == "inconsistent"
    # the evidence-only row does not count as llm coverage
    report = store.validate_coverage([articles[0].id], registry)
    flagged = {v["criterion_id"] for v in report.violations}
    assert "ArtBias" in flagged


def test_run_annotate_continues_past_backend_failures(tmp_path, registry):
    articles = _sanitized_articles(tmp_path, per_publisher=2)
    store = _store(tmp_path, registry)
    doc = mock_fixture_doc(articles[:1], registry)  # second article uncovered
    result = run_annotate(store, registry, articles, MockBackend(doc))
    assert result.cells_written == 6
    assert len(result.failures) == 6
    assert {f["error"] for f in result.failures} == {"FIXTURE_MISS"}
    assert {f["article_id"] for f in result.failures} == {articles[1].id}


def test_run_report_over_incomplete_store_still_writes(tmp_path, registry):
    articles = _sanitized_articles(tmp_path, per_publisher=2)
    store = _store(tmp_path, registry)
    run_annotate(store, registry, articles, MockBackend(mock_fixture_doc(articles, registry)))
    out = tmp_path / "reports"
    payload = run_report(store, registry, articles, out)
    assert payload["coverage"]["violations"]  # no human annotations anywhere
    assert (out / "agreement.json").exists()
    assert (out / "table5.json").exists()
    agreement = json.loads((out / "agreement.json").read_text())
    assert agreement["HeadAcc"]["initial"].get("error") == "NO_CONSENSUS_CELLS"


def test_run_report_full_payload(tmp_path, registry):
    articles = _sanitized_articles(tmp_path, per_publisher=4)
    store = _store(tmp_path, registry)
    humans = tmp_path / "humans.csv"
    write_human_csv(humans, articles, registry)
    store.import_table(humans)
    run_annotate(
        store, registry, articles,
        MockBackend(mock_fixture_doc(articles, registry, versions=("initial", "refined"))),
        versions=("initial", "refined"),
    )
    payload = run_report(store, registry, articles, tmp_path / "reports")
    assert payload["coverage"]["total"] == len(articles) * 6 * 3  # refined LLM rows not counted
    for criterion_id in registry.ids():
        initial = payload["agreement"][criterion_id]["initial"]
        assert "kappa" in initial or "error" in initial
    assert "ArtBias" in payload["refinement"]
    art_bias = payload["refinement"]["ArtBias"]
    if "delta" in art_bias:
        assert abs(art_bias["delta"] - (art_bias["refined_kappa"] - art_bias["initial_kappa"])) < 1e-12
    rows = {r["aspect"]: r for r in payload["table5"]["rows"]}
    assert rows["SensLang"]["no_disagreements"] == len(articles) // 2


def test_run_annotate_unreachable_backend_ledgers_every_cell(tmp_path, registry):
    import httpx

    from veritas.llm import BackendConfig, HttpBackend

    articles = _sanitized_articles(tmp_path, per_publisher=2)
    store = _store(tmp_path, registry)

    def handler(request):
        raise httpx.ConnectError("connection refused")

    backend = HttpBackend(
        BackendConfig(backend_kind="http", endpoint="https://down.example/v1",
                      max_retries=0, rate_limit_per_minute=0),
        transport=httpx.MockTransport(handler),
    )
    result = run_annotate(store, registry, articles, backend)
    assert result.cells_written == 0
    assert len(result.failures) == len(articles) * 6
    assert {f["error"] for f in result.failures} == {"BACKEND_ERROR"}
