"""HTTP API backing the annotation workbench.

All writes go through the same validation as the CLI paths; article text is
served only in sanitized form.  Task handout assigns each article to two of
the three human annotators, round-robin over annotator pairs in corpus order.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException, Query
from pydantic import BaseModel

from .adjudication import (
    all_disagreements,
    articles_with_any_disagreement,
    aspect_by_key,
    aspect_domain,
    record_adjudication,
    resolution_rate,
    summarize,
)
from .agreement import consensus_vs_llm
from .annotations import Annotation, AnnotationStore
from .corpus import Article
from .criteria import Registry, render_question
from .errors import (
    CaseNotFound,
    CoverageIncomplete,
    DuplicateAnnotation,
    NoConsensusCells,
    NoLlmAnswer,
    NoNonborderlineCases,
    SchemaMismatch,
    SchemaViolation,
    VersionMissing,
)


class AnnotationIn(BaseModel):
    article_id: str
    criterion: str
    annotator: str
    version: str = "initial"
    answer: str
    sub_answer: str | None = None


class AdjudicationIn(BaseModel):
    ground_truth: str | None = None
    indeterminate: bool = False
    adjudicator: str = "adjudicator"


def _article_payload(article: Article, full: bool = False) -> dict:
    payload = {
        "id": article.id,
        "publisher_id": article.publisher_id,
        "title": article.title,
        "published_at": article.published_at.isoformat() if article.published_at else None,
        "sanitized": article.sanitized,
    }
    if full:
        payload["body"] = article.body
    return payload


def create_app(store: AnnotationStore, registry: Registry, articles: list[Article]) -> FastAPI:
    app = FastAPI(title="veritas", version="0.1.0")
    unsanitized = [a.id for a in articles if not a.sanitized]
    if unsanitized:
        raise SchemaViolation(f"refusing to serve unsanitized articles: {unsanitized[:5]}")
    by_id = {a.id: a for a in articles}
    order = [a.id for a in articles]

    def _pair_for(index: int) -> tuple[str, str]:
        humans = [a.id for a in store.human_annotators()]
        if len(humans) < 2:
            raise HTTPException(status_code=409, detail="need at least two registered human annotators")
        pairs = [(i, j) for i in range(len(humans)) for j in range(i + 1, len(humans))]
        first, second = pairs[index % len(pairs)]
        return humans[first], humans[second]

    @app.get("/articles")
    def list_articles():
        return [_article_payload(a) for a in articles]

    @app.get("/articles/{article_id}")
    def get_article(article_id: str):
        article = by_id.get(article_id)
        if article is None:
            raise HTTPException(status_code=404, detail=f"unknown article {article_id}")
        return _article_payload(article, full=True)

    @app.post("/annotations", status_code=201)
    def post_annotation(payload: AnnotationIn):
        if payload.article_id not in by_id:
            raise HTTPException(status_code=404, detail=f"unknown article {payload.article_id}")
        annotation = Annotation(
            article_id=payload.article_id,
            criterion_id=payload.criterion,
            annotator_id=payload.annotator,
            prompt_version=payload.version,
            answer=payload.answer,
            sub_answer=payload.sub_answer,
        )
        try:
            stored = store.record(annotation)
        except DuplicateAnnotation as exc:
            raise HTTPException(status_code=409, detail=f"{exc.code}: {exc}")
        except (SchemaViolation, SchemaMismatch) as exc:
            raise HTTPException(status_code=400, detail=f"{exc.code}: {exc}")
        return stored.to_json()

    @app.get("/annotations")
    def list_annotations(article: str = Query(...), criterion: str = Query(...)):
        rows = []
        for version in ("initial", "refined"):
            rows.extend(a.to_json() for a in store.cell(article, criterion, version))
        return rows

    @app.get("/agreement")
    def agreement(criterion: str = Query(...), version: str = Query("initial"),
                  llm_source: str = Query("run")):
        try:
            crit = registry.get(criterion)
            report = consensus_vs_llm(store, registry, crit, version, llm_source=llm_source)
        except (SchemaMismatch,) as exc:
            raise HTTPException(status_code=404, detail=f"{exc.code}: {exc}")
        except (NoConsensusCells, VersionMissing) as exc:
            raise HTTPException(status_code=404, detail=f"{exc.code}: {exc}")
        return report.to_dict()

    @app.get("/adjudication/queue")
    def adjudication_queue():
        queue = []
        for aspect_key, aspect_cases in all_disagreements(store, registry, order).items():
            aspect = aspect_by_key(registry, aspect_key)
            domain = list(aspect_domain(aspect, registry.get(aspect.criterion_id)))
            for case in aspect_cases:
                if case.relevant and case.outcome == "unresolved":
                    payload = case.to_dict()
                    payload["article"] = _article_payload(by_id[case.article_id], full=True)
                    payload["domain"] = domain
                    queue.append(payload)
        return queue

    @app.post("/adjudication/{case_id}")
    def post_adjudication(case_id: str, payload: AdjudicationIn):
        if "::" not in case_id:
            raise HTTPException(status_code=400, detail="case_id format is <aspect>::<article_id>")
        aspect_key, article_id = case_id.split("::", 1)
        try:
            case = record_adjudication(
                store,
                registry,
                aspect_key,
                article_id,
                ground_truth=payload.ground_truth,
                indeterminate=payload.indeterminate,
                adjudicator_id=payload.adjudicator,
            )
        except CaseNotFound as exc:
            raise HTTPException(status_code=404, detail=f"{exc.code}: {exc}")
        except (NoLlmAnswer, SchemaViolation) as exc:
            raise HTTPException(status_code=400, detail=f"{exc.code}: {exc}")
        return case.to_dict()

    @app.get("/summary/table5")
    def table5():
        cases = all_disagreements(store, registry, order)
        rows = summarize(cases, registry, n_articles=len(articles))
        rates = {}
        for row in rows:
            try:
                rates[row.aspect] = resolution_rate(row)
            except NoNonborderlineCases:
                rates[row.aspect] = None
        return {
            "rows": [row.to_dict() for row in rows],
            "resolution_rates": rates,
            "articles_with_any_disagreement": articles_with_any_disagreement(cases),
        }

    @app.get("/tasks/{annotator_id}/next")
    def next_task(annotator_id: str):
        known = store.annotators().get(annotator_id)
        if known is None or known.kind != "human":
            raise HTTPException(status_code=404, detail=f"unknown human annotator {annotator_id}")
        assigned_total = 0
        done = 0
        next_cell = None
        for index, article_id in enumerate(order):
            if annotator_id not in _pair_for(index):
                continue
            for criterion in registry:
                assigned_total += 1
                answered = any(
                    a.annotator_id == annotator_id
                    for a in store.cell(article_id, criterion.id, "initial")
                )
                if answered:
                    done += 1
                elif next_cell is None:
                    next_cell = (article_id, criterion)
        if next_cell is None:
            raise HTTPException(status_code=404, detail="QUEUE_EMPTY: no unanswered cells")
        article_id, criterion = next_cell
        schema = criterion.schema["initial"]
        return {
            "article": _article_payload(by_id[article_id], full=True),
            "criterion": criterion.id,
            "version": "initial",
            "question": render_question(criterion, "initial", "it"),
            "options": [
                {"rank": o.rank, "label": o.label, "text": dict(o.text)} for o in schema.options
            ],
            "sub_options": (
                [{"rank": o.rank, "label": o.label, "text": dict(o.text)} for o in schema.sub_schema.options]
                if schema.kind == "compound"
                else None
            ),
            "progress": {"done": done, "total": assigned_total},
        }

    return app
