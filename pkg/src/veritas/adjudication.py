"""Expert disagreement detection, relevance filtering, and LLM-assisted resolution.

Negative targeting is analyzed as two aspects: detection (the Yes/No head) and
identification (the issue).  Identification cases are enumerated over articles
where at least one expert answered Yes on detection; an expert who answered No
contributes the sentinel value "No" (no issue) to the identification
comparison, so detection conflicts surface on both aspects.

Ground truth always comes from a human adjudicator (or a fixture standing in
for one); an adjudication that cannot determine a ground truth makes the case
borderline.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .annotations import AdjudicationRecord, Annotation, AnnotationStore
from .criteria import Criterion, Registry, is_relevant_disagreement
from .errors import (
    CaseNotFound,
    NoLlmAnswer,
    NoNonborderlineCases,
    SchemaMismatch,
    SchemaViolation,
)

NO_ISSUE = "No"  # identification value for "does not target anyone"

OUTCOMES = ("unresolved", "resolved_correct", "resolved_incorrect", "borderline")


@dataclass(frozen=True)
class Aspect:
    key: str
    criterion_id: str
    part: str  # "answer" | "issue"
    display: str


def aspects_for(registry: Registry) -> list[Aspect]:
    aspects = []
    for criterion in registry:
        if criterion.id == "NegTarg":
            aspects.append(Aspect("NegTarg:detection", "NegTarg", "answer", "NegTarg (Detection)"))
            aspects.append(
                Aspect("NegTarg:identification", "NegTarg", "issue", "NegTarg (Identification)")
            )
        else:
            aspects.append(Aspect(criterion.id, criterion.id, "answer", criterion.id))
    aspects.sort(key=lambda a: a.display)
    return aspects


def aspect_by_key(registry: Registry, key: str) -> Aspect:
    for aspect in aspects_for(registry):
        if aspect.key == key:
            return aspect
    raise CaseNotFound(f"unknown criterion aspect {key!r}")


def aspect_value(annotation: Annotation, aspect: Aspect) -> str | None:
    if annotation.answer is None:
        return None
    if aspect.part == "answer":
        return annotation.answer
    return annotation.sub_answer if annotation.answer == "Yes" else NO_ISSUE


def aspect_domain(aspect: Aspect, criterion: Criterion) -> tuple[str, ...]:
    schema = criterion.initial_schema()
    if aspect.part == "answer":
        return schema.labels()
    return schema.sub_schema.labels() + (NO_ISSUE,)


@dataclass(frozen=True)
class DisagreementCase:
    aspect: str
    article_id: str
    human_answers: tuple[str, str]
    relevant: bool
    llm_answer: str | None = None
    ground_truth: str | None = None
    indeterminate: bool = False
    outcome: str = "unresolved"

    @property
    def case_id(self) -> str:
        return f"{self.aspect}::{self.article_id}"

    def to_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "aspect": self.aspect,
            "article_id": self.article_id,
            "human_answers": list(self.human_answers),
            "relevant": self.relevant,
            "llm_answer": self.llm_answer,
            "ground_truth": self.ground_truth,
            "indeterminate": self.indeterminate,
            "outcome": self.outcome,
        }


@dataclass(frozen=True)
class SummaryRow:
    aspect: str
    display: str
    no_articles: int
    no_disagreements: int
    relevant_disagreements: int
    llm_correct: int
    borderline: int
    unresolved_relevant: int = 0

    def to_dict(self) -> dict:
        return {
            "aspect": self.aspect,
            "display": self.display,
            "no_articles": self.no_articles,
            "no_disagreements": self.no_disagreements,
            "relevant_disagreements": self.relevant_disagreements,
            "llm_correct": self.llm_correct,
            "borderline": self.borderline,
            "unresolved_relevant": self.unresolved_relevant,
        }


def _outcome(llm_answer: str | None, record: AdjudicationRecord | None) -> tuple[str | None, bool, str]:
    if record is None:
        return None, False, "unresolved"
    if record.indeterminate:
        return None, True, "borderline"
    if llm_answer is None:
        return record.value, False, "unresolved"
    return record.value, False, (
        "resolved_correct" if llm_answer == record.value else "resolved_incorrect"
    )


def find_disagreements(
    store: AnnotationStore,
    registry: Registry,
    aspect: Aspect | str,
    article_ids: list[str] | None = None,
) -> list[DisagreementCase]:
    """One case per article where the two experts differ on the aspect."""
    if isinstance(aspect, str):
        aspect = aspect_by_key(registry, aspect)
    criterion = registry.get(aspect.criterion_id)
    cases = []
    for article_id in article_ids if article_ids is not None else store.article_ids():
        humans = store.human_annotations(article_id, criterion.id)
        if len(humans) != 2:
            continue
        if aspect.part == "issue" and not any(h.answer == "Yes" for h in humans):
            continue
        a, b = (aspect_value(h, aspect) for h in humans)
        if a == b:
            continue
        if aspect.part == "issue":
            relevant = True  # nominal values: any difference matters
        else:
            relevant = is_relevant_disagreement(a, b, criterion)

        llm_row = store.llm_annotation(article_id, criterion.id, "initial")
        llm_answer = aspect_value(llm_row, aspect) if llm_row is not None else None
        record = store.adjudication_for(article_id, aspect.key)
        ground_truth, indeterminate, outcome = _outcome(llm_answer, record)
        cases.append(
            DisagreementCase(
                aspect=aspect.key,
                article_id=article_id,
                human_answers=(a, b),
                relevant=relevant,
                llm_answer=llm_answer,
                ground_truth=ground_truth,
                indeterminate=indeterminate,
                outcome=outcome,
            )
        )
    return cases


def find_case(store: AnnotationStore, registry: Registry, aspect_key: str, article_id: str) -> DisagreementCase:
    aspect = aspect_by_key(registry, aspect_key)
    for case in find_disagreements(store, registry, aspect):
        if case.article_id == article_id:
            return case
    raise CaseNotFound(f"no {aspect_key} disagreement for article {article_id}")


def record_adjudication(
    store: AnnotationStore,
    registry: Registry,
    aspect_key: str,
    article_id: str,
    ground_truth: str | None = None,
    indeterminate: bool = False,
    adjudicator_id: str = "adjudicator",
) -> DisagreementCase:
    """Attach ex-post ground truth (or a borderline marker) to a case.

    Raises ``CaseNotFound`` for non-cases and ``NoLlmAnswer`` when a
    determinate ground truth is supplied but the LLM never produced a final
    answer (the case stays unresolved).
    """
    case = find_case(store, registry, aspect_key, article_id)
    aspect = aspect_by_key(registry, aspect_key)
    if indeterminate:
        value = None
    else:
        domain = aspect_domain(aspect, registry.get(aspect.criterion_id))
        if ground_truth not in domain:
            raise SchemaViolation(f"ground truth {ground_truth!r} not in {domain}")
        if case.llm_answer is None:
            raise NoLlmAnswer(f"case {case.case_id} has no LLM answer to evaluate")
        value = ground_truth
    store.record_adjudication(
        AdjudicationRecord(
            article_id=article_id,
            aspect=aspect_key,
            value=value,
            indeterminate=indeterminate,
            adjudicator_id=adjudicator_id,
        )
    )
    return find_case(store, registry, aspect_key, article_id)


def centrality_check(case: DisagreementCase, criterion: Criterion) -> bool:
    """Whether the LLM answer sits centrally between the two expert answers.

    Defined for four-class criteria only: strictly between the two ranks, or
    equal to one of them when they are adjacent.
    """
    schema = criterion.initial_schema()
    if schema.kind != "ordinal4":
        raise SchemaMismatch(f"centrality is defined for four-class criteria, not {schema.kind}")
    if case.llm_answer is None:
        raise NoLlmAnswer(f"case {case.case_id} has no LLM answer")
    lo, hi = sorted(schema.rank_of(v) for v in case.human_answers)
    llm = schema.rank_of(case.llm_answer)
    if hi - lo == 1:
        return llm in (lo, hi)
    return lo < llm < hi


def summarize(
    cases_by_aspect: dict[str, list[DisagreementCase]],
    registry: Registry,
    n_articles: int,
) -> list[SummaryRow]:
    """Per-aspect statistics; correctness counted over relevant cases only."""
    rows = []
    for aspect in aspects_for(registry):
        cases = cases_by_aspect.get(aspect.key, [])
        relevant = [c for c in cases if c.relevant]
        rows.append(
            SummaryRow(
                aspect=aspect.key,
                display=aspect.display,
                no_articles=n_articles,
                no_disagreements=len(cases),
                relevant_disagreements=len(relevant),
                llm_correct=sum(1 for c in relevant if c.outcome == "resolved_correct"),
                borderline=sum(1 for c in relevant if c.outcome == "borderline"),
                unresolved_relevant=sum(1 for c in relevant if c.outcome == "unresolved"),
            )
        )
    return rows


def resolution_rate(row: SummaryRow) -> float:
    """Fraction of non-borderline relevant cases the LLM resolved correctly."""
    denominator = row.relevant_disagreements - row.borderline
    if denominator <= 0:
        raise NoNonborderlineCases(f"{row.aspect}: no non-borderline relevant cases")
    return row.llm_correct / denominator


def articles_with_any_disagreement(cases_by_aspect: dict[str, list[DisagreementCase]]) -> int:
    return len({c.article_id for cases in cases_by_aspect.values() for c in cases})


def all_disagreements(
    store: AnnotationStore, registry: Registry, article_ids: list[str] | None = None
) -> dict[str, list[DisagreementCase]]:
    return {
        aspect.key: find_disagreements(store, registry, aspect, article_ids)
        for aspect in aspects_for(registry)
    }


def render_table5(rows: list[SummaryRow], rates: dict[str, float | None] | None = None) -> str:
    header = (
        f"{'criterion':<28} {'articles':>9} {'disagreements':>14} "
        f"{'relevant':>9} {'llm_correct':>12} {'borderline':>11}"
    )
    lines = [header, "-" * len(header)]
    for row in rows:
        lines.append(
            f"{row.display:<28} {row.no_articles:>9} {row.no_disagreements:>14} "
            f"{row.relevant_disagreements:>9} {row.llm_correct:>12} {row.borderline:>11}"
        )
    if rates:
        lines.append("")
        for aspect, rate in rates.items():
            shown = f"{rate:.0%}" if rate is not None else "n/a"
            lines.append(f"resolution rate {aspect:<28} {shown}")
    return "\n".join(lines)
