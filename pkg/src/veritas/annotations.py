"""Append-only store for human, LLM, and adjudicator records.

Two JSON Lines journals under one directory: ``annotations.jsonl`` (human and
LLM answers, with repetition evidence for LLM rows) and ``adjudications.jsonl``
(ex-post ground truth per disagreement aspect, including indeterminate
outcomes).  An in-memory index is rebuilt on load; the dataset is small and
auditability beats query speed.

Binary (remapped) views of four-class answers are computed on read by the
criteria module and never stored.
"""

from __future__ import annotations

import csv
import json
import threading
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable

from .criteria import Registry, VERSIONS
from .errors import (
    CoverageIncomplete,
    DuplicateAnnotation,
    RowInvalid,
    SchemaViolation,
)

ANNOTATOR_KINDS = ("human", "llm", "adjudicator")
CSV_HEADER = ["article_id", "criterion", "annotator", "version", "answer", "sub_answer"]


@dataclass(frozen=True)
class Annotator:
    id: str
    kind: str
    label: str = ""

    def __post_init__(self):
        if self.kind not in ANNOTATOR_KINDS:
            raise SchemaViolation(f"unknown annotator kind {self.kind!r}")


@dataclass(frozen=True)
class LlmAnnotationEvidence:
    """The three raw responses behind one LLM annotation."""

    repetitions: tuple[str, str, str]
    parsed: tuple[dict, ...]  # {"answer":..,"sub_answer":..} or {"error": code}
    consistency: str  # unanimous | majority | inconsistent
    final: dict | None  # {"answer":..,"sub_answer":..}; absent when inconsistent

    def to_json(self) -> dict:
        return {
            "repetitions": list(self.repetitions),
            "parsed": [dict(p) for p in self.parsed],
            "consistency": self.consistency,
            "final": dict(self.final) if self.final else None,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "LlmAnnotationEvidence":
        return cls(
            repetitions=tuple(doc["repetitions"]),
            parsed=tuple(doc["parsed"]),
            consistency=doc["consistency"],
            final=doc.get("final"),
        )


@dataclass(frozen=True)
class Annotation:
    article_id: str
    criterion_id: str
    annotator_id: str
    prompt_version: str
    answer: str | None  # None only for LLM rows with inconsistent repetitions
    sub_answer: str | None = None
    evidence: LlmAnnotationEvidence | None = None
    created_at: datetime | None = None

    @property
    def key(self) -> tuple[str, str, str, str]:
        return (self.article_id, self.criterion_id, self.annotator_id, self.prompt_version)

    def to_json(self) -> dict:
        return {
            "article_id": self.article_id,
            "criterion_id": self.criterion_id,
            "annotator_id": self.annotator_id,
            "prompt_version": self.prompt_version,
            "answer": self.answer,
            "sub_answer": self.sub_answer,
            "evidence": self.evidence.to_json() if self.evidence else None,
            "created_at": self.created_at.isoformat() if self.created_at else None,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Annotation":
        return cls(
            article_id=doc["article_id"],
            criterion_id=doc["criterion_id"],
            annotator_id=doc["annotator_id"],
            prompt_version=doc["prompt_version"],
            answer=doc.get("answer"),
            sub_answer=doc.get("sub_answer"),
            evidence=LlmAnnotationEvidence.from_json(doc["evidence"]) if doc.get("evidence") else None,
            created_at=datetime.fromisoformat(doc["created_at"]) if doc.get("created_at") else None,
        )


@dataclass(frozen=True)
class AdjudicationRecord:
    """Ex-post ground truth for one (article, aspect); value None = indeterminate."""

    article_id: str
    aspect: str
    value: str | None
    indeterminate: bool
    adjudicator_id: str
    created_at: datetime | None = None

    def to_json(self) -> dict:
        return {
            "article_id": self.article_id,
            "aspect": self.aspect,
            "value": self.value,
            "indeterminate": self.indeterminate,
            "adjudicator_id": self.adjudicator_id,
            "created_at": self.created_at.isoformat() if self.created_at else None,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "AdjudicationRecord":
        return cls(
            article_id=doc["article_id"],
            aspect=doc["aspect"],
            value=doc.get("value"),
            indeterminate=bool(doc.get("indeterminate", False)),
            adjudicator_id=doc["adjudicator_id"],
            created_at=datetime.fromisoformat(doc["created_at"]) if doc.get("created_at") else None,
        )


@dataclass(frozen=True)
class Disagreement:
    """Marker returned by consensus() when the two experts differ."""

    labels: tuple[str, str]


@dataclass
class CoverageReport:
    articles: int
    criteria: int
    human_per_cell: int = 2
    llm_per_cell: int = 1
    total: int = 0
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "articles": self.articles,
            "criteria": self.criteria,
            "human_per_cell": self.human_per_cell,
            "llm_per_cell": self.llm_per_cell,
            "total": self.total,
            "violations": self.violations,
        }


def _utc_now() -> datetime:
    return datetime.now(timezone.utc)


class AnnotationStore:
    """Single-writer journal-backed store with an in-memory index."""

    def __init__(self, root: str | Path, registry: Registry, clock: Callable[[], datetime] | None = None):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.registry = registry
        self.clock = clock or _utc_now
        self._write_lock = threading.Lock()

        self._annotators: dict[str, Annotator] = {}
        self._by_key: dict[tuple, Annotation] = {}
        self._by_cell: dict[tuple, list[Annotation]] = {}
        self._adjudications: dict[tuple, AdjudicationRecord] = {}
        self._load()

    # -- paths ----------------------------------------------------------
    @property
    def annotations_path(self) -> Path:
        return self.root / "annotations.jsonl"

    @property
    def adjudications_path(self) -> Path:
        return self.root / "adjudications.jsonl"

    @property
    def annotators_path(self) -> Path:
        return self.root / "annotators.json"

    def _load(self) -> None:
        if self.annotators_path.exists():
            doc = json.loads(self.annotators_path.read_text("utf-8"))
            for entry in doc:
                ann = Annotator(**entry)
                self._annotators[ann.id] = ann
        if self.annotations_path.exists():
            with open(self.annotations_path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        self._index(Annotation.from_json(json.loads(line)))
        if self.adjudications_path.exists():
            with open(self.adjudications_path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        rec = AdjudicationRecord.from_json(json.loads(line))
                        # append-only supersession: the latest row wins
                        self._adjudications[(rec.article_id, rec.aspect)] = rec

    # -- annotators ------------------------------------------------------
    def register_annotator(self, annotator: Annotator) -> None:
        existing = self._annotators.get(annotator.id)
        if existing is not None:
            if existing.kind != annotator.kind:
                raise SchemaViolation(f"annotator {annotator.id} already registered as {existing.kind}")
            return
        self._annotators[annotator.id] = annotator
        with self._write_lock:
            doc = [vars(a) for a in sorted(self._annotators.values(), key=lambda a: a.id)]
            self.annotators_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", "utf-8")

    def annotators(self) -> dict[str, Annotator]:
        return dict(self._annotators)

    def human_annotators(self) -> list[Annotator]:
        return sorted((a for a in self._annotators.values() if a.kind == "human"), key=lambda a: a.id)

    # -- validation ------------------------------------------------------
    def _validate(self, annotation: Annotation) -> None:
        ann = self._annotators.get(annotation.annotator_id)
        if ann is None:
            raise SchemaViolation(f"unknown annotator {annotation.annotator_id!r}")
        if ann.kind == "adjudicator":
            raise SchemaViolation("adjudicator ground truth goes to the adjudication journal")
        if annotation.prompt_version not in VERSIONS:
            raise SchemaViolation(f"unknown prompt version {annotation.prompt_version!r}")
        criterion = self.registry.get(annotation.criterion_id)
        schema = criterion.schema[annotation.prompt_version]

        if annotation.answer is None:
            inconsistent = (
                annotation.evidence is not None and annotation.evidence.consistency == "inconsistent"
            )
            if not (ann.kind == "llm" and inconsistent):
                raise SchemaViolation("answer may be absent only for inconsistent LLM evidence")
            return
        if not schema.has_label(annotation.answer):
            raise SchemaViolation(
                f"{annotation.answer!r} is not a valid {annotation.criterion_id} "
                f"({annotation.prompt_version}) answer"
            )
        if criterion.id == "NegTarg" and annotation.answer == "Yes":
            if not annotation.sub_answer:
                raise SchemaViolation("NegTarg answer Yes requires the issue sub-answer")
            if not schema.sub_schema.has_label(annotation.sub_answer):
                raise SchemaViolation(f"unknown NegTarg issue {annotation.sub_answer!r}")
        elif annotation.sub_answer is not None:
            raise SchemaViolation("sub_answer is only valid for NegTarg answer Yes")

    # -- writes ----------------------------------------------------------
    def record(self, annotation: Annotation) -> Annotation:
        """Validate and durably append one annotation; duplicates are rejected."""
        self._validate(annotation)
        if annotation.key in self._by_key:
            raise DuplicateAnnotation(f"annotation for {annotation.key} already stored")
        if annotation.created_at is None:
            annotation = replace(annotation, created_at=self.clock())
        with self._write_lock:
            with open(self.annotations_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(annotation.to_json(), ensure_ascii=False, sort_keys=True) + "\n")
            self._index(annotation)
        return annotation

    def record_many(self, annotations: Iterable[Annotation]) -> list[Annotation]:
        """All-or-nothing append of a pre-validated batch."""
        batch = list(annotations)
        seen = set()
        for a in batch:
            self._validate(a)
            if a.key in self._by_key or a.key in seen:
                raise DuplicateAnnotation(f"annotation for {a.key} already stored")
            seen.add(a.key)
        stamped = [
            a if a.created_at is not None else replace(a, created_at=self.clock()) for a in batch
        ]
        with self._write_lock:
            with open(self.annotations_path, "a", encoding="utf-8") as fh:
                for a in stamped:
                    fh.write(json.dumps(a.to_json(), ensure_ascii=False, sort_keys=True) + "\n")
            for a in stamped:
                self._index(a)
        return stamped

    def _index(self, annotation: Annotation) -> None:
        self._by_key[annotation.key] = annotation
        cell = (annotation.article_id, annotation.criterion_id, annotation.prompt_version)
        self._by_cell.setdefault(cell, []).append(annotation)

    def record_adjudication(self, record: AdjudicationRecord) -> AdjudicationRecord:
        if record.indeterminate != (record.value is None):
            raise SchemaViolation("adjudication value must be absent exactly when indeterminate")
        ann = self._annotators.get(record.adjudicator_id)
        if ann is None or ann.kind != "adjudicator":
            raise SchemaViolation(f"{record.adjudicator_id!r} is not a registered adjudicator")
        if record.created_at is None:
            record = replace(record, created_at=self.clock())
        with self._write_lock:
            with open(self.adjudications_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record.to_json(), ensure_ascii=False, sort_keys=True) + "\n")
            self._adjudications[(record.article_id, record.aspect)] = record
        return record

    # -- reads -----------------------------------------------------------
    def __len__(self) -> int:
        return len(self._by_key)

    def iter_annotations(self) -> list[Annotation]:
        return list(self._by_key.values())

    def article_ids(self) -> list[str]:
        return sorted({a.article_id for a in self._by_key.values()})

    def cell(self, article_id: str, criterion_id: str, version: str = "initial") -> list[Annotation]:
        return list(self._by_cell.get((article_id, criterion_id, version), []))

    def human_annotations(self, article_id: str, criterion_id: str, version: str = "initial") -> list[Annotation]:
        rows = [
            a
            for a in self.cell(article_id, criterion_id, version)
            if self._annotators[a.annotator_id].kind == "human"
        ]
        rows.sort(key=lambda a: a.annotator_id)
        return rows

    def human_answers(self, article_id: str, criterion_id: str, version: str = "initial") -> list[str]:
        return [a.answer for a in self.human_annotations(article_id, criterion_id, version)]

    def llm_annotation(self, article_id: str, criterion_id: str, version: str) -> Annotation | None:
        rows = [
            a
            for a in self.cell(article_id, criterion_id, version)
            if self._annotators[a.annotator_id].kind == "llm"
        ]
        rows.sort(key=lambda a: a.annotator_id)
        return rows[0] if rows else None

    def has_llm_annotations(self, criterion_id: str, version: str) -> bool:
        return any(
            a.criterion_id == criterion_id
            and a.prompt_version == version
            and self._annotators[a.annotator_id].kind == "llm"
            for a in self._by_key.values()
        )

    def adjudication_for(self, article_id: str, aspect: str) -> AdjudicationRecord | None:
        return self._adjudications.get((article_id, aspect))

    def consensus(self, article_id: str, criterion_id: str) -> str | Disagreement:
        """The experts' shared label, or a marker carrying both when they differ."""
        answers = self.human_answers(article_id, criterion_id, "initial")
        if len(answers) != 2:
            raise CoverageIncomplete(
                f"cell ({article_id}, {criterion_id}) has {len(answers)} human annotations, expected 2"
            )
        a, b = answers
        if a == b:
            return a
        return Disagreement(labels=(a, b))

    # -- coverage ----------------------------------------------------------
    def validate_coverage(
        self, article_ids: Iterable[str], registry: Registry | None = None, version: str = "initial"
    ) -> CoverageReport:
        """Check the two-experts-plus-one-LLM design over every cell.

        Violations are data, not failures: deficient and excess cells are
        listed and the report is still produced.
        """
        registry = registry or self.registry
        article_ids = list(article_ids)
        criterion_ids = registry.ids()
        report = CoverageReport(articles=len(article_ids), criteria=len(criterion_ids))
        total = 0
        for article_id in article_ids:
            for criterion_id in criterion_ids:
                rows = self.cell(article_id, criterion_id, version)
                humans = {
                    a.annotator_id for a in rows if self._annotators[a.annotator_id].kind == "human"
                }
                llms = [
                    a
                    for a in rows
                    if self._annotators[a.annotator_id].kind == "llm" and a.answer is not None
                ]
                total += len(rows)
                if len(humans) != 2 or len(llms) != 1:
                    report.violations.append(
                        {
                            "article_id": article_id,
                            "criterion_id": criterion_id,
                            "human_annotators": len(humans),
                            "llm_annotations": len(llms),
                        }
                    )
        report.total = total
        return report

    # -- tabular import/export ----------------------------------------------
    def import_table(self, path: str | Path, annotator_map: dict[str, str] | None = None) -> list[Annotation]:
        """Parse, validate, and record a CSV of annotations atomically.

        Raises ``RowInvalid`` (with row number and cause) on the first bad row;
        nothing is recorded in that case.
        """
        annotator_map = annotator_map or {}
        batch: list[Annotation] = []
        seen: set[tuple] = set()
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != CSV_HEADER:
                raise RowInvalid(f"header must be {','.join(CSV_HEADER)}", row=1, cause="BAD_HEADER")
            for number, row in enumerate(reader, start=2):
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != len(CSV_HEADER):
                    raise RowInvalid(f"row {number}: expected {len(CSV_HEADER)} columns", row=number, cause="BAD_SHAPE")
                article_id, criterion, annotator, version, answer, sub_answer = (c.strip() for c in row)
                annotation = Annotation(
                    article_id=article_id,
                    criterion_id=criterion,
                    annotator_id=annotator_map.get(annotator, annotator),
                    prompt_version=version,
                    answer=answer,
                    sub_answer=sub_answer or None,
                )
                try:
                    self._validate(annotation)
                except SchemaViolation as exc:
                    raise RowInvalid(f"row {number}: {exc}", row=number, cause="SCHEMA_VIOLATION")
                if annotation.key in self._by_key or annotation.key in seen:
                    raise RowInvalid(f"row {number}: duplicate annotation", row=number, cause="DUPLICATE")
                seen.add(annotation.key)
                batch.append(annotation)
        return self.record_many(batch)

    def export_csv(self, path: str | Path) -> int:
        rows = sorted(self._by_key.values(), key=lambda a: a.key)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            count = 0
            for a in rows:
                if a.answer is None:
                    continue  # evidence-only rows are not tabular data
                writer.writerow(
                    [a.article_id, a.criterion_id, a.annotator_id, a.prompt_version, a.answer, a.sub_answer or ""]
                )
                count += 1
        return count
