"""End-to-end run orchestration: annotate loops, report emission, manifests."""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

from . import __version__
from .adjudication import (
    all_disagreements,
    articles_with_any_disagreement,
    render_table5,
    resolution_rate,
    summarize,
)
from .agreement import consensus_vs_llm, refinement_gain, render_confusion, render_report_table
from .annotations import AnnotationStore, Annotator
from .corpus import Article
from .criteria import Registry
from .errors import (
    InconsistentResponses,
    NoConsensusCells,
    NoNonborderlineCases,
    VeritasError,
    VersionMissing,
)
from .llm import Backend, annotate_llm


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True, default=str).encode("utf-8")).hexdigest()


@dataclass
class RunManifest:
    config_hash: str
    tool_version: str = __version__
    started_at: str = ""
    finished_at: str = ""
    stages: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "tool_version": self.tool_version,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "stages": self.stages,
        }

    def write(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", "utf-8")


@dataclass
class AnnotateResult:
    cells_written: int = 0
    cells_skipped: int = 0
    failures: list = field(default_factory=list)


def deterministic_clock(start: datetime | None = None):
    """Counter-based clock so replay/mock runs produce identical journals."""
    base = start or datetime(2024, 1, 1, tzinfo=timezone.utc)
    counter = itertools.count()

    def clock() -> datetime:
        return base + timedelta(seconds=next(counter))

    return clock


def run_annotate(
    store: AnnotationStore,
    registry: Registry,
    articles: list[Article],
    backend: Backend,
    versions: tuple[str, ...] = ("initial",),
    language: str = "it",
    annotator_id: str = "llm",
    model_label: str = "llm",
    skip_existing: bool = True,
) -> AnnotateResult:
    """Annotate every (article, criterion, version) cell with the backend.

    Individual failures are collected in the per-cell ledger and do not stop
    the run; inconsistent-repetition cells are stored (evidence only) and also
    ledgered.
    """
    store.register_annotator(Annotator(id=annotator_id, kind="llm", label=model_label))
    result = AnnotateResult()
    for article in articles:
        for criterion in registry:
            for version in versions:
                if skip_existing and any(
                    a.annotator_id == annotator_id
                    for a in store.cell(article.id, criterion.id, version)
                ):
                    result.cells_skipped += 1
                    continue
                try:
                    annotation = annotate_llm(
                        article, criterion, version, backend,
                        language=language, annotator_id=annotator_id,
                    )
                    store.record(annotation)
                    result.cells_written += 1
                except InconsistentResponses as exc:
                    if exc.annotation is not None:
                        store.record(exc.annotation)
                    result.failures.append(
                        {
                            "article_id": article.id,
                            "criterion_id": criterion.id,
                            "version": version,
                            "error": exc.code,
                            "detail": str(exc),
                        }
                    )
                except VeritasError as exc:
                    result.failures.append(
                        {
                            "article_id": article.id,
                            "criterion_id": criterion.id,
                            "version": version,
                            "error": exc.code,
                            "detail": str(exc),
                        }
                    )
    return result


def _dump_json(payload, path: Path) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n", "utf-8")


def run_report(
    store: AnnotationStore,
    registry: Registry,
    articles: list[Article],
    out_dir: str | Path,
    llm_source: str = "run",
) -> dict:
    """Emit agreement, refinement, confusion, coverage, and summary documents.

    Coverage violations are listed, not fatal; reports cover the valid cells.
    Returns the document payloads keyed by name; files land in ``out_dir`` as
    both JSON and fixed-width text.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    article_ids = [a.id for a in articles]

    coverage = store.validate_coverage(article_ids, registry, version="initial")
    _dump_json(coverage.to_dict(), out / "coverage.json")

    agreement_doc: dict = {}
    text_blocks = []
    for version in ("initial", "refined"):
        table_rows = {}
        for criterion in registry:
            entry = agreement_doc.setdefault(criterion.id, {})
            try:
                report = consensus_vs_llm(store, registry, criterion, version, llm_source=llm_source)
                entry[version] = report.to_dict()
                table_rows[criterion.id] = report
            except (NoConsensusCells, VersionMissing, VeritasError) as exc:
                entry[version] = {"error": exc.code, "detail": str(exc)}
        if table_rows:
            text_blocks.append(f"== consensus-conditional agreement ({version} prompts) ==")
            text_blocks.append(render_report_table(table_rows))
            for name, report in table_rows.items():
                text_blocks.append(f"\n-- confusion: {name} ({version}) --")
                text_blocks.append(render_confusion(report.confusion))
            text_blocks.append("")
    _dump_json(agreement_doc, out / "agreement.json")
    (out / "agreement.txt").write_text("\n".join(text_blocks) + "\n", "utf-8")

    refinement_doc: dict = {}
    for criterion in registry:
        try:
            initial, refined, delta = refinement_gain(store, registry, criterion, llm_source=llm_source)
            refinement_doc[criterion.id] = {
                "initial_kappa": initial.kappa,
                "refined_kappa": refined.kappa,
                "delta": delta,
                "initial_n": initial.n,
                "refined_n": refined.n,
            }
        except (VersionMissing, NoConsensusCells) as exc:
            refinement_doc[criterion.id] = {"error": exc.code, "detail": str(exc)}
    _dump_json(refinement_doc, out / "refinement.json")

    cases = all_disagreements(store, registry, article_ids)
    rows = summarize(cases, registry, n_articles=len(article_ids))
    rates: dict[str, float | None] = {}
    for row in rows:
        try:
            rates[row.aspect] = resolution_rate(row)
        except NoNonborderlineCases:
            rates[row.aspect] = None
    table5 = {
        "rows": [row.to_dict() for row in rows],
        "resolution_rates": rates,
        "articles_with_any_disagreement": articles_with_any_disagreement(cases),
    }
    _dump_json(table5, out / "table5.json")
    (out / "table5.txt").write_text(render_table5(rows, rates) + "\n", "utf-8")

    return {
        "coverage": coverage.to_dict(),
        "agreement": agreement_doc,
        "refinement": refinement_doc,
        "table5": table5,
        "paths": {
            name: str(out / name)
            for name in ("coverage.json", "agreement.json", "agreement.txt",
                         "refinement.json", "table5.json", "table5.txt")
        },
    }
