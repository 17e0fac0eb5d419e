"""Command-line interface.

Exit codes: 0 success, 1 usage/configuration error, 2 completed with
per-cell failures (partial results were written).
"""

from __future__ import annotations

import json
import os
import sys
from datetime import date, datetime, timezone
from pathlib import Path

import click

from . import __version__
from .adjudication import all_disagreements
from .annotations import AnnotationStore
from .corpus import (
    RedactionConfig,
    SamplingSpec,
    load_corpus,
    load_publisher_registry,
    sample_corpus,
    sanitize,
    save_corpus,
)
from .criteria import registry_load
from .errors import VeritasError
from .fetcher import fetch_corpus
from .llm import BackendConfig, make_backend
from .pipeline import (
    RunManifest,
    config_hash,
    deterministic_clock,
    run_annotate,
    run_report,
    sha256_file,
)

_STORE_DIR_ENV = "VERITAS_STORE_DIR"


def _store_dir_option():
    return click.option(
        "--store-dir",
        default=lambda: os.environ.get(_STORE_DIR_ENV),
        required=False,
        help=f"annotation store directory (default: ${_STORE_DIR_ENV})",
    )


def _open_store(store_dir: str | None, criteria: str | None, deterministic: bool = False) -> AnnotationStore:
    if not store_dir:
        raise click.UsageError(f"--store-dir or ${_STORE_DIR_ENV} is required")
    registry = registry_load(criteria)
    clock = deterministic_clock() if deterministic else None
    return AnnotationStore(store_dir, registry, clock=clock)


@click.group()
@click.version_option(version=__version__)
def cli():
    """Reliability-criteria evaluation pipeline."""


@cli.group()
def corpus():
    """Corpus building: fetch, sanitize, sample."""


@corpus.command("fetch")
@click.option("--rules", required=True, type=click.Path(exists=True), help="publisher registry JSON")
@click.option("--out", required=True, type=click.Path(), help="output corpus (JSON Lines)")
@click.option("--user-agent", default=None)
@click.option("--delay", default=1.0, show_default=True, help="per-host politeness delay, seconds")
@click.option("--concurrency", default=4, show_default=True)
def corpus_fetch(rules, out, user_agent, delay, concurrency):
    _, extraction_rules, urls = load_publisher_registry(rules)
    kwargs = {"per_host_delay": delay, "concurrency": concurrency}
    if user_agent:
        kwargs["user_agent"] = user_agent
    result = fetch_corpus(extraction_rules, urls, **kwargs)
    save_corpus(result.articles, out)
    click.echo(f"fetched {len(result.articles)} articles, {len(result.failures)} failures")
    if result.failures:
        ledger = Path(out).with_suffix(".failures.json")
        ledger.write_text(
            json.dumps([vars(f) for f in result.failures], indent=2, sort_keys=True) + "\n", "utf-8"
        )
        click.echo(f"failure ledger: {ledger}")
        raise SystemExit(2)


@corpus.command("sanitize")
@click.option("--redactions", required=True, type=click.Path(exists=True))
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
def corpus_sanitize(redactions, in_path, out):
    config = RedactionConfig.from_json(json.loads(Path(redactions).read_text("utf-8")))
    articles = [sanitize(a, config) for a in load_corpus(in_path)]
    save_corpus(articles, out)
    click.echo(f"sanitized {len(articles)} articles -> {out}")


@corpus.command("sample")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--per-publisher", required=True, type=int)
@click.option("--from", "window_start", required=True, type=click.DateTime(["%Y-%m-%d"]))
@click.option("--to", "window_end", required=True, type=click.DateTime(["%Y-%m-%d"]))
@click.option("--seed", default=0, show_default=True, type=int)
def corpus_sample(in_path, out, per_publisher, window_start, window_end, seed):
    spec = SamplingSpec(
        per_publisher=per_publisher,
        window_start=window_start.date(),
        window_end=window_end.date(),
    )
    sampled = sample_corpus(load_corpus(in_path), spec, seed=seed)
    save_corpus(sampled, out)
    click.echo(f"sampled {len(sampled)} articles -> {out}")


@cli.command("annotate")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--criteria", default=None, type=click.Path(exists=True))
@_store_dir_option()
@click.option("--backend", "backend_kind", type=click.Choice(["http", "mock", "replay"]), default="http")
@click.option("--fixture", default=None, type=click.Path(exists=True), help="mock/replay fixture file")
@click.option("--record", default=None, type=click.Path(), help="record responses to a replay file")
@click.option("--version", "versions", type=click.Choice(["initial", "refined", "both"]), default="initial")
@click.option("--language", default="it", show_default=True)
@click.option("--annotator", default="llm", show_default=True)
@click.option("--model", default="gpt-4o", show_default=True)
@click.option("--out", "out_dir", default=None, type=click.Path(), help="manifest/failure ledger directory")
def annotate(corpus_path, criteria, store_dir, backend_kind, fixture, record,
             versions, language, annotator, model, out_dir):
    """Run the LLM over every (article, criterion) cell."""
    articles = load_corpus(corpus_path)
    not_sanitized = [a.id for a in articles if not a.sanitized]
    if not_sanitized:
        raise click.UsageError(f"corpus has unsanitized articles (first: {not_sanitized[:3]})")
    deterministic = backend_kind in ("mock", "replay")
    store = _open_store(store_dir, criteria, deterministic=deterministic)
    backend_config = BackendConfig(backend_kind=backend_kind, model_id=model)
    backend = make_backend(backend_config, fixture_path=fixture)
    if record:
        from .llm import RecordingBackend

        backend = RecordingBackend(backend, record)

    started = datetime.now(timezone.utc).isoformat()
    version_tuple = ("initial", "refined") if versions == "both" else (versions,)
    result = run_annotate(
        store, store.registry, articles, backend,
        versions=version_tuple, language=language,
        annotator_id=annotator, model_label=model,
    )
    click.echo(
        f"annotated {result.cells_written} cells "
        f"({result.cells_skipped} already present, {len(result.failures)} failures)"
    )
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        manifest = RunManifest(
            config_hash=config_hash(
                {
                    "corpus": sha256_file(corpus_path),
                    "criteria": sha256_file(criteria) if criteria else "default",
                    "fixture": sha256_file(fixture) if fixture else None,
                    "backend": backend_kind,
                    "versions": versions,
                    "language": language,
                    "annotator": annotator,
                }
            ),
            started_at=started,
            finished_at=datetime.now(timezone.utc).isoformat(),
            stages={
                "corpus": sha256_file(corpus_path),
                "annotations": sha256_file(store.annotations_path),
            },
        )
        manifest.write(out / "manifest-annotate.json")
        (out / "failures.json").write_text(
            json.dumps(result.failures, indent=2, sort_keys=True) + "\n", "utf-8"
        )
    if result.failures:
        raise SystemExit(2)


@cli.command("import-human")
@click.argument("csv_path", type=click.Path(exists=True))
@click.option("--criteria", default=None, type=click.Path(exists=True))
@_store_dir_option()
def import_human(csv_path, criteria, store_dir):
    """Import a CSV of human annotations (all-or-nothing)."""
    store = _open_store(store_dir, criteria)
    rows = store.import_table(csv_path)
    click.echo(f"imported {len(rows)} annotations")


@cli.group()
def annotators():
    """Annotator registry."""


@annotators.command("add")
@click.argument("annotator_id")
@click.option("--kind", type=click.Choice(["human", "llm", "adjudicator"]), default="human",
              show_default=True)
@click.option("--label", default="")
@click.option("--criteria", default=None, type=click.Path(exists=True))
@_store_dir_option()
def annotators_add(annotator_id, kind, label, criteria, store_dir):
    from .annotations import Annotator

    store = _open_store(store_dir, criteria)
    store.register_annotator(Annotator(id=annotator_id, kind=kind, label=label))
    click.echo(f"registered {annotator_id} ({kind})")


@annotators.command("list")
@click.option("--criteria", default=None, type=click.Path(exists=True))
@_store_dir_option()
def annotators_list(criteria, store_dir):
    store = _open_store(store_dir, criteria)
    for annotator in sorted(store.annotators().values(), key=lambda a: a.id):
        click.echo(f"{annotator.id}\t{annotator.kind}\t{annotator.label}")


@cli.command("report")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--criteria", default=None, type=click.Path(exists=True))
@_store_dir_option()
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--llm-source", type=click.Choice(["run", "remap"]), default="run", show_default=True,
              help="refined-version LLM labels: refined runs or remapped initial runs")
def report(corpus_path, criteria, store_dir, out_dir, llm_source):
    """Write agreement, refinement, confusion, coverage, and summary documents."""
    store = _open_store(store_dir, criteria)
    articles = load_corpus(corpus_path)
    payload = run_report(store, store.registry, articles, out_dir, llm_source=llm_source)
    violations = payload["coverage"]["violations"]
    if violations:
        click.echo(f"coverage violations: {len(violations)} (see coverage.json)")
    click.echo(f"reports written to {out_dir}")


@cli.group()
def adjudicate():
    """Disagreement adjudication utilities."""


@adjudicate.command("export")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--criteria", default=None, type=click.Path(exists=True))
@_store_dir_option()
@click.option("--out", "out_path", default=None, type=click.Path())
def adjudicate_export(corpus_path, criteria, store_dir, out_path):
    """Export open relevant disagreement cases with article text inline."""
    from .adjudication import aspect_by_key, aspect_domain

    store = _open_store(store_dir, criteria)
    articles = {a.id: a for a in load_corpus(corpus_path)}
    queue = []
    for aspect_key, cases in all_disagreements(store, store.registry, sorted(articles)).items():
        aspect = aspect_by_key(store.registry, aspect_key)
        domain = list(aspect_domain(aspect, store.registry.get(aspect.criterion_id)))
        for case in cases:
            if case.relevant and case.outcome == "unresolved":
                payload = case.to_dict()
                article = articles[case.article_id]
                payload["article"] = {"id": article.id, "title": article.title, "body": article.body}
                payload["domain"] = domain
                queue.append(payload)
    text = json.dumps(queue, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if out_path:
        Path(out_path).write_text(text, "utf-8")
        click.echo(f"exported {len(queue)} open cases -> {out_path}")
    else:
        click.echo(text, nl=False)


@cli.command("serve")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--criteria", default=None, type=click.Path(exists=True))
@_store_dir_option()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8100, show_default=True, type=int)
def serve(corpus_path, criteria, store_dir, host, port):
    """Serve the workbench HTTP API."""
    import uvicorn

    from .api import create_app

    store = _open_store(store_dir, criteria)
    articles = load_corpus(corpus_path)
    app = create_app(store, store.registry, articles)
    uvicorn.run(app, host=host, port=port, log_level="warning")


@cli.command("twin")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", default=7, show_default=True, type=int)
def twin(out_dir, seed):
    """Generate the synthetic twin dataset (corpus, store, fixtures)."""
    from .twin import generate_twin

    bundle = generate_twin(out_dir, seed=seed)
    click.echo(f"twin generated under {bundle.root} ({len(bundle.articles)} articles)")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except SystemExit as exc:
        code = exc.code
        return int(code) if isinstance(code, int) else 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except VeritasError as exc:
        click.echo(f"error [{exc.code}]: {exc}", err=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
