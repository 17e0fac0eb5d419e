"""Walkthrough: the workbench HTTP API, driven in-process.

Covers the annotator task loop (fetch next cell, submit an answer), the
adjudication queue, and the dashboard payloads the browser UI consumes.

Run:  python3 demos/demo_workbench_api.py
"""

import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from veritas.api import create_app
from veritas.twin import generate_twin

workdir = Path(tempfile.mkdtemp(prefix="veritas-api-"))
print(f"building a twin store under {workdir} ...")
bundle = generate_twin(workdir, seed=7)
app = create_app(bundle.store, bundle.registry, bundle.articles)
http = TestClient(app)

print()
print("=== 1. articles are served sanitized ===")
article = http.get("/articles/art-000").json()
print(f"  {article['id']}: {article['title']!r}")
print(f"  body starts: {article['body'][:60]!r}")

print()
print("=== 2. the adjudication queue (open relevant conflicts) ===")
queue = http.get("/adjudication/queue").json()
print(f"  {len(queue)} open cases; first three:")
for case in queue[:3]:
    print(f"    {case['case_id']}: experts answered {case['human_answers']}")

print()
print("=== 3. resolving one case shrinks the queue ===")
case = queue[0]
resolved = http.post(
    f"/adjudication/{case['case_id']}",
    json={"ground_truth": case["llm_answer"], "adjudicator": "adjudicator"},
).json()
print(f"  outcome: {resolved['outcome']}")
print(f"  queue now has {len(http.get('/adjudication/queue').json())} cases")

print()
print("=== 4. dashboard payloads ===")
agreement = http.get("/agreement", params={"criterion": "NegTarg", "version": "initial"}).json()
print(f"  NegTarg initial: kappa={agreement['kappa']:.4f} band={agreement['band']} n={agreement['n']}")
table5 = http.get("/summary/table5").json()
for row in table5["rows"]:
    print(f"  {row['display']:28s} {row['no_disagreements']:>3} conflicts, "
          f"{row['relevant_disagreements']:>3} relevant")

print()
print("=== 5. the human task loop (fresh store, two annotators) ===")
from veritas.annotations import AnnotationStore, Annotator
from veritas.corpus import load_corpus
from veritas.criteria import registry_load

registry = registry_load()
small_store = AnnotationStore(workdir / "task-demo", registry)
for hid in ("anna", "bruno", "carla"):
    small_store.register_annotator(Annotator(id=hid, kind="human"))
articles = load_corpus(bundle.corpus_path)[:2]
tasks = TestClient(create_app(small_store, registry, articles))
task = tasks.get("/tasks/anna/next").json()
print(f"  anna's first task: article {task['article']['id']}, criterion {task['criterion']}")
print(f"  progress: {task['progress']}")
tasks.post("/annotations", json={
    "article_id": task["article"]["id"], "criterion": task["criterion"],
    "annotator": "anna", "version": "initial", "answer": "Accurate",
})
print(f"  after one submission: {tasks.get('/tasks/anna/next').json()['progress']}")
