"""Seeded generator for a synthetic twin of the evaluation dataset.

The real 340-article corpus is proprietary, so reproduction tests run against
a constructed store whose derived statistics match the published aggregates by
design: consensus-conditional kappas per criterion, the refinement gains for
the two collapsed criteria, the disagreement summary table, and the
6,120-annotation coverage arithmetic.

Construction works backwards from the statistics: integer confusion matrices
hitting each kappa target are found by exhaustive search (2x2) or a seeded
hill climb (4x4/5x5), then unrolled into per-article expert and LLM labels.
Expert disagreements are laid out on fixed article ranges so that exactly 226
articles carry at least one conflict.  All LLM answers flow through the real
annotation pipeline via a generated replay file, and ground truth lands
through the real adjudication API.
"""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .adjudication import NO_ISSUE, record_adjudication
from .annotations import AnnotationStore, Annotator, CSV_HEADER
from .corpus import Article, save_corpus
from .criteria import Registry, registry_load
from .errors import InconsistentResponses
from .llm import ReplayBackend, RequestContext, annotate_llm, write_replay_file

N_PUBLISHERS = 34
PER_PUBLISHER = 10
N_ARTICLES = N_PUBLISHERS * PER_PUBLISHER

HUMANS = ("ann-a", "ann-b", "ann-c")
LLM_ID = "llm"
ADJUDICATOR_ID = "adjudicator"

# published kappa targets the twin must reproduce (within +/- 0.005)
KAPPA_TARGETS = {
    ("NegTarg", "initial"): 0.7089,
    ("ArtBias", "initial"): 0.2064,
    ("SensLang", "initial"): 0.1732,
    ("ArtBias", "refined"): 0.4750,
    ("SensLang", "refined"): 0.5486,
}

# expected disagreement summary rows:
# aspect -> (articles, disagreements, relevant, llm_correct, borderline)
TABLE5_EXPECTED = {
    "ArtBias": (340, 79, 4, 4, 0),
    "HeadAcc": (340, 108, 11, 9, 0),
    "NegTarg:detection": (340, 30, 30, 18, 12),
    "NegTarg:identification": (340, 47, 47, 32, 15),
    "SensLang": (340, 72, 11, 7, 0),
}
ARTICLES_WITH_DISAGREEMENT = 226

# disagreement layout over article indices 0..339 (union = 0..225)
_D_HEAD = range(0, 108)
_D_BIAS = range(0, 79)
_D_SENS = range(107, 179)
_D_DET = range(179, 209)  # detection conflicts: one expert Yes, one No
_D_IDDIFF = range(209, 226)  # both experts Yes, different issues
_D_LEDE = range(0, 12)
_D_TYPE = range(20, 40)


@dataclass
class _Cell:
    h1: str
    h2: str
    llm: str
    ref: str
    h1_sub: str | None = None
    h2_sub: str | None = None
    llm_sub: str | None = None
    ref_sub: str | None = None


@dataclass
class TwinBundle:
    root: Path
    store: AnnotationStore
    registry: Registry
    articles: list[Article]
    corpus_path: Path
    humans_csv_path: Path
    replay_path: Path
    store_dir: Path


# ---------------------------------------------------------------------------
# confusion-matrix searches
# ---------------------------------------------------------------------------

def _kappa(cells: np.ndarray) -> float:
    cells = np.asarray(cells, dtype=float)
    n = cells.sum()
    p_o = np.trace(cells) / n
    p_e = float(cells.sum(axis=1) @ cells.sum(axis=0)) / (n * n)
    if p_e >= 1.0:
        return 1.0
    return (p_o - p_e) / (1.0 - p_e)


def _kappa_2x2(a: int, b: int, c: int, d: int) -> float:
    n = a + b + c + d
    p_e = ((a + b) * (a + c) + (c + d) * (b + d)) / (n * n)
    if p_e >= 1.0:
        return 1.0
    return ((a + d) / n - p_e) / (1.0 - p_e)


def _search_2x2(n: int, target: float, row1_range: tuple[int, int], a_min: int = 0) -> np.ndarray:
    best_err, best = None, None
    for r1 in range(*row1_range):
        r2 = n - r1
        for a in range(a_min, r1 + 1):
            b = r1 - a
            for c in range(r2 + 1):
                err = abs(_kappa_2x2(a, b, c, r2 - c) - target)
                if best_err is None or err < best_err:
                    best_err, best = err, np.array([[a, b], [c, r2 - c]])
    return best


def _search_refined(e_neg: int, e_pos: int, target: float) -> np.ndarray:
    """2x2 with fixed expert marginals; prefers the over-sensitive corner."""
    best_err, best = None, None
    for a in range(e_neg + 1):
        for d in range(e_pos + 1):
            err = abs(_kappa_2x2(a, e_neg - a, e_pos - d, d) - target)
            # among (near-)ties prefer llm finding more negatives than experts
            score = (e_pos - d) - (e_neg - a)
            if best_err is None or err < best_err - 1e-9 or (err <= best_err + 1e-9 and score > best[1]):
                best_err = err if best_err is None else min(err, best_err)
                best = (np.array([[a, e_neg - a], [e_pos - d, d]]), score)
    return best[0]


def _hillclimb(
    n: int,
    target: float,
    size: int,
    row_bias: list[float],
    col_bias: list[float],
    seed: int,
    tol: float,
    min_neg_rows: int = 0,
) -> np.ndarray:
    """Seeded stochastic descent on integer matrices with fixed total."""
    for restart in range(20):
        rng = np.random.default_rng(seed + restart * 1013)
        rb = np.array(row_bias) / sum(row_bias)
        cb = np.array(col_bias) / sum(col_bias)
        counts = rng.multinomial(n, np.outer(rb, cb).ravel()).reshape(size, size)
        err = abs(_kappa(counts) - target)
        for _ in range(120_000):
            if err < tol:
                break
            si, sj, di, dj = rng.integers(0, size, 4)
            if counts[si, sj] == 0:
                continue
            counts[si, sj] -= 1
            counts[di, dj] += 1
            new_err = abs(_kappa(counts) - target)
            if new_err <= err:
                err = new_err
            else:
                counts[si, sj] += 1
                counts[di, dj] -= 1
        if err < tol and (size != 4 or counts[:2].sum() >= min_neg_rows):
            return counts
    raise RuntimeError(f"hill climb failed to reach kappa {target} over n={n}")


def _assign_matrix(indices: list[int], matrix: np.ndarray, labels: tuple[str, ...]) -> dict[int, tuple[str, str]]:
    """Unroll cell counts into per-article (expert, llm) labels, row-major."""
    assert int(matrix.sum()) == len(indices)
    out: dict[int, tuple[str, str]] = {}
    cursor = iter(indices)
    for i, row in enumerate(matrix):
        for j, count in enumerate(row):
            for _ in range(int(count)):
                out[next(cursor)] = (labels[i], labels[j])
    return out


# ---------------------------------------------------------------------------
# per-criterion planning
# ---------------------------------------------------------------------------

def _plan_ordinal(
    registry: Registry,
    criterion_id: str,
    disagreement: range,
    relevant: range,
    correct: int,
    rel_pairs: list[tuple[int, int]],
    straddle: range,
    low_side: range,
    high_side: range,
    matrix: np.ndarray,
    refined_matrix: np.ndarray | None,
    adjudications: list,
) -> dict[int, _Cell]:
    schema = registry.get(criterion_id).initial_schema()
    lab = schema.label_of
    cells: dict[int, _Cell] = {}

    for k, i in enumerate(relevant):
        lo, hi = rel_pairs[k % len(rel_pairs)]
        central = lab(lo + 1)
        cells[i] = _Cell(h1=lab(lo), h2=lab(hi), llm=central, ref="")
        truth = central if k < correct else lab(hi)
        adjudications.append((criterion_id, i, truth, False))
    for i in straddle:
        cells[i] = _Cell(h1=lab(2), h2=lab(3), llm=lab(2), ref="")
    for i in low_side:
        cells[i] = _Cell(h1=lab(1), h2=lab(2), llm=lab(1), ref="")
    for i in high_side:
        cells[i] = _Cell(h1=lab(3), h2=lab(4), llm=lab(3), ref="")

    consensus_idx = [i for i in range(N_ARTICLES) if i not in disagreement]
    for i, (expert, llm) in _assign_matrix(consensus_idx, matrix, schema.labels()).items():
        cells[i] = _Cell(h1=expert, h2=expert, llm=llm, ref="")

    rule = registry.remap_rule(criterion_id)
    if refined_matrix is None:
        for cell in cells.values():
            cell.ref = cell.llm
        return cells

    neg, pos = rule.binary_labels
    refined_expert: dict[int, str] = {}
    for i in consensus_idx:
        refined_expert[i] = rule.mapping[schema.rank_of(cells[i].h1)]
    for i in low_side:
        refined_expert[i] = neg
    for i in high_side:
        refined_expert[i] = pos
    neg_idx = sorted(i for i, side in refined_expert.items() if side == neg)
    pos_idx = sorted(i for i, side in refined_expert.items() if side == pos)
    (a, b), (c, d) = (int(x) for x in refined_matrix[0]), (int(x) for x in refined_matrix[1])
    assert a + b == len(neg_idx) and c + d == len(pos_idx)
    for pos_in_list, i in enumerate(neg_idx):
        cells[i].ref = neg if pos_in_list < a else pos
    for pos_in_list, i in enumerate(pos_idx):
        cells[i].ref = neg if pos_in_list < c else pos
    for i in itertools.chain(relevant, straddle):
        cells[i].ref = neg  # excluded from the refined consensus set; any value
    return cells


def _plan_negtarg(registry: Registry, seed: int, adjudications: list) -> dict[int, _Cell]:
    issues = ("Politics", "Politics", "Gender", "Other", "Religion", "Politics")
    diff_pairs = (
        ("Politics", "Gender"),
        ("Politics", "Other"),
        ("Religion", "Politics"),
        ("Gender", "Other"),
    )
    cells: dict[int, _Cell] = {}

    # detection conflicts: 18 resolved (LLM side taken as truth), 12 borderline
    for k, i in enumerate(_D_DET):
        issue = issues[k % len(issues)]
        yes_first = k % 2 == 0
        head = ("Yes" if k % 3 != 2 else "No") if k < 18 else ("Yes" if k % 2 else "No")
        cell = _Cell(
            h1="Yes" if yes_first else "No",
            h2="No" if yes_first else "Yes",
            h1_sub=issue if yes_first else None,
            h2_sub=None if yes_first else issue,
            llm=head,
            llm_sub=issue if head == "Yes" else None,
            ref="",
        )
        cells[i] = cell
        if k < 18:
            adjudications.append(("NegTarg:detection", i, head, False))
            ident_truth = issue if head == "Yes" else NO_ISSUE
            adjudications.append(("NegTarg:identification", i, ident_truth, False))
        else:
            adjudications.append(("NegTarg:detection", i, None, True))
            adjudications.append(("NegTarg:identification", i, None, True))

    # both experts say Yes but disagree on the issue: 14 resolved, 3 borderline
    for m, i in enumerate(_D_IDDIFF):
        first, second = diff_pairs[m % len(diff_pairs)]
        cells[i] = _Cell(
            h1="Yes", h2="Yes", h1_sub=first, h2_sub=second, llm="Yes", llm_sub=first, ref=""
        )
        if m < 14:
            adjudications.append(("NegTarg:identification", i, first, False))
        else:
            adjudications.append(("NegTarg:identification", i, None, True))

    # detection consensus: kappa-bearing series over the remaining 310 articles
    matrix = _search_2x2(
        N_ARTICLES - len(_D_DET), KAPPA_TARGETS[("NegTarg", "initial")], (40, 101), a_min=len(_D_IDDIFF)
    )
    ordered = list(_D_IDDIFF) + sorted(set(range(N_ARTICLES)) - set(_D_DET) - set(_D_IDDIFF))
    issue_cycle = itertools.cycle(("Politics", "Other", "Gender", "Politics", "Religion"))
    for i, (expert, llm) in _assign_matrix(ordered, matrix, ("Yes", "No")).items():
        if i in _D_IDDIFF:  # planned above; matrix placement only fixed the llm head
            continue
        issue = next(issue_cycle) if expert == "Yes" else None
        llm_sub = None
        if llm == "Yes":
            llm_sub = issue if expert == "Yes" else "Politics"
        cells[i] = _Cell(
            h1=expert, h2=expert, h1_sub=issue, h2_sub=issue, llm=llm, llm_sub=llm_sub, ref=""
        )

    for cell in cells.values():
        cell.ref, cell.ref_sub = cell.llm, cell.llm_sub
    return cells


def _plan_binary_lede(registry: Registry) -> dict[int, _Cell]:
    cells: dict[int, _Cell] = {}
    for i in _D_LEDE:
        cells[i] = _Cell(h1="Yes", h2="No", llm="Yes", ref="Yes")
    matrix = _search_2x2(N_ARTICLES - len(_D_LEDE), 0.40, (230, 300))
    consensus_idx = sorted(set(range(N_ARTICLES)) - set(_D_LEDE))
    for i, (expert, llm) in _assign_matrix(consensus_idx, matrix, ("Yes", "No")).items():
        cells[i] = _Cell(h1=expert, h2=expert, llm=llm, ref=llm)
    return cells


def _plan_type(registry: Registry, seed: int) -> dict[int, _Cell]:
    labels = registry.get("Type").initial_schema().labels()
    pairs = (
        ("Straight news", "Soft News"),
        ("Editorial", "Straight news"),
        ("Soft News", "Editorial"),
        ("Straight news", "Investigation"),
    )
    cells: dict[int, _Cell] = {}
    for k, i in enumerate(_D_TYPE):
        h1, h2 = pairs[k % len(pairs)]
        cells[i] = _Cell(h1=h1, h2=h2, llm=h1, ref="")
    matrix = _hillclimb(
        N_ARTICLES - len(_D_TYPE),
        0.55,
        5,
        row_bias=[0.50, 0.12, 0.08, 0.03, 0.27],
        col_bias=[0.45, 0.17, 0.08, 0.05, 0.25],
        seed=seed + 5,
        tol=5e-3,
    )
    consensus_idx = sorted(set(range(N_ARTICLES)) - set(_D_TYPE))
    for i, (expert, llm) in _assign_matrix(consensus_idx, matrix, labels).items():
        cells[i] = _Cell(h1=expert, h2=expert, llm=llm, ref="")
    for cell in cells.values():
        cell.ref = registry.to_refined_label("Type", cell.llm)
    return cells


def build_plan(registry: Registry, seed: int) -> tuple[dict[str, dict[int, _Cell]], list]:
    adjudications: list[tuple[str, int, str | None, bool]] = []

    bias_matrix = _hillclimb(
        N_ARTICLES - len(_D_BIAS),
        KAPPA_TARGETS[("ArtBias", "initial")],
        4,
        row_bias=[0.06, 0.14, 0.36, 0.44],
        col_bias=[0.20, 0.30, 0.30, 0.20],
        seed=seed + 1,
        tol=3e-4,
        min_neg_rows=30,
    )
    bias_low, bias_high = range(34, 71), range(71, 79)  # same-side expert pairs
    bias_refined = _search_refined(
        int(bias_matrix[:2].sum()) + len(bias_low),
        int(bias_matrix[2:].sum()) + len(bias_high),
        KAPPA_TARGETS[("ArtBias", "refined")],
    )
    art_bias = _plan_ordinal(
        registry,
        "ArtBias",
        _D_BIAS,
        relevant=range(0, 4),
        correct=4,
        rel_pairs=[(1, 3)],
        straddle=range(4, 34),
        low_side=bias_low,
        high_side=bias_high,
        matrix=bias_matrix,
        refined_matrix=bias_refined,
        adjudications=adjudications,
    )

    sens_matrix = _hillclimb(
        N_ARTICLES - len(_D_SENS),
        KAPPA_TARGETS[("SensLang", "initial")],
        4,
        row_bias=[0.04, 0.22, 0.38, 0.36],
        col_bias=[0.25, 0.35, 0.25, 0.15],
        seed=seed + 2,
        tol=3e-4,
        min_neg_rows=30,
    )
    sens_low, sens_high = range(143, 173), range(173, 179)
    sens_refined = _search_refined(
        int(sens_matrix[:2].sum()) + len(sens_low),
        int(sens_matrix[2:].sum()) + len(sens_high),
        KAPPA_TARGETS[("SensLang", "refined")],
    )
    sens_lang = _plan_ordinal(
        registry,
        "SensLang",
        _D_SENS,
        relevant=range(107, 118),
        correct=7,
        rel_pairs=[(2, 4), (1, 3), (1, 4)],
        straddle=range(118, 143),
        low_side=sens_low,
        high_side=sens_high,
        matrix=sens_matrix,
        refined_matrix=sens_refined,
        adjudications=adjudications,
    )

    head_matrix = _hillclimb(
        N_ARTICLES - len(_D_HEAD),
        0.33,  # below the 0.4 acceptance threshold; the exact value is free
        4,
        row_bias=[0.08, 0.12, 0.34, 0.46],
        col_bias=[0.15, 0.20, 0.35, 0.30],
        seed=seed + 3,
        tol=5e-3,
    )
    head_acc = _plan_ordinal(
        registry,
        "HeadAcc",
        _D_HEAD,
        relevant=range(0, 11),
        correct=9,
        rel_pairs=[(1, 3), (2, 4), (1, 4)],
        straddle=range(11, 108),  # exact split among one-step pairs is free
        low_side=range(0, 0),
        high_side=range(0, 0),
        matrix=head_matrix,
        refined_matrix=None,
        adjudications=adjudications,
    )

    plans = {
        "HeadAcc": head_acc,
        "LedePres": _plan_binary_lede(registry),
        "NegTarg": _plan_negtarg(registry, seed, adjudications),
        "ArtBias": art_bias,
        "SensLang": sens_lang,
        "Type": _plan_type(registry, seed),
    }
    return plans, adjudications


# ---------------------------------------------------------------------------
# materialization
# ---------------------------------------------------------------------------

def _twin_articles() -> list[Article]:
    window_days = (date(2021, 10, 31) - date(2021, 4, 1)).days
    fetched = datetime(2021, 11, 1, 0, 0, tzinfo=timezone.utc)
    articles = []
    for i in range(N_ARTICLES):
        publisher = f"pub-{i // PER_PUBLISHER + 1:02d}"
        published = date(2021, 4, 1) + timedelta(days=(i * window_days) // (N_ARTICLES - 1))
        articles.append(
            Article(
                id=f"art-{i:03d}",
                publisher_id=publisher,
                url=f"https://example.invalid/{publisher}/{i:03d}",
                title=f"Articolo {i:03d}: aggiornamento dalla redazione",
                body=(
                    f"Testo sintetico dell'articolo {i:03d}. [PUBLISHER] riporta i fatti "
                    "principali in apertura.\nSegue un secondo paragrafo con il contesto, "
                    "le reazioni e i dettagli della vicenda raccontata."
                ),
                published_at=published,
                fetched_at=fetched,
                sanitized=True,
            )
        )
    return articles


def _it_surface(registry: Registry, criterion_id: str, version: str, label: str) -> str:
    schema = registry.get(criterion_id).schema[version]
    for opt in schema.options:
        if opt.label == label:
            return opt.text["it"]
    for opt in schema.sub_schema.options:  # issues
        if opt.label == label:
            return opt.text["it"]
    raise KeyError(label)


def _response_text(registry: Registry, criterion_id: str, version: str, answer: str, sub: str | None) -> str:
    surface = _it_surface(registry, criterion_id, version, answer)
    if criterion_id == "NegTarg" and answer == "Yes":
        return f"{surface}. {_it_surface(registry, criterion_id, version, sub)}."
    return f"{surface}."


def _fixed_clock(start: datetime):
    counter = itertools.count()

    def clock() -> datetime:
        return start + timedelta(seconds=next(counter))

    return clock


def generate_twin(out_dir: str | Path, seed: int = 7) -> TwinBundle:
    """Generate corpus, human CSV, LLM replay file, and a fully loaded store."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    registry = registry_load(None)
    plans, adjudications = build_plan(registry, seed)
    articles = _twin_articles()

    corpus_path = out / "corpus.jsonl"
    save_corpus(articles, corpus_path)

    # human annotations: each article is covered by two of the three experts
    pair_cycle = [(0, 1), (0, 2), (1, 2)]
    humans_csv = out / "humans.csv"
    with open(humans_csv, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for i, article in enumerate(articles):
            first, second = pair_cycle[i % 3]
            for criterion_id in registry.ids():
                cell = plans[criterion_id][i]
                writer.writerow(
                    [article.id, criterion_id, HUMANS[first], "initial", cell.h1, cell.h1_sub or ""]
                )
                writer.writerow(
                    [article.id, criterion_id, HUMANS[second], "initial", cell.h2, cell.h2_sub or ""]
                )

    # replay file: three identical repetitions per cell and version
    replay_rows = []
    for i, article in enumerate(articles):
        for criterion_id in registry.ids():
            cell = plans[criterion_id][i]
            for version, answer, sub in (
                ("initial", cell.llm, cell.llm_sub),
                ("refined", cell.ref, cell.ref_sub),
            ):
                text = _response_text(registry, criterion_id, version, answer, sub)
                for repetition in range(3):
                    replay_rows.append(
                        (RequestContext(article.id, criterion_id, version, repetition), text)
                    )
    replay_path = out / "replay.jsonl"
    write_replay_file(replay_rows, replay_path)

    # load everything through the real pipeline surfaces
    store_dir = out / "store"
    store = AnnotationStore(
        store_dir, registry, clock=_fixed_clock(datetime(2021, 11, 2, tzinfo=timezone.utc))
    )
    for human in HUMANS:
        store.register_annotator(Annotator(id=human, kind="human", label=human))
    store.register_annotator(Annotator(id=LLM_ID, kind="llm", label="gpt-4o"))
    store.register_annotator(Annotator(id=ADJUDICATOR_ID, kind="adjudicator", label="ex-post"))

    store.import_table(humans_csv)

    backend = ReplayBackend(replay_path)
    for article in articles:
        for criterion_id in registry.ids():
            criterion = registry.get(criterion_id)
            for version in ("initial", "refined"):
                try:
                    annotation = annotate_llm(
                        article, criterion, version, backend, language="it", annotator_id=LLM_ID
                    )
                except InconsistentResponses as exc:  # pragma: no cover - twin is unanimous
                    annotation = exc.annotation
                store.record(annotation)

    for aspect_key, index, value, indeterminate in adjudications:
        record_adjudication(
            store,
            registry,
            aspect_key,
            articles[index].id,
            ground_truth=value,
            indeterminate=indeterminate,
            adjudicator_id=ADJUDICATOR_ID,
        )

    return TwinBundle(
        root=out,
        store=store,
        registry=registry,
        articles=articles,
        corpus_path=corpus_path,
        humans_csv_path=humans_csv,
        replay_path=replay_path,
        store_dir=store_dir,
    )
