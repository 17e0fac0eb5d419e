import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_confusion, brute_force_kappa, random_series
from veritas.agreement import (
    LabelSeries,
    cohen_kappa,
    confusion_from_series,
    interpret_kappa,
    matrix_collapse,
    render_confusion,
    render_report_table,
)
from veritas.criteria import remap_answer
from veritas.errors import EmptySeries, OutOfRange, SchemaMismatch


def _series_from_counts(cells, labels):
    pairs = []
    for i, row in enumerate(cells):
        for j, count in enumerate(row):
            pairs.extend([(labels[i], labels[j])] * count)
    return LabelSeries(tuple(pairs), tuple(labels))


def test_analytic_2x2_case():
    report = cohen_kappa(_series_from_counts([[20, 5], [10, 15]], ["Y", "N"]))
    assert report.n == 50
    assert report.p_o == 0.70
    assert report.p_e == 0.50
    assert report.kappa == 0.40
    assert report.band == "weak"


def test_hand_enumerated_zero_kappa():
    series = LabelSeries((("Y", "Y"), ("N", "Y"), ("Y", "N"), ("N", "N")), ("Y", "N"))
    report = cohen_kappa(series)
    assert report.p_o == 0.5
    assert report.p_e == 0.5
    assert report.kappa == 0.0


def test_perfect_agreement():
    series = LabelSeries((("A", "A"), ("B", "B"), ("A", "A")), ("A", "B"))
    report = cohen_kappa(series)
    assert report.kappa == 1.0
    assert not report.degenerate


def test_degenerate_constant_series_flagged():
    series = LabelSeries((("A", "A"), ("A", "A")), ("A", "B"))
    report = cohen_kappa(series)
    assert report.kappa == 1.0
    assert report.degenerate


def test_empty_series_rejected():
    with pytest.raises(EmptySeries):
        cohen_kappa(LabelSeries((), ("A", "B")))


def test_series_validates_labels():
    with pytest.raises(SchemaMismatch):
        LabelSeries((("A", "C"),), ("A", "B"))


def test_kappa_matches_brute_force_oracle():
    rng = random.Random(42)
    for _ in range(200):
        pairs, labels = random_series(rng)
        report = cohen_kappa(LabelSeries(pairs, labels))
        assert abs(report.kappa - brute_force_kappa(pairs, labels)) <= 1e-12


def test_kappa_matches_sklearn():
    sklearn_metrics = pytest.importorskip("sklearn.metrics")
    rng = random.Random(1234)
    for _ in range(50):
        pairs, labels = random_series(rng, max_n=40)
        report = cohen_kappa(LabelSeries(pairs, labels))
        if report.degenerate or report.p_e == 1.0:
            continue
        a, b = zip(*pairs)
        expected = sklearn_metrics.cohen_kappa_score(list(a), list(b), labels=list(labels))
        assert abs(report.kappa - expected) <= 1e-9


def test_confusion_matches_brute_force():
    rng = random.Random(7)
    for _ in range(50):
        pairs, labels = random_series(rng)
        ours = confusion_from_series(LabelSeries(pairs, labels))
        assert [list(r) for r in ours.cells] == brute_force_confusion(pairs, labels)
        assert ours.total == len(pairs)


def test_swap_symmetry():
    rng = random.Random(99)
    for _ in range(100):
        pairs, labels = random_series(rng)
        series = LabelSeries(pairs, labels)
        report = cohen_kappa(series)
        swapped = cohen_kappa(series.swapped())
        assert report.kappa == swapped.kappa
        # confusion matrix transposes
        size = len(labels)
        for i in range(size):
            for j in range(size):
                assert report.confusion.cells[i][j] == swapped.confusion.cells[j][i]


def test_label_permutation_invariance():
    rng = random.Random(123)
    for _ in range(100):
        pairs, labels = random_series(rng)
        mapping = dict(zip(labels, rng.sample(labels, len(labels))))
        renamed = tuple((mapping[a], mapping[b]) for a, b in pairs)
        original = cohen_kappa(LabelSeries(pairs, labels))
        permuted = cohen_kappa(LabelSeries(renamed, labels))
        assert original.kappa == permuted.kappa
        assert original.p_o == permuted.p_o
        assert original.p_e == permuted.p_e


@settings(max_examples=150, deadline=None)
@given(st.data())
def test_kappa_bounds(data):
    labels = tuple(f"L{i}" for i in range(data.draw(st.integers(2, 5))))
    pairs = tuple(
        (data.draw(st.sampled_from(labels)), data.draw(st.sampled_from(labels)))
        for _ in range(data.draw(st.integers(1, 30)))
    )
    report = cohen_kappa(LabelSeries(pairs, labels))
    assert -1.0 <= report.kappa <= 1.0


# -- interpretation bands -----------------------------------------------------

@pytest.mark.parametrize(
    "value,band",
    [
        (-1.0, "none"),
        (0.0, "none"),
        (0.20, "none"),
        (0.21, "minimal"),
        (0.35, "minimal"),
        (0.40, "weak"),
        (0.59, "weak"),
        (0.60, "moderate"),
        (0.7089, "moderate"),
        (0.80, "strong"),
        (0.90, "strong"),
        (0.95, "almost_perfect"),
        (1.0, "almost_perfect"),
    ],
)
def test_band_table(value, band):
    assert interpret_kappa(value) == band


def test_band_out_of_range():
    with pytest.raises(OutOfRange):
        interpret_kappa(1.5)
    with pytest.raises(OutOfRange):
        interpret_kappa(-1.01)


def test_band_monotone():
    grid = [x / 1000 for x in range(-1000, 1001)]
    order = {band: i for i, band in enumerate(("none", "minimal", "weak", "moderate", "strong", "almost_perfect"))}
    bands = [order[interpret_kappa(x)] for x in grid]
    assert bands == sorted(bands)


# -- collapse ------------------------------------------------------------------

def _random_ordinal_series(rng, registry, n=60):
    labels = registry.get("ArtBias").initial_schema().labels()
    return LabelSeries(
        tuple((rng.choice(labels), rng.choice(labels)) for _ in range(n)), labels
    )


def test_collapse_single_cell(registry):
    labels = registry.get("ArtBias").initial_schema().labels()
    series = LabelSeries((("Biased", "Unbiased"),) * 7, labels)
    collapsed = matrix_collapse(confusion_from_series(series), registry.remap_rule("ArtBias"))
    assert collapsed.labels == ("Biased", "Unbiased")
    assert collapsed.cells == ((0, 7), (0, 0))


def test_collapse_preserves_total_and_commutes(registry):
    rng = random.Random(11)
    rule = registry.remap_rule("ArtBias")
    for _ in range(100):
        series = _random_ordinal_series(rng, registry)
        full = confusion_from_series(series)
        collapsed = matrix_collapse(full, rule)
        assert collapsed.total == full.total
        remapped = LabelSeries(
            tuple((remap_answer(a, rule), remap_answer(b, rule)) for a, b in series.pairs),
            rule.binary_labels,
        )
        assert collapsed.cells == confusion_from_series(remapped).cells


def test_collapse_rejects_non_ordinal(registry):
    labels = ("Yes", "No")
    series = LabelSeries((("Yes", "No"),), labels)
    with pytest.raises(SchemaMismatch):
        matrix_collapse(confusion_from_series(series), registry.remap_rule("LedePres"))


def test_renderers_smoke(registry):
    series = _series_from_counts([[20, 5], [10, 15]], ["Y", "N"])
    report = cohen_kappa(series)
    table = render_report_table({"demo": report})
    assert "demo" in table and "0.4000" in table
    grid = render_confusion(report.confusion)
    assert "20" in grid and "experts" in grid


# -- consensus-conditional comparison over a minimal store-shaped object --------

class _FakeStore:
    """Just enough store surface for consensus_series."""

    def __init__(self, rows, llm_rows):
        self._rows = rows  # article -> (h1, h2)
        self._llm = llm_rows  # (article, version) -> answer or None

    def article_ids(self):
        return sorted(self._rows)

    def human_answers(self, article_id, criterion_id, version="initial"):
        return list(self._rows[article_id])

    def llm_annotation(self, article_id, criterion_id, version):
        answer = self._llm.get((article_id, version))
        if answer is None:
            return None
        from veritas.annotations import Annotation

        return Annotation(article_id=article_id, criterion_id=criterion_id,
                          annotator_id="llm", prompt_version=version, answer=answer)

    def has_llm_annotations(self, criterion_id, version):
        return any(v == version and a is not None for (_, v), a in self._llm.items())


def test_llm_copying_consensus_gives_kappa_one(registry):
    from veritas.agreement import consensus_vs_llm

    criterion = registry.get("LedePres")
    rows, llm = {}, {}
    for i in range(10):
        label = "Yes" if i % 2 else "No"  # both labels present
        rows[f"a{i}"] = (label, label)
        llm[(f"a{i}", "initial")] = label
    report = consensus_vs_llm(_FakeStore(rows, llm), registry, criterion, "initial")
    assert report.kappa == 1.0
    assert report.band == "almost_perfect"
    assert report.n == 10


def test_consensus_excludes_llm_missing_and_counts_them(registry):
    from veritas.agreement import consensus_vs_llm

    criterion = registry.get("LedePres")
    rows = {"a0": ("Yes", "Yes"), "a1": ("No", "No"), "a2": ("Yes", "No"), "a3": ("Yes", "Yes")}
    llm = {("a0", "initial"): "Yes", ("a1", "initial"): "No"}  # a3 has no final answer
    report = consensus_vs_llm(_FakeStore(rows, llm), registry, criterion, "initial")
    assert report.n == 2
    assert report.n_excluded == 1  # a3: consensus but no LLM final; a2 is a disagreement


def test_refinement_gain_version_missing(registry):
    from veritas.agreement import refinement_gain
    from veritas.errors import VersionMissing

    criterion = registry.get("SensLang")
    rows = {"a0": ("Neutral", "Neutral")}
    llm = {("a0", "initial"): "Neutral"}
    with pytest.raises(VersionMissing):
        refinement_gain(_FakeStore(rows, llm), registry, criterion)


def test_refinement_gain_identical_series_delta_zero(registry):
    from veritas.agreement import refinement_gain

    criterion = registry.get("LedePres")  # refined schema equals initial
    rows, llm = {}, {}
    for i in range(8):
        label = "Yes" if i % 2 else "No"
        rows[f"a{i}"] = (label, label)
        llm[(f"a{i}", "initial")] = label
        llm[(f"a{i}", "refined")] = label
    initial, refined, delta = refinement_gain(_FakeStore(rows, llm), registry, criterion)
    assert delta == 0.0
    assert initial.kappa == refined.kappa
