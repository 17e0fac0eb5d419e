"""Chance-corrected agreement: Cohen's kappa, bands, confusion matrices.

kappa = (p_o - p_e) / (1 - p_e), where p_o is the observed fraction of equal
pairs and p_e the agreement expected from the two raters' marginal label
distributions.  Counts are integers, so p_o, p_e and kappa are computed as
exact rationals and only converted to float for reporting; this keeps the
analytic test cases exact and makes label-permutation invariance literal.

Confusion matrices are oriented rows = first series (experts), columns =
second series (LLM); all outputs label the axes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .criteria import Criterion, Registry, RemapRule, remap_answer
from .errors import (
    EmptySeries,
    NoConsensusCells,
    OutOfRange,
    SchemaMismatch,
    VersionMissing,
)

BANDS = ("none", "minimal", "weak", "moderate", "strong", "almost_perfect")


@dataclass(frozen=True)
class LabelSeries:
    """Paired observations over a shared finite label set."""

    pairs: tuple[tuple[str, str], ...]
    label_set: tuple[str, ...]

    def __post_init__(self):
        known = set(self.label_set)
        for a, b in self.pairs:
            if a not in known or b not in known:
                raise SchemaMismatch(f"pair ({a!r}, {b!r}) outside label set {self.label_set}")

    def swapped(self) -> "LabelSeries":
        return LabelSeries(tuple((b, a) for a, b in self.pairs), self.label_set)


@dataclass(frozen=True)
class ConfusionMatrix:
    labels: tuple[str, ...]
    cells: tuple[tuple[int, ...], ...]  # rows = first series, cols = second

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.cells)

    def row_sums(self) -> tuple[int, ...]:
        return tuple(sum(row) for row in self.cells)

    def col_sums(self) -> tuple[int, ...]:
        return tuple(sum(row[j] for row in self.cells) for j in range(len(self.labels)))

    def to_dict(self) -> dict:
        return {"labels": list(self.labels), "cells": [list(r) for r in self.cells]}


@dataclass(frozen=True)
class AgreementReport:
    n: int
    p_o: float
    p_e: float
    kappa: float
    band: str
    confusion: ConfusionMatrix
    degenerate: bool = False  # p_e == 1: constant, agreeing series
    n_excluded: int = 0  # cells dropped (no LLM final answer)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "p_o": self.p_o,
            "p_e": self.p_e,
            "kappa": self.kappa,
            "kappa_4dp": round(self.kappa, 4),
            "band": self.band,
            "confusion": self.confusion.to_dict(),
            "degenerate": self.degenerate,
            "n_excluded": self.n_excluded,
        }


def confusion_from_series(series: LabelSeries) -> ConfusionMatrix:
    index = {label: i for i, label in enumerate(series.label_set)}
    size = len(series.label_set)
    cells = [[0] * size for _ in range(size)]
    for a, b in series.pairs:
        cells[index[a]][index[b]] += 1
    return ConfusionMatrix(labels=series.label_set, cells=tuple(tuple(r) for r in cells))


def cohen_kappa(series: LabelSeries, n_excluded: int = 0) -> AgreementReport:
    """Agreement report for one paired series.

    A degenerate series (both raters constant on the same label, p_e = 1) is
    reported as kappa = 1.0 with the ``degenerate`` flag set: constant and
    agreeing raters do agree, however uninformatively.
    """
    if not series.pairs:
        raise EmptySeries("label series has no pairs")
    confusion = confusion_from_series(series)
    n = confusion.total

    agree = sum(confusion.cells[i][i] for i in range(len(series.label_set)))
    p_o = Fraction(agree, n)
    p_e = Fraction(0)
    for r, c in zip(confusion.row_sums(), confusion.col_sums()):
        p_e += Fraction(r, n) * Fraction(c, n)

    if p_e == 1:
        kappa = Fraction(1)
        degenerate = True
    else:
        kappa = (p_o - p_e) / (1 - p_e)
        degenerate = False

    kappa_f = float(kappa)
    return AgreementReport(
        n=n,
        p_o=float(p_o),
        p_e=float(p_e),
        kappa=kappa_f,
        band=interpret_kappa(kappa_f),
        confusion=confusion,
        degenerate=degenerate,
        n_excluded=n_excluded,
    )


def interpret_kappa(k: float) -> str:
    """Qualitative band for a kappa value (McHugh's ranges, half-open)."""
    if not -1.0 <= k <= 1.0:
        raise OutOfRange(f"kappa {k} outside [-1, 1]")
    if k < 0.21:
        return "none"
    if k < 0.40:
        return "minimal"
    if k < 0.60:
        return "weak"
    if k < 0.80:
        return "moderate"
    if k <= 0.90:
        return "strong"
    return "almost_perfect"


def matrix_collapse(m: ConfusionMatrix, rule: RemapRule) -> ConfusionMatrix:
    """Block-sum a 4x4 ordinal matrix into the 2x2 of its binary collapse."""
    if not rule.mapping or rule.source.kind != "ordinal4":
        raise SchemaMismatch(f"remap rule for {rule.criterion_id} is not a four-class collapse")
    if m.labels != rule.source.labels():
        raise SchemaMismatch(
            f"matrix labels {m.labels} do not match schema {rule.source.labels()}"
        )
    neg, pos = rule.binary_labels
    # ordinal4 options are rank-ordered, so rows/cols 0,1 are the negative block
    cells = [[0, 0], [0, 0]]
    for i in range(4):
        for j in range(4):
            bi = 0 if rule.mapping[i + 1] == neg else 1
            bj = 0 if rule.mapping[j + 1] == neg else 1
            cells[bi][bj] += m.cells[i][j]
    return ConfusionMatrix(labels=(neg, pos), cells=tuple(tuple(r) for r in cells))


def _llm_final(store, article_id: str, criterion_id: str, version: str):
    ann = store.llm_annotation(article_id, criterion_id, version)
    if ann is None or ann.answer is None:
        return None
    return ann.answer


def consensus_series(
    store,
    registry: Registry,
    criterion: Criterion,
    version: str,
    llm_source: str = "run",
) -> tuple[LabelSeries, int]:
    """Pairs of (expert consensus, LLM final) over consensus-bearing articles.

    Articles enter the series only when both experts gave the same answer and
    the LLM produced a final one; the second element of the result counts
    consensus cells excluded because the LLM answer was missing/inconsistent.

    For the refined version the expert side is derived by remapping initial
    answers; the LLM side comes from refined-prompt runs (``llm_source="run"``)
    or from remapped initial runs (``llm_source="remap"``).
    """
    label_set = criterion.schema[version].labels()
    pairs = []
    excluded = 0
    for article_id in store.article_ids():
        humans = store.human_answers(article_id, criterion.id)
        if len(humans) != 2:
            continue
        a, b = humans
        if version == "refined":
            a = registry.to_refined_label(criterion.id, a)
            b = registry.to_refined_label(criterion.id, b)
        if a != b:
            continue
        if llm_source == "remap":
            llm = _llm_final(store, article_id, criterion.id, "initial")
            if llm is not None:
                llm = registry.to_refined_label(criterion.id, llm)
        else:
            llm = _llm_final(store, article_id, criterion.id, version)
        if llm is None:
            excluded += 1
            continue
        pairs.append((a, llm))
    if not pairs:
        raise NoConsensusCells(f"no consensus cells for {criterion.id} ({version})")
    return LabelSeries(tuple(pairs), label_set), excluded


def consensus_vs_llm(
    store,
    registry: Registry,
    criterion: Criterion,
    version: str,
    llm_source: str = "run",
) -> AgreementReport:
    """Human-consensus vs LLM agreement, restricted to expert-agreeing cells."""
    series, excluded = consensus_series(store, registry, criterion, version, llm_source)
    return cohen_kappa(series, n_excluded=excluded)


def refinement_gain(
    store,
    registry: Registry,
    criterion: Criterion,
    llm_source: str = "run",
) -> tuple[AgreementReport, AgreementReport, float]:
    """Agreement under both prompt versions and the kappa delta between them."""
    initial = consensus_vs_llm(store, registry, criterion, "initial")
    if llm_source == "run" and not store.has_llm_annotations(criterion.id, "refined"):
        raise VersionMissing(f"no refined-prompt runs stored for {criterion.id}")
    refined = consensus_vs_llm(store, registry, criterion, "refined", llm_source=llm_source)
    return initial, refined, refined.kappa - initial.kappa


def render_report_table(reports: dict[str, AgreementReport]) -> str:
    """Fixed-width text table of agreement reports keyed by row label."""
    header = f"{'criterion':<24} {'n':>5} {'p_o':>8} {'p_e':>8} {'kappa':>8} {'band':<15}"
    lines = [header, "-" * len(header)]
    for name, rep in reports.items():
        lines.append(
            f"{name:<24} {rep.n:>5} {rep.p_o:>8.4f} {rep.p_e:>8.4f} "
            f"{rep.kappa:>8.4f} {rep.band:<15}"
        )
    return "\n".join(lines)


def render_confusion(m: ConfusionMatrix) -> str:
    """Text rendering with axis labels (rows = experts, cols = LLM)."""
    width = max(12, max((len(l) for l in m.labels), default=0) + 2)
    head = " " * width + "".join(f"{l:>{width}}" for l in m.labels) + "   (cols: LLM)"
    lines = [head]
    for label, row in zip(m.labels, m.cells):
        lines.append(f"{label:>{width}}" + "".join(f"{c:>{width}}" for c in row))
    lines.append("(rows: experts)")
    return "\n".join(lines)
