"""Walkthrough: Cohen's kappa, interpretation bands, and the binary collapse.

Run:  python3 demos/demo_agreement.py
"""

from veritas.agreement import (
    LabelSeries,
    cohen_kappa,
    confusion_from_series,
    interpret_kappa,
    matrix_collapse,
    render_confusion,
    render_report_table,
)
from veritas.criteria import registry_load, remap_answer

registry = registry_load()

print("=== 1. kappa from an explicit 2x2 table ===")
pairs = [("Y", "Y")] * 20 + [("Y", "N")] * 5 + [("N", "Y")] * 10 + [("N", "N")] * 15
report = cohen_kappa(LabelSeries(tuple(pairs), ("Y", "N")))
print(f"n={report.n}  p_o={report.p_o}  p_e={report.p_e}  kappa={report.kappa}  band={report.band}")
print(render_confusion(report.confusion))

print()
print("=== 2. interpretation bands ===")
for value in (0.05, 0.21, 0.45, 0.7089, 0.85, 0.95):
    print(f"  kappa={value:>6}: {interpret_kappa(value)}")

print()
print("=== 3. four-class series and its midpoint collapse ===")
schema = registry.get("SensLang").initial_schema()
labels = schema.labels()
import random

rng = random.Random(6)
series = LabelSeries(tuple((rng.choice(labels), rng.choice(labels)) for _ in range(80)), labels)
full_report = cohen_kappa(series)
rule = registry.remap_rule("SensLang")
collapsed_series = LabelSeries(
    tuple((remap_answer(a, rule), remap_answer(b, rule)) for a, b in series.pairs),
    rule.binary_labels,
)
binary_report = cohen_kappa(collapsed_series)
print(render_report_table({"SensLang 4-class": full_report, "SensLang binary": binary_report}))
print()
print("block-summing the 4x4 matrix gives the same 2x2 as remapping the labels:",
      matrix_collapse(confusion_from_series(series), rule).cells
      == binary_report.confusion.cells)
