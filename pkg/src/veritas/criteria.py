"""The six evaluation criteria: answer schemas, prompt versions, remapping.

Each criterion is a question with a fixed option set, in two prompt versions
(``initial`` and ``refined``).  Canonical option labels are English and act as
stable answer identifiers; per-language surface texts (Italian is the working
language, English mirrors it for documentation) are carried alongside and used
for rendering and response parsing.

Four-class ordinal answers collapse to binary at the midpoint: ranks {1, 2}
map to the quality-negative label, ranks {3, 4} to the quality-positive one.
Rank 1 is always the most negative option (Sensational / Biased / Inaccurate).
"""

from __future__ import annotations

import importlib.resources
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .errors import LanguageMissing, RegistryInvalid, SchemaMismatch, UnknownRank

CRITERION_IDS = ("HeadAcc", "LedePres", "NegTarg", "ArtBias", "SensLang", "Type")
VERSIONS = ("initial", "refined")
REQUIRED_LANGUAGES = ("it", "en")

# Canonical option labels per criterion and version; these are the framework
# constants, operator configs only vary question wording and localized texts.
_CANONICAL_OPTIONS = {
    "HeadAcc": {
        "initial": ("Inaccurate", "Quite inaccurate", "Quite accurate", "Accurate"),
        "refined": ("Inaccurate", "Quite inaccurate", "Quite accurate", "Accurate"),
    },
    "LedePres": {"initial": ("Yes", "No"), "refined": ("Yes", "No")},
    "NegTarg": {"initial": ("Yes", "No"), "refined": ("Yes", "No")},
    "ArtBias": {
        "initial": ("Biased", "Quite biased", "Quite unbiased", "Unbiased"),
        "refined": ("Biased", "Unbiased"),
    },
    "SensLang": {
        "initial": ("Sensational", "Quite sensational", "Quite neutral", "Neutral"),
        "refined": ("Sensational", "Neutral"),
    },
    "Type": {
        "initial": ("Straight news", "Editorial", "Investigation", "Satire", "Soft News"),
        "refined": ("Straight news", "Opinion", "Investigation", "Satire", "Soft News"),
    },
}
_NEGTARG_ISSUES = ("Politics", "Gender", "Religion", "Other")

_OPTIONS_HEADER = {"it": "Opzioni", "en": "Options"}
_SUB_HEADER = {
    "it": "Se la risposta è Sì, indica il tema",
    "en": "If the answer is Yes, indicate the issue",
}


@dataclass(frozen=True)
class SchemaOption:
    rank: int
    label: str
    text: Mapping[str, str]

    def surface(self, language: str) -> str:
        try:
            return self.text[language]
        except KeyError:
            raise LanguageMissing(f"option {self.label!r} has no {language!r} text")


@dataclass(frozen=True)
class AnswerSchema:
    """An ordered option set; ``compound`` pairs a binary head with a nominal sub."""

    kind: str  # binary | ordinal4 | nominal | compound
    options: tuple[SchemaOption, ...]
    sub_schema: AnswerSchema | None = None

    def labels(self) -> tuple[str, ...]:
        return tuple(o.label for o in self.options)

    def rank_of(self, label: str) -> int:
        for o in self.options:
            if o.label == label:
                return o.rank
        raise UnknownRank(f"answer {label!r} not in schema {self.labels()}")

    def label_of(self, rank: int) -> str:
        for o in self.options:
            if o.rank == rank:
                return o.label
        raise UnknownRank(f"rank {rank} not in schema {self.labels()}")

    def has_label(self, label: str) -> bool:
        return any(o.label == label for o in self.options)

    @property
    def ordered(self) -> bool:
        return self.kind in ("binary", "ordinal4", "compound")


@dataclass(frozen=True)
class Criterion:
    id: str
    name: str
    meta: bool
    question: Mapping[str, Mapping[str, str]]  # version -> language -> text
    schema: Mapping[str, AnswerSchema]  # version -> schema

    def initial_schema(self) -> AnswerSchema:
        return self.schema["initial"]


@dataclass(frozen=True)
class RemapRule:
    """Collapse of a criterion's four-class answers to two classes.

    ``mapping`` is empty for criteria whose answers are already binary or
    nominal; those pass through unchanged.
    """

    criterion_id: str
    mapping: Mapping[int, str]
    source: AnswerSchema
    binary_labels: tuple[str, str] | None = None  # (negative, positive)


class Registry:
    """Immutable criteria registry; safe for concurrent reads."""

    def __init__(self, criteria: Iterable[Criterion]):
        self._criteria = {c.id: c for c in criteria}

    def __iter__(self):
        return iter(self._criteria.values())

    def __len__(self):
        return len(self._criteria)

    def ids(self) -> tuple[str, ...]:
        return tuple(self._criteria)

    def get(self, criterion_id: str) -> Criterion:
        try:
            return self._criteria[criterion_id]
        except KeyError:
            raise SchemaMismatch(f"unknown criterion {criterion_id!r}")

    def remap_rule(self, criterion_id: str) -> RemapRule:
        crit = self.get(criterion_id)
        initial = crit.schema["initial"]
        refined = crit.schema["refined"]
        if initial.kind == "ordinal4" and refined.kind == "binary":
            neg, pos = refined.labels()
            return RemapRule(
                criterion_id=criterion_id,
                mapping={1: neg, 2: neg, 3: pos, 4: pos},
                source=initial,
                binary_labels=(neg, pos),
            )
        if initial.kind == "ordinal4":
            # ordinal criterion whose refined schema stays four-class (HeadAcc):
            # the midpoint collapse uses the endpoint labels as the two classes.
            neg, pos = initial.label_of(1), initial.label_of(4)
            return RemapRule(
                criterion_id=criterion_id,
                mapping={1: neg, 2: neg, 3: pos, 4: pos},
                source=initial,
                binary_labels=(neg, pos),
            )
        return RemapRule(criterion_id=criterion_id, mapping={}, source=initial)

    def to_refined_label(self, criterion_id: str, label: str) -> str:
        """Translate an initial-version answer into the refined option set."""
        crit = self.get(criterion_id)
        initial, refined = crit.schema["initial"], crit.schema["refined"]
        if initial.labels() == refined.labels():
            if not initial.has_label(label):
                raise UnknownRank(f"{label!r} not valid for {criterion_id}")
            return label
        if initial.kind == "ordinal4" and refined.kind == "binary":
            rule = self.remap_rule(criterion_id)
            return remap_answer(label, rule)
        # positional rename (Type: Editorial -> Opinion)
        return refined.label_of(initial.rank_of(label))


def _parse_schema(doc: dict, where: str) -> AnswerSchema:
    kind = doc.get("kind")
    if kind not in ("binary", "ordinal4", "nominal", "compound"):
        raise RegistryInvalid(f"{where}: unknown schema kind {kind!r}")
    options = []
    for raw in doc.get("options", []):
        if not isinstance(raw.get("rank"), int) or not raw.get("label"):
            raise RegistryInvalid(f"{where}: option needs integer rank and label")
        options.append(SchemaOption(rank=raw["rank"], label=raw["label"], text=dict(raw.get("text", {}))))
    sub = None
    if kind == "compound":
        if "sub" not in doc:
            raise RegistryInvalid(f"{where}: compound schema needs a sub schema")
        sub = _parse_schema(doc["sub"], where + ".sub")
        if sub.kind != "nominal":
            raise RegistryInvalid(f"{where}: compound sub schema must be nominal")
    elif "sub" in doc:
        raise RegistryInvalid(f"{where}: only compound schemas carry a sub schema")
    return AnswerSchema(kind=kind, options=tuple(options), sub_schema=sub)


def _validate_schema(schema: AnswerSchema, expected: tuple[str, ...], where: str) -> None:
    n = {"binary": 2, "ordinal4": 4, "compound": 2}.get(schema.kind, len(schema.options))
    if len(schema.options) != n:
        raise RegistryInvalid(f"{where}: {schema.kind} schema must have {n} options")
    ranks = tuple(o.rank for o in schema.options)
    if ranks != tuple(range(1, len(schema.options) + 1)):
        raise RegistryInvalid(f"{where}: option ranks must be 1..{len(schema.options)} in order")
    if schema.labels() != expected:
        raise RegistryInvalid(f"{where}: options must be {expected}, got {schema.labels()}")
    lowered = [o.label.lower() for o in schema.options]
    if len(set(lowered)) != len(lowered):
        raise RegistryInvalid(f"{where}: option labels must be unique case-insensitively")
    for lang in REQUIRED_LANGUAGES:
        surfaces = []
        for o in schema.options:
            if lang not in o.text or not o.text[lang].strip():
                raise RegistryInvalid(f"{where}: option {o.label!r} missing {lang!r} text")
            surfaces.append(o.text[lang].lower())
        if len(set(surfaces)) != len(surfaces):
            raise RegistryInvalid(f"{where}: {lang} option texts must be unique")


def registry_load(config: dict | str | Path | None = None) -> Registry:
    """Load and validate a criteria registry; ``None`` loads the shipped default.

    Raises ``RegistryInvalid`` on the first violated invariant.
    """
    if config is None:
        config = json.loads(
            importlib.resources.files("veritas.data").joinpath("criteria_config.json").read_text("utf-8")
        )
    elif isinstance(config, (str, Path)):
        config = json.loads(Path(config).read_text("utf-8"))

    entries = config.get("criteria")
    if not isinstance(entries, list):
        raise RegistryInvalid("config must carry a 'criteria' list")

    criteria: list[Criterion] = []
    seen = set()
    for entry in entries:
        cid = entry.get("id")
        if cid not in CRITERION_IDS:
            raise RegistryInvalid(f"unknown criterion id {cid!r}")
        if cid in seen:
            raise RegistryInvalid(f"criterion {cid} appears more than once")
        seen.add(cid)

        questions: dict[str, dict[str, str]] = {}
        for version in VERSIONS:
            qv = entry.get("question", {}).get(version)
            if not isinstance(qv, dict):
                raise RegistryInvalid(f"{cid}: missing {version} question")
            for lang in REQUIRED_LANGUAGES:
                if not qv.get(lang, "").strip():
                    raise RegistryInvalid(f"{cid}: missing {lang} text for {version} question")
            questions[version] = dict(qv)

        schemas: dict[str, AnswerSchema] = {}
        for version in VERSIONS:
            sdoc = entry.get("schema", {}).get(version)
            if not isinstance(sdoc, dict):
                raise RegistryInvalid(f"{cid}: missing {version} schema")
            schema = _parse_schema(sdoc, f"{cid}.{version}")
            _validate_schema(schema, _CANONICAL_OPTIONS[cid][version], f"{cid}.{version}")
            if cid == "NegTarg":
                if schema.kind != "compound":
                    raise RegistryInvalid("NegTarg schema must be compound")
                _validate_schema(schema.sub_schema, _NEGTARG_ISSUES, f"{cid}.{version}.sub")
            schemas[version] = schema

        meta = bool(entry.get("meta", False))
        if (cid == "Type") != meta:
            raise RegistryInvalid(f"{cid}: only Type is flagged as meta-criterion")
        criteria.append(
            Criterion(id=cid, name=entry.get("name", cid), meta=meta, question=questions, schema=schemas)
        )

    missing = [cid for cid in CRITERION_IDS if cid not in seen]
    if missing:
        raise RegistryInvalid(f"missing criteria: {missing}")
    criteria.sort(key=lambda c: CRITERION_IDS.index(c.id))
    return Registry(criteria)


def registry_dump(registry: Registry) -> dict:
    """Serialize a registry back to its config document form."""

    def schema_doc(schema: AnswerSchema) -> dict:
        doc = {
            "kind": schema.kind,
            "options": [
                {"rank": o.rank, "label": o.label, "text": dict(o.text)} for o in schema.options
            ],
        }
        if schema.sub_schema is not None:
            doc["sub"] = schema_doc(schema.sub_schema)
        return doc

    return {
        "criteria": [
            {
                "id": c.id,
                "name": c.name,
                "meta": c.meta,
                "question": {v: dict(c.question[v]) for v in VERSIONS},
                "schema": {v: schema_doc(c.schema[v]) for v in VERSIONS},
            }
            for c in registry
        ]
    }


def render_question(criterion: Criterion, version: str, language: str) -> str:
    """Question text plus the enumerated option list, in fixed order."""
    qv = criterion.question.get(version, {})
    if language not in qv:
        raise LanguageMissing(f"{criterion.id}: no {language!r} text for {version} question")
    schema = criterion.schema[version]
    lines = [qv[language], "", _OPTIONS_HEADER.get(language, "Options") + ":"]
    for i, opt in enumerate(schema.options, start=1):
        lines.append(f"{i}. {opt.surface(language)}")
    if schema.kind == "compound":
        lines.append("")
        lines.append(_SUB_HEADER.get(language, _SUB_HEADER["en"]) + ":")
        for i, opt in enumerate(schema.sub_schema.options, start=1):
            lines.append(f"{i}. {opt.surface(language)}")
    return "\n".join(lines)


def remap_answer(answer: str, rule: RemapRule) -> str:
    """Apply a four-to-two collapse; binary/nominal answers pass through."""
    if not rule.mapping:
        if not rule.source.has_label(answer):
            raise UnknownRank(f"{answer!r} not valid for {rule.criterion_id}")
        return answer
    rank = rule.source.rank_of(answer)
    try:
        return rule.mapping[rank]
    except KeyError:
        raise UnknownRank(f"rank {rank} not covered by remap rule for {rule.criterion_id}")


def separation(a: str, b: str, schema: AnswerSchema) -> int | None:
    """Degrees of separation |rank(a) - rank(b)|; ``None`` for nominal schemas."""
    if not schema.has_label(a) or not schema.has_label(b):
        raise SchemaMismatch(f"answers ({a!r}, {b!r}) not both in schema {schema.labels()}")
    if not schema.ordered:
        return None
    return abs(schema.rank_of(a) - schema.rank_of(b))


def is_relevant_disagreement(a: str, b: str, criterion: Criterion) -> bool:
    """Whether a human-human conflict is strong enough to matter.

    Binary and compound-head conflicts always are; four-class conflicts need
    at least two degrees of separation; nominal conflicts always are.
    """
    if a == b:
        return False
    schema = criterion.initial_schema()
    if schema.kind in ("binary", "compound"):
        return True
    if schema.kind == "ordinal4":
        return separation(a, b, schema) >= 2
    return True  # nominal
