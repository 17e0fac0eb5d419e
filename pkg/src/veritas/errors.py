"""Exception types used across the toolkit.

Every exception carries a stable ``code`` string so the CLI and the HTTP API
can surface machine-readable failures without string-matching messages.
"""


class VeritasError(Exception):
    """Base class; ``code`` identifies the failure kind."""

    code = "VERITAS_ERROR"

    def __init__(self, message: str = "", **context):
        super().__init__(message or self.code)
        self.context = context


# corpus
class SelectorInvalid(VeritasError):
    code = "SELECTOR_INVALID"


class ExtractionEmpty(VeritasError):
    code = "EXTRACTION_EMPTY"


class InsufficientArticles(VeritasError):
    code = "INSUFFICIENT_ARTICLES"


# criteria
class RegistryInvalid(VeritasError):
    code = "REGISTRY_INVALID"


class LanguageMissing(VeritasError):
    code = "LANGUAGE_MISSING"


class UnknownRank(VeritasError):
    code = "UNKNOWN_RANK"


class SchemaMismatch(VeritasError):
    code = "SCHEMA_MISMATCH"


# llm
class UnsanitizedArticle(VeritasError):
    code = "UNSANITIZED_ARTICLE"


class ResponseUnparseable(VeritasError):
    code = "RESPONSE_UNPARSEABLE"


class ResponseAmbiguous(VeritasError):
    code = "RESPONSE_AMBIGUOUS"


class SubanswerMissing(VeritasError):
    code = "SUBANSWER_MISSING"


class InconsistentResponses(VeritasError):
    """Three distinct parsed answers; carries the final-less annotation."""

    code = "INCONSISTENT_RESPONSES"

    def __init__(self, message: str = "", annotation=None, **context):
        super().__init__(message, **context)
        self.annotation = annotation


class BackendError(VeritasError):
    code = "BACKEND_ERROR"


class FixtureMiss(VeritasError):
    code = "FIXTURE_MISS"


# annotations
class DuplicateAnnotation(VeritasError):
    code = "DUPLICATE_ANNOTATION"


class SchemaViolation(VeritasError):
    code = "SCHEMA_VIOLATION"


class CoverageIncomplete(VeritasError):
    code = "COVERAGE_INCOMPLETE"


class RowInvalid(VeritasError):
    code = "ROW_INVALID"

    def __init__(self, message: str = "", row: int = -1, cause: str = "", **context):
        super().__init__(message, **context)
        self.row = row
        self.cause = cause


# agreement
class EmptySeries(VeritasError):
    code = "EMPTY_SERIES"


class OutOfRange(VeritasError):
    code = "OUT_OF_RANGE"


class NoConsensusCells(VeritasError):
    code = "NO_CONSENSUS_CELLS"


class VersionMissing(VeritasError):
    code = "VERSION_MISSING"


# adjudication
class CaseNotFound(VeritasError):
    code = "CASE_NOT_FOUND"


class NoLlmAnswer(VeritasError):
    code = "NO_LLM_ANSWER"


class NoNonborderlineCases(VeritasError):
    code = "NO_NONBORDERLINE_CASES"
