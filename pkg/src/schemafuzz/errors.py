"""Exception hierarchy shared across the package.

Errors are split by origin: loading/parsing the API document, rewriting
schemas, generating data, serialising requests, and running campaigns.
Transport failures are *never* defects of the target; the engine reports
them separately.
"""


class SchemafuzzError(Exception):
    """Base class for all errors raised by this package."""


# --- document loading -------------------------------------------------------

class ParseError(SchemafuzzError):
    """Input bytes are not well-formed JSON or YAML."""


class UnsupportedSpec(SchemafuzzError):
    """Document has neither a ``swagger: "2.0"`` nor an ``openapi: 3.x`` marker."""


class DanglingRef(SchemafuzzError):
    """A ``$ref`` pointer resolves to nothing in the document."""


class RemoteRef(SchemafuzzError):
    """A ``$ref`` points outside the document (network/file); rejected."""


class FatalSchemaError(SchemafuzzError):
    """No operation could be extracted from the document."""


# --- canonicalisation and validation ----------------------------------------

class SchemaStructureError(SchemafuzzError):
    """A schema keyword has a value of the wrong shape (e.g. string minimum)."""


class ComplexityBudgetExceeded(SchemafuzzError):
    """Rewriting expanded the schema past the node budget; fall back to raw."""


class UnsupportedKeyword(SchemafuzzError):
    """A keyword outside the supported subset would change validity."""

    def __init__(self, keyword: str, message: str = ""):
        self.keyword = keyword
        super().__init__(message or f"unsupported validity-affecting keyword: {keyword!r}")


class NothingToNegate(SchemafuzzError):
    """Every instance of the schema's type is valid; negative testing impossible."""


# --- generation --------------------------------------------------------------

class UnsatisfiableSchema(SchemafuzzError):
    """Asked to generate from the FALSE schema."""


class ExhaustedRejectionBudget(SchemafuzzError):
    """A filtered draw failed its predicate too many times in a row."""

    def __init__(self, message: str, schema=None):
        self.schema = schema
        super().__init__(message)


class UnsupportedPattern(SchemafuzzError):
    """Regex outside the supported subset; caller falls back to filtering."""


class ChoiceError(SchemafuzzError):
    """A replayed choice sequence could not be decoded."""


# --- transport ---------------------------------------------------------------

class MissingRequiredParameter(SchemafuzzError):
    """build_test_case was not given a value for a required parameter."""


class UnencodableValue(SchemafuzzError):
    """A value cannot be carried where it was asked to go (e.g. CR/LF in a header)."""


class UnknownMediaType(SchemafuzzError):
    """No serialiser registered for the media type."""

    def __init__(self, media_type: str):
        self.media_type = media_type
        super().__init__(f"no serialiser for media type {media_type!r}")


class TransportError(SchemafuzzError):
    """Connection-level failure: refused, timeout, TLS. Infrastructure, not a defect."""

    def __init__(self, kind: str, message: str):
        self.kind = kind  # "connection" | "timeout" | "tls" | "protocol"
        super().__init__(f"{kind}: {message}")


# --- stateful ----------------------------------------------------------------

class InvalidExpression(SchemafuzzError):
    """Runtime expression failed to parse."""

    def __init__(self, expression: str, position: int, message: str):
        self.expression = expression
        self.position = position
        super().__init__(f"{message} at position {position} in {expression!r}")


class EvaluationError(SchemafuzzError):
    """Runtime expression could not be evaluated against the captured pair."""


class NoEnabledTransition(SchemafuzzError):
    """State machine has no move to make; sequences end early, not fatally."""


# --- engine ------------------------------------------------------------------

class NotReproducible(SchemafuzzError):
    """A failure did not reproduce on replay; reported flaky with the original case."""
