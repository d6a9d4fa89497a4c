"""schemafuzz: a schema-derived web API fuzzer.

Loads an OpenAPI 2/3 document, canonicalises its JSON Schemas, generates
valid and deliberately-invalid requests, runs unit and link-driven stateful
campaigns over HTTP (or in-process), checks semantic response properties,
shrinks failures, and reports deduplicated defects.
"""

__version__ = "0.1.0"

from .canonical import CanonicalSchema, canonicalise, merge_constraints, negate_for_testing
from .validation import ValidationResult, validate_instance

__all__ = [
    "CanonicalSchema",
    "CampaignConfig",
    "Engine",
    "ValidationResult",
    "canonicalise",
    "merge_constraints",
    "negate_for_testing",
    "run_campaign",
    "validate_instance",
    "__version__",
]


def __getattr__(name):
    # engine pulls in the whole stack; import lazily to keep light uses light
    if name in ("CampaignConfig", "Engine", "run_campaign"):
        from . import engine
        return getattr(engine, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
