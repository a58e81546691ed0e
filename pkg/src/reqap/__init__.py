"""Operator-tree question answering over heterogeneous personal event data."""

from .decompose import GeneratorClient, ScriptedDecomposer, resolve
from .engine import ExecutionResult, execute, make_context
from .events import Event, EventStore, Source, dump_store, load_store, verbalize_event
from .extraction import RuleBasedGenerator, extract, parse_typed
from .ingest import StoreBuilder, ingest_export
from .plan import parse_plan, render_plan, validate_plan
from .retrieval import LexicalScorer, OracleClassifiers, RetrievalConfig, retrieve
from .values import TimeSpan

__version__ = "0.1.0"

__all__ = [
    "Event",
    "EventStore",
    "ExecutionResult",
    "GeneratorClient",
    "LexicalScorer",
    "OracleClassifiers",
    "RetrievalConfig",
    "RuleBasedGenerator",
    "ScriptedDecomposer",
    "Source",
    "StoreBuilder",
    "TimeSpan",
    "dump_store",
    "execute",
    "extract",
    "ingest_export",
    "load_store",
    "make_context",
    "parse_plan",
    "parse_typed",
    "render_plan",
    "resolve",
    "retrieve",
    "validate_plan",
    "verbalize_event",
    "__version__",
]
