"""MiniMove: a compiler-backed language server for a small module language,
plus the benchmark harness that measures its IDE-scale optimizations.

The compiler front end (lexer, resilient parser, type checker) lives next to
the caching and analysis layers the server is built from; everything is
usable as a library without the server process.
"""

from .analysis import (
    AnalysisSnapshot,
    CompletionItemSet,
    DefInfo,
    HoverContent,
    SymbolIndex,
    merge_index,
    query_completion,
    query_definition,
    query_hover,
    symbolicate,
)
from .checker import (
    MissingInlineBodyError,
    TypingMode,
    check_package,
    expand_inline_calls,
    interface_of,
)
from .depcache import (
    LeanPackageEntry,
    WorkspaceCache,
    build_lean_entry,
    estimate_size,
)
from .engine import PipelineMetrics, Toggles, Workspace
from .lexer import Token, tokenize
from .packages import (
    PackageFingerprint,
    PackageManifest,
    detect_modified,
    fingerprint,
    load_manifest,
    resolve_graph,
)
from .parser import ParseOutcome, locate_access_context, parse_source
from .source import Diagnostic, LineIndex, SourceLocation
from .typed_ast import ModuleId, ModuleInterface, TypedPackage, TypeRepr

__version__ = "0.1.0"

__all__ = [
    "AnalysisSnapshot",
    "CompletionItemSet",
    "DefInfo",
    "Diagnostic",
    "HoverContent",
    "LeanPackageEntry",
    "LineIndex",
    "MissingInlineBodyError",
    "ModuleId",
    "ModuleInterface",
    "PackageFingerprint",
    "PackageManifest",
    "ParseOutcome",
    "PipelineMetrics",
    "SourceLocation",
    "SymbolIndex",
    "Toggles",
    "Token",
    "TypeRepr",
    "TypedPackage",
    "TypingMode",
    "Workspace",
    "WorkspaceCache",
    "build_lean_entry",
    "check_package",
    "detect_modified",
    "estimate_size",
    "expand_inline_calls",
    "fingerprint",
    "interface_of",
    "load_manifest",
    "locate_access_context",
    "merge_index",
    "parse_source",
    "query_completion",
    "query_definition",
    "query_hover",
    "resolve_graph",
    "symbolicate",
    "tokenize",
]
