"""Benchmark harness: corpus generation, an LSP test client, the runner, and
report comparison."""

from .client import LspClient
from .compare import CompareError, CompareResult, compare
from .corpus import CorpusSpec, count_nonempty_lines, generate_corpus
from .runner import BenchReport, IterationSample, run_bench, sample_rss

__all__ = [
    "BenchReport",
    "CompareError",
    "CompareResult",
    "CorpusSpec",
    "IterationSample",
    "LspClient",
    "compare",
    "count_nonempty_lines",
    "generate_corpus",
    "run_bench",
    "sample_rss",
]
