"""Pairwise comparison of two bench reports (before vs after a change).

Ratios are before/after, so a compile speedup reads as "N× faster"; memory
is reported as a fractional reduction of the before value. Optional
thresholds turn the comparison into a pass/fail check for CI.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


class CompareError(Exception):
    """Reports are not comparable (different corpus or iteration counts)."""


_TIME_METRICS = ("compile_ms", "analysis_ms", "end_to_end_ms")


@dataclass
class CompareResult:
    ratios: dict
    deltas: dict
    memory_reduction: Optional[float]
    checks: dict
    passed: bool

    def to_dict(self) -> dict:
        return {
            "ratios": self.ratios,
            "deltas": self.deltas,
            "memory_reduction": self.memory_reduction,
            "checks": self.checks,
            "pass": self.passed,
        }


def _mean(report: dict, metric: str) -> Optional[float]:
    value = report.get("aggregates", {}).get(metric, {}).get("mean")
    return float(value) if value is not None else None


def compare(
    before: dict,
    after: dict,
    min_speedup: Optional[float] = None,
    min_mem_reduction: Optional[float] = None,
) -> CompareResult:
    cfg_a, cfg_b = before.get("config", {}), after.get("config", {})
    for key in ("warmup", "iters", "spec"):
        if cfg_a.get(key) != cfg_b.get(key):
            raise CompareError(
                f"reports are not comparable: config {key!r} differs "
                f"({cfg_a.get(key)!r} vs {cfg_b.get(key)!r})"
            )
    ratios: dict = {}
    deltas: dict = {}
    for metric in _TIME_METRICS:
        a, b = _mean(before, metric), _mean(after, metric)
        if a is None or b is None:
            ratios[metric] = None
            deltas[metric] = None
            continue
        ratios[metric] = (a / b) if b > 0 else float("inf")
        deltas[metric] = a - b
    rss_a, rss_b = _mean(before, "rss_bytes"), _mean(after, "rss_bytes")
    if rss_a and rss_b:
        memory_reduction = (rss_a - rss_b) / rss_a
        deltas["rss_bytes"] = rss_a - rss_b
        ratios["rss_bytes"] = rss_a / rss_b if rss_b else None
    else:
        memory_reduction = None

    checks: dict = {}
    passed = True
    if min_speedup is not None:
        ok = ratios.get("compile_ms") is not None and ratios["compile_ms"] >= min_speedup
        checks["min_speedup"] = {"required": min_speedup, "ok": ok}
        passed = passed and ok
    if min_mem_reduction is not None:
        ok = memory_reduction is not None and memory_reduction >= min_mem_reduction
        checks["min_mem_reduction"] = {"required": min_mem_reduction, "ok": ok}
        passed = passed and ok
    return CompareResult(
        ratios=ratios,
        deltas=deltas,
        memory_reduction=memory_reduction,
        checks=checks,
        passed=passed,
    )
