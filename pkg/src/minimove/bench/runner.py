"""Benchmark runner: drives a server over the wire, samples memory, and
writes machine-readable reports.

Protocol per package: open every source document, let the initial compile
settle, then run warmup + measurement iterations. Each iteration sends one
content-changing ``didChange`` to the designated edit file and waits for the
server's metrics notification, recording both the server-reported compile /
analysis times and the end-to-end change→answer latency observed here, plus
the server's resident set size. With several packages the cycle runs per
package in sequence and the memory aggregate comes from the *last* package's
measurement phase, so it reflects the cumulative footprint of the whole
workspace.

Aggregates (mean/median/p95) cover measurement-phase samples only.
"""

from __future__ import annotations

import dataclasses
import json
import os
import platform
import statistics
import time
from dataclasses import dataclass, field
from typing import Optional

import psutil

from ..server import path_to_uri
from .client import ClientError, LspClient, ResponseTimeout, ServerCrashed
from .corpus import load_bench_manifest

DEFAULT_WARMUP = 20
DEFAULT_ITERS = 20


@dataclass(frozen=True)
class IterationSample:
    package: str
    index: int
    phase: str  # "warmup" | "measurement"
    compile_ms: float
    analysis_ms: float
    end_to_end_ms: float
    rss_bytes: int

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class BenchReport:
    config: dict
    environment: dict
    samples: list[IterationSample]
    aggregates: dict
    failure: Optional[str] = None
    log: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "environment": self.environment,
            "aggregates": self.aggregates,
            "sample_count": len(self.samples),
            "failure": self.failure,
        }


def sample_rss(pid: int) -> int:
    """Resident set size in bytes via the platform's process-status interface."""
    try:
        return psutil.Process(pid).memory_info().rss
    except psutil.NoSuchProcess as exc:
        raise ProcessLookupError(f"no such process: {pid}") from exc


def _environment_note() -> dict:
    cpu = platform.processor() or ""
    if not cpu and os.path.exists("/proc/cpuinfo"):
        with open("/proc/cpuinfo", "r", encoding="utf-8", errors="replace") as fh:
            for line in fh:
                if line.lower().startswith("model name"):
                    cpu = line.split(":", 1)[1].strip()
                    break
    return {
        "os": platform.platform(),
        "cpu": cpu,
        "python": platform.python_version(),
    }


def _summary(values: list[float]) -> dict:
    if not values:
        return {"mean": None, "median": None, "p95": None}
    ordered = sorted(values)
    p95_index = max(0, min(len(ordered) - 1, int(round(0.95 * len(ordered))) - 1))
    return {
        "mean": statistics.fmean(ordered),
        "median": statistics.median(ordered),
        "p95": ordered[p95_index],
    }


def samples_path(report_path: str) -> str:
    base = report_path[:-5] if report_path.endswith(".json") else report_path
    return base + ".samples.jsonl"


def _discover_targets(workspace: str) -> tuple[list[str], dict[str, str]]:
    manifest = load_bench_manifest(workspace)
    if manifest is not None:
        return manifest["user_packages"], manifest.get("edit_files", {})
    # Fallback: treat every package nobody depends on as a target.
    from ..packages import MANIFEST_NAME, load_manifest

    packages = [
        d
        for d in sorted(os.listdir(workspace))
        if os.path.exists(os.path.join(workspace, d, MANIFEST_NAME))
    ]
    depended: set[str] = set()
    for name in packages:
        manifest_obj = load_manifest(os.path.join(workspace, name, MANIFEST_NAME))
        for rel in manifest_obj.dependencies.values():
            depended.add(
                os.path.basename(os.path.normpath(os.path.join(workspace, name, rel)))
            )
    targets = [p for p in packages if p not in depended] or packages
    return targets, {}


def _edit_text(base: str, iteration: int, breaking: bool) -> str:
    if breaking and iteration % 2 == 1:
        # Inject one type error; the next iteration removes it again.
        closing = base.rstrip()
        assert closing.endswith("}")
        return (
            closing[:-1]
            + "    fun bench_broken(): u64 { true }\n}\n"
            + f"// tick {iteration}\n"
        )
    return base + f"// tick {iteration}\n"


def run_bench(
    workspace: str,
    server_cmd: list[str],
    warmup: int = DEFAULT_WARMUP,
    iters: int = DEFAULT_ITERS,
    toggles: Optional[dict] = None,
    report_path: Optional[str] = None,
    breaking_edit: bool = False,
    timeout: float = 30.0,
    env: Optional[dict] = None,
) -> BenchReport:
    workspace = os.path.abspath(workspace)
    targets, edit_files = _discover_targets(workspace)
    spec = (load_bench_manifest(workspace) or {}).get("spec")
    config = {
        "workspace": workspace,
        "server": server_cmd,
        "warmup": warmup,
        "iters": iters,
        "toggles": dict(toggles or {}),
        "breaking_edit": breaking_edit,
        "spec": spec,
        "packages": targets,
    }
    report = BenchReport(
        config=config,
        environment=_environment_note(),
        samples=[],
        aggregates={},
    )

    client = LspClient(server_cmd, cwd=workspace, env=env)
    report.log = client.log
    cursor = 0
    last_package_root: Optional[str] = None
    try:
        client.request(
            "initialize",
            {
                "processId": os.getpid(),
                "rootUri": path_to_uri(workspace),
                "capabilities": {},
                "initializationOptions": dict(toggles or {}),
            },
            timeout=timeout,
        )
        client.notify("initialized", {})

        for target in targets:
            root = os.path.join(workspace, target)
            last_package_root = root
            sources_dir = os.path.join(root, "sources")
            source_files = sorted(
                os.path.join(sources_dir, f)
                for f in os.listdir(sources_dir)
                if f.endswith(".mini")
            )
            versions: dict[str, int] = {}
            for path in source_files:
                with open(path, "r", encoding="utf-8") as fh:
                    text = fh.read()
                versions[path] = 1
                client.notify(
                    "textDocument/didOpen",
                    {
                        "textDocument": {
                            "uri": path_to_uri(path),
                            "languageId": "minimove",
                            "version": 1,
                            "text": text,
                        }
                    },
                )
            # Initial compile(s) from the open burst; settle before measuring.
            _, cursor = client.next_notification(
                cursor,
                "mini/metrics",
                lambda p: p.get("package") == root,
                timeout=max(timeout, 60.0),
            )
            cursor = client.drain_notifications(
                cursor, "mini/metrics", quiet=0.3,
                predicate=lambda p: p.get("package") == root,
            )

            edit_rel = edit_files.get(target)
            edit_path = (
                os.path.join(workspace, edit_rel) if edit_rel else source_files[0]
            )
            with open(edit_path, "r", encoding="utf-8") as fh:
                base_text = fh.read()

            for i in range(warmup + iters):
                text = _edit_text(base_text, i, breaking_edit)
                versions[edit_path] = versions.get(edit_path, 1) + 1
                started = time.perf_counter()
                client.notify(
                    "textDocument/didChange",
                    {
                        "textDocument": {
                            "uri": path_to_uri(edit_path),
                            "version": versions[edit_path],
                        },
                        "contentChanges": [{"text": text}],
                    },
                )
                metrics, cursor = client.next_notification(
                    cursor,
                    "mini/metrics",
                    lambda p: p.get("package") == root,
                    timeout=timeout,
                )
                end_to_end_ms = (time.perf_counter() - started) * 1000.0
                report.samples.append(
                    IterationSample(
                        package=target,
                        index=i,
                        phase="warmup" if i < warmup else "measurement",
                        compile_ms=float(metrics.get("compile_ms", 0.0)),
                        analysis_ms=float(metrics.get("analysis_ms", 0.0)),
                        end_to_end_ms=end_to_end_ms,
                        rss_bytes=sample_rss(client.pid),
                    )
                )
    except (ClientError, ResponseTimeout, ServerCrashed, OSError) as exc:
        report.failure = f"{type(exc).__name__}: {exc}"
    finally:
        client.close()

    last_target = targets[-1] if targets else None
    measured = [
        s
        for s in report.samples
        if s.phase == "measurement" and s.package == last_target
    ]
    report.aggregates = {
        "compile_ms": _summary([s.compile_ms for s in measured]),
        "analysis_ms": _summary([s.analysis_ms for s in measured]),
        "end_to_end_ms": _summary([s.end_to_end_ms for s in measured]),
        "rss_bytes": _summary([float(s.rss_bytes) for s in measured]),
        "measured_package": last_target,
    }
    if report_path is not None:
        write_report(report, report_path)
    return report


def write_report(report: BenchReport, report_path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(report_path)), exist_ok=True)
    with open(samples_path(report_path), "w", encoding="utf-8") as fh:
        for sample in report.samples:
            fh.write(json.dumps(sample.to_dict(), sort_keys=True) + "\n")
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_report(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
