"""``minimove-bench``: generate corpora, run benchmarks, compare reports."""

from __future__ import annotations

import argparse
import json
import shlex
import sys
from typing import Optional

from .compare import CompareError, compare
from .corpus import CorpusSpec, count_nonempty_lines, generate_corpus
from .runner import DEFAULT_ITERS, DEFAULT_WARMUP, load_report, run_bench


def _parse_toggles(pairs: list[str]) -> dict:
    toggles: dict = {}
    for pair in pairs:
        if "=" not in pair:
            raise SystemExit(f"--toggle expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        toggles[key] = value.strip().lower() in ("1", "true", "yes", "on")
    return toggles


def _cmd_gen(args: argparse.Namespace) -> int:
    if args.spec:
        with open(args.spec, "r", encoding="utf-8") as fh:
            spec = CorpusSpec.from_dict(json.load(fh))
    else:
        spec = CorpusSpec(
            user_modules=args.user_modules,
            funs_per_module=args.funs_per_module,
            dep_packages=args.dep_packages,
            dep_modules_per_package=args.dep_modules_per_package,
            shared_dep=args.shared_dep,
            seed=args.seed,
            user_packages=args.user_packages,
        )
    manifest = generate_corpus(spec, args.out)
    lines = count_nonempty_lines(args.out)
    print(
        json.dumps(
            {"out": args.out, "nonempty_lines": lines, **manifest}, indent=2, sort_keys=True
        )
    )
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    report = run_bench(
        workspace=args.workspace,
        server_cmd=shlex.split(args.server),
        warmup=args.warmup,
        iters=args.iters,
        toggles=_parse_toggles(args.toggle),
        report_path=args.report,
        breaking_edit=args.breaking_edit,
        timeout=args.timeout,
    )
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return 1 if report.failure else 0


def _cmd_compare(args: argparse.Namespace) -> int:
    try:
        result = compare(
            load_report(args.before),
            load_report(args.after),
            min_speedup=args.min_speedup,
            min_mem_reduction=args.min_mem_reduction,
        )
    except CompareError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(result.to_dict(), indent=2, sort_keys=True))
    return 0 if result.passed else 1


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="minimove-bench")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic workspace")
    gen.add_argument("--out", required=True)
    gen.add_argument("--spec", help="JSON file with corpus spec fields")
    gen.add_argument("--user-modules", type=int, default=3)
    gen.add_argument("--funs-per-module", type=int, default=8)
    gen.add_argument("--dep-packages", type=int, default=1)
    gen.add_argument("--dep-modules-per-package", type=int, default=2)
    gen.add_argument("--shared-dep", action="store_true", default=True)
    gen.add_argument("--no-shared-dep", dest="shared_dep", action="store_false")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--user-packages", type=int, default=1)
    gen.set_defaults(func=_cmd_gen)

    run = sub.add_parser("run", help="benchmark a server against a workspace")
    run.add_argument("--workspace", required=True)
    run.add_argument("--server", required=True, help="server command line")
    run.add_argument("--warmup", type=int, default=DEFAULT_WARMUP)
    run.add_argument("--iters", type=int, default=DEFAULT_ITERS)
    run.add_argument(
        "--toggle", action="append", default=[], metavar="KEY=VALUE",
        help="optimization toggle, e.g. preCompiledDeps=false",
    )
    run.add_argument("--report", help="write aggregate JSON here")
    run.add_argument("--breaking-edit", action="store_true")
    run.add_argument("--timeout", type=float, default=30.0)
    run.set_defaults(func=_cmd_run)

    cmp_parser = sub.add_parser("compare", help="compare two reports (before after)")
    cmp_parser.add_argument("before")
    cmp_parser.add_argument("after")
    cmp_parser.add_argument("--min-speedup", type=float)
    cmp_parser.add_argument("--min-mem-reduction", type=float)
    cmp_parser.set_defaults(func=_cmd_compare)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
