import os
import sys
import textwrap

import pytest

SRC = os.path.join(os.path.dirname(__file__), os.pardir, "src")
if os.path.abspath(SRC) not in sys.path:
    sys.path.insert(0, os.path.abspath(SRC))


def server_command() -> list[str]:
    return [sys.executable, "-m", "minimove.server"]


def subprocess_env() -> dict:
    env = dict(os.environ)
    env["PYTHONPATH"] = os.path.abspath(SRC) + os.pathsep + env.get("PYTHONPATH", "")
    return env


def write_package(parent, name, modules, deps=None):
    """Writes a package directory: minipkg.toml plus sources/<file>.mini.

    ``modules`` maps file stem -> source text (dedented); ``deps`` maps
    dependency name -> relative path.
    """
    root = parent / name
    (root / "sources").mkdir(parents=True)
    manifest = [f'name = "{name}"', ""]
    if deps:
        manifest.append("[dependencies]")
        for dep_name, rel in sorted(deps.items()):
            manifest.append(f'{dep_name} = "{rel}"')
    (root / "minipkg.toml").write_text("\n".join(manifest) + "\n", encoding="utf-8")
    for stem, text in modules.items():
        (root / "sources" / f"{stem}.mini").write_text(
            textwrap.dedent(text), encoding="utf-8"
        )
    return str(root)


def parse_modules(sources: dict[str, str]):
    """Parses a dict of file id -> source text (dedented)."""
    from minimove.parser import parse_source

    return {
        fid: parse_source(fid, textwrap.dedent(text)) for fid, text in sources.items()
    }


def check_sources(sources: dict[str, str], deps=None, mode=None):
    """Parses and checks in-memory sources; returns (typed, all diagnostics,
    parse outcomes)."""
    from minimove.checker import TypingMode, check_package

    outcomes = parse_modules(sources)
    parse_diags = [d for o in outcomes.values() for d in o.diagnostics]
    typed, check_diags = check_package(
        {fid: o.module for fid, o in outcomes.items()},
        deps,
        mode or TypingMode(),
    )
    return typed, parse_diags + check_diags, outcomes


STD_SRC = """
    module 0x1::std {
        record Balance { amount: u64, frozen: bool }
        public fun min(a: u64, b: u64): u64 { if a < b { a } else { b } }
        public inline fun double(x: u64): u64 { x + x }
        public fun amount_of(b: Balance): u64 { b.amount }
        fun internal_helper(x: u64): u64 { x * 2 }
        public fun scaled(x: u64): u64 { internal_helper(x) + 1 }
    }
"""


@pytest.fixture
def std_package(tmp_path):
    return write_package(tmp_path, "std", {"std": STD_SRC})
