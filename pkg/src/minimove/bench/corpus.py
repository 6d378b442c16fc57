"""Deterministic synthetic workspace generator.

A corpus is a workspace of dependency packages (optionally sharing one
``std``) plus user packages whose modules exercise every analysis path:
import declarations with and without aliases, alias and full-path calls into
other modules and packages, local calls, inline calls (including
cross-package ones, which force inline bodies through the dependency cache),
record field access, typed and untyped ``let``, blocks, ``if``/``else``, and
all binary operators. Identical spec + seed produces byte-identical trees.

The workspace root carries a ``bench.json`` manifest naming the user
packages and the designated edit file per package, which the bench runner
uses to drive iterations.
"""

from __future__ import annotations

import dataclasses
import json
import os
import random
from dataclasses import dataclass

BENCH_MANIFEST = "bench.json"


@dataclass(frozen=True)
class CorpusSpec:
    user_modules: int = 3
    funs_per_module: int = 8
    dep_packages: int = 1
    dep_modules_per_package: int = 2
    shared_dep: bool = True
    seed: int = 0
    user_packages: int = 1

    def validate(self) -> None:
        if self.user_modules < 1 or self.funs_per_module < 1 or self.user_packages < 1:
            raise ValueError("user_modules, funs_per_module, user_packages must be >= 1")
        if self.dep_packages < 0 or self.dep_modules_per_package < 0:
            raise ValueError("dependency counts must be >= 0")
        if self.dep_packages > 0 and self.dep_modules_per_package < 1:
            raise ValueError("dep_modules_per_package must be >= 1 when deps exist")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @staticmethod
    def from_dict(data: dict) -> "CorpusSpec":
        known = {f.name for f in dataclasses.fields(CorpusSpec)}
        return CorpusSpec(**{k: v for k, v in data.items() if k in known})


def generate_corpus(spec: CorpusSpec, out_dir: str) -> dict:
    """Writes the workspace; ``out_dir`` must be absent or empty. Returns the
    bench manifest (also written to ``bench.json``)."""
    spec.validate()
    if os.path.exists(out_dir) and os.listdir(out_dir):
        raise FileExistsError(f"output directory {out_dir} is not empty")
    os.makedirs(out_dir, exist_ok=True)
    rng = random.Random(spec.seed)

    dep_names: list[str] = []
    std_ref: tuple[str, list[str]] | None = None  # (address, module names)
    if spec.dep_packages > 0 and spec.shared_dep:
        modules = _write_package(
            out_dir,
            "std",
            "0x1",
            spec.dep_modules_per_package,
            spec.funs_per_module,
            rng,
            deps={},
            far=None,
        )
        std_ref = ("0x1", modules)
        dep_names.append("std")
    first_extra = 1 if std_ref is not None else 0
    for i in range(first_extra, spec.dep_packages):
        name = f"dep{i:02d}"
        deps = {"std": "../std"} if std_ref is not None else {}
        _write_package(
            out_dir,
            name,
            f"0x{0x100 + i:x}",
            spec.dep_modules_per_package,
            spec.funs_per_module,
            rng,
            deps=deps,
            far=std_ref,
        )
        dep_names.append(name)

    user_packages: list[str] = []
    edit_files: dict[str, str] = {}
    for j in range(spec.user_packages):
        name = f"user{j}"
        deps = {d: f"../{d}" for d in dep_names}
        modules = _write_package(
            out_dir,
            name,
            f"0x{0x1000 + j:x}",
            spec.user_modules,
            spec.funs_per_module,
            rng,
            deps=deps,
            far=std_ref,
        )
        user_packages.append(name)
        edit_files[name] = os.path.join(name, "sources", f"{modules[-1]}.mini")

    manifest = {
        "spec": spec.to_dict(),
        "user_packages": user_packages,
        "edit_files": edit_files,
    }
    with open(os.path.join(out_dir, BENCH_MANIFEST), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def load_bench_manifest(workspace: str) -> dict | None:
    path = os.path.join(workspace, BENCH_MANIFEST)
    if not os.path.exists(path):
        return None
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def count_nonempty_lines(root: str, suffix: str = ".mini") -> int:
    total = 0
    for dirpath, _, files in os.walk(root):
        for name in files:
            if not name.endswith(suffix):
                continue
            with open(os.path.join(dirpath, name), "r", encoding="utf-8") as fh:
                total += sum(1 for line in fh if line.strip())
    return total


def modules_for_line_target(
    target_lines: int, funs_per_module: int, seed: int = 0
) -> int:
    """How many user modules reach roughly ``target_lines`` non-empty lines.

    Measures a representative generated module instead of guessing, so the
    estimate tracks the template."""
    rng = random.Random(seed)
    sample = _module_text(
        "0x1000", "user0_m001", funs_per_module, prev="user0_m000", far=("0x1", "std_m000"), rng=rng
    )
    per_module = sum(1 for line in sample.splitlines() if line.strip())
    return max(1, round(target_lines / per_module))


# --- package/module emission ----------------------------------------------------


def _write_package(
    out_dir: str,
    name: str,
    address: str,
    module_count: int,
    funs_per_module: int,
    rng: random.Random,
    deps: dict[str, str],
    far: tuple[str, list[str]] | None,
) -> list[str]:
    root = os.path.join(out_dir, name)
    os.makedirs(os.path.join(root, "sources"))
    lines = [f'name = "{name}"', ""]
    if deps:
        lines.append("[dependencies]")
        for dep_name in sorted(deps):
            lines.append(f'{dep_name} = "{deps[dep_name]}"')
    with open(os.path.join(root, "minipkg.toml"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")

    modules: list[str] = []
    for idx in range(module_count):
        mod_name = f"{name}_m{idx:03d}"
        prev = modules[-1] if modules else None
        far_ref = None
        if far is not None:
            far_ref = (far[0], far[1][idx % len(far[1])])
        text = _module_text(address, mod_name, funs_per_module, prev, far_ref, rng)
        with open(
            os.path.join(root, "sources", f"{mod_name}.mini"), "w", encoding="utf-8"
        ) as fh:
            fh.write(text)
        modules.append(mod_name)
    return modules


def _module_text(
    address: str,
    mod_name: str,
    funs: int,
    prev: str | None,
    far: tuple[str, str] | None,
    rng: random.Random,
) -> str:
    """One module with ``funs`` functions; templates drawn deterministically."""
    out: list[str] = [f"module {address}::{mod_name} {{"]
    if prev is not None:
        out.append(f"    use {address}::{prev} as prev;")
    if far is not None:
        out.append(f"    use {far[0]}::{far[1]};")
    if funs >= 2:
        out.append("    record Data { a: u64, b: u64 }")

    have_pick = funs >= 3
    have_helper = False
    helper_name = ""
    for k in range(funs):
        c1 = rng.randrange(1, 9)
        c2 = rng.randrange(2, 7)
        if k == 0:
            out.append("    public fun entry(x: u64, y: u64): u64 {")
            out.append("        let ok = x < y && true;")
            out.append(f"        let base = if ok {{ x + {c1} }} else {{ y * {c2} }};")
            out.append(f"        {{ let t = base + {c1}; t + x }}")
            out.append("    }")
        elif k == 1:
            out.append("    public fun get_a(d: Data): u64 { d.a }")
        elif k == 2:
            out.append(
                "    public inline fun pick(x: u64, y: u64): u64"
                " { if x < y { x } else { y } }"
            )
        elif k == 3:
            out.append(f"    public fun get_b(d: Data): u64 {{ d.b + {c1} }}")
        elif k == 4:
            out.append(f"    public fun local{k}(d: Data): u64 {{ get_a(d) + d.b * {c2} }}")
        else:
            shape = (k - 5) % 5
            if shape == 0:
                helper_name = f"helper{k}"
                have_helper = True
                out.append(
                    f"    fun {helper_name}(x: u64, y: u64): u64"
                    f" {{ let t = x * {c2}; t + y + {c1} }}"
                )
            elif shape == 1:
                callee = helper_name if have_helper else "entry"
                alias_line = (
                    f"        let c = {far[1]}::pick(a, b);" if far is not None else f"        let c = a + {c1};"
                )
                target = "prev::entry(a, y)" if prev is not None else "entry(a, y)"
                out.append(f"    public fun chain{k}(x: u64, y: u64): u64 {{")
                out.append(f"        let a = {callee}(x, {c1});")
                out.append(f"        let b = {target};")
                out.append(alias_line)
                out.append("        a + b + c")
                out.append("    }")
            elif shape == 2:
                if far is not None:
                    first = f"        let a = {far[0]}::{far[1]}::entry(x, y);"
                else:
                    first = "        let a = entry(x, y);"
                picked = f"pick(a, {c1})" if have_pick else f"a + {c1}"
                out.append(f"    public fun far{k}(x: u64, y: u64): u64 {{")
                out.append(first)
                out.append(f"        let b = {picked};")
                out.append("        if a == b { a } else { a + b }")
                out.append("    }")
            elif shape == 3:
                if prev is not None:
                    out.append(
                        f"    public fun relay{k}(d: prev::Data): u64"
                        f" {{ prev::get_a(d) + {c1} }}"
                    )
                else:
                    out.append(
                        f"    public fun relay{k}(d: Data): u64 {{ get_a(d) + {c1} }}"
                    )
            else:
                out.append(f"    public fun owner{k}(): address {{ 0x{c1:x}{c2:x} }}")
    out.append("}")
    return "\n".join(out) + "\n"
