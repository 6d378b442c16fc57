"""Canonical serialization for compiler values.

One encoding serves three needs: deterministic equality checks in tests
(identical inputs must serialize byte-identically), stable digests for
change detection, and portable deep-size estimates for cache entries.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from typing import Any


def to_jsonable(obj: Any) -> Any:
    if obj is None or isinstance(obj, (bool, int, float, str)):
        return obj
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        out: dict[str, Any] = {"!": type(obj).__name__}
        for f in dataclasses.fields(obj):
            out[f.name] = to_jsonable(getattr(obj, f.name))
        return out
    if isinstance(obj, dict):
        if all(isinstance(k, str) for k in obj):
            return {"!": "map", **{k: to_jsonable(v) for k, v in sorted(obj.items())}}
        pairs = [[to_jsonable(k), to_jsonable(v)] for k, v in obj.items()]
        pairs.sort(key=lambda kv: json.dumps(kv[0], sort_keys=True))
        return {"!": "pairs", "items": pairs}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(x) for x in obj]
    if isinstance(obj, (set, frozenset)):
        items = [to_jsonable(x) for x in obj]
        items.sort(key=lambda x: json.dumps(x, sort_keys=True))
        return items
    raise TypeError(f"cannot canonicalize {type(obj).__name__}")


def canonical_bytes(obj: Any) -> bytes:
    return json.dumps(
        to_jsonable(obj), sort_keys=True, separators=(",", ":"), ensure_ascii=False
    ).encode("utf-8")


def digest(obj: Any) -> str:
    return hashlib.sha256(canonical_bytes(obj)).hexdigest()
