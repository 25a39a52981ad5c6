"""Deterministic report writing and run manifests.

Every float is rounded to 12 significant digits before serialization and JSON keys
are sorted, so identical payloads always produce identical bytes.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from pathlib import Path

import numpy as np

SIG_DIGITS = 12


def fmt(x: float) -> str:
    """Text rendering of a float at 12 significant digits (``0.1 + 0.2 -> '0.3'``)."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    s = "%.*g" % (SIG_DIGITS, x)
    return "0" if s == "-0" else s


def _round(x: float) -> float:
    x = float(x)
    if not math.isfinite(x):
        return x
    r = float("%.*g" % (SIG_DIGITS, x))
    return 0.0 if r == 0 else r


def to_plain(obj):
    """Recursively convert numpy/dataclass payloads into JSON-ready builtins."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _round(obj)
    return obj


def dumps(payload) -> str:
    return json.dumps(to_plain(payload), sort_keys=True, separators=(",", ":"))


def tsv_text(header: list[str], rows) -> str:
    out = ["\t".join(header)]
    for row in rows:
        out.append("\t".join(v if isinstance(v, str) else
                             str(int(v)) if isinstance(v, (int, np.integer)) else fmt(v)
                             for v in row))
    return "\n".join(out) + "\n"


def write_report(payload, path, format: str = "json") -> Path:
    """Write ``payload`` as json (one object), jsonl (iterable of objects) or tsv.

    For tsv the payload is either an object with ``to_tsv()`` or a
    ``(header, rows)`` pair.
    """
    path = Path(path)
    if format == "json":
        text = json.dumps(to_plain(payload), sort_keys=True, indent=2) + "\n"
    elif format == "jsonl":
        text = "".join(dumps(rec) + "\n" for rec in payload)
    elif format == "tsv":
        text = payload.to_tsv() if hasattr(payload, "to_tsv") else tsv_text(*payload)
    else:
        raise ValueError(f"unknown report format {format!r}")
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
    return path


def file_digest(path) -> str:
    return "sha256:" + hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclasses.dataclass(frozen=True)
class RunManifest:
    command: str
    config: dict
    input_hashes: dict
    seed: int
    toolkit_version: str

    def as_dict(self) -> dict:
        return to_plain(self)
