import json
import math

import numpy as np
import pytest

from spectraforge.report import RunManifest, dumps, file_digest, fmt, to_plain, tsv_text, write_report


def test_float_rendering():
    assert fmt(0.1 + 0.2) == "0.3"
    assert fmt(-0.0) == "0"
    assert fmt(math.inf) == "inf" and fmt(-math.inf) == "-inf" and fmt(math.nan) == "nan"
    assert dumps({"x": 0.1 + 0.2}) == '{"x":0.3}'


def test_plain_conversion():
    out = to_plain({"a": np.arange(3), "b": np.float32(0.5), "c": np.bool_(True), 1: (np.int64(2),)})
    assert out == {"a": [0, 1, 2], "b": 0.5, "c": True, "1": [2]}
    assert type(out["c"]) is bool


def test_rewrite_is_byte_identical(tmp_path):
    payload = {"z": 1.0 / 3, "a": [np.float64(2) / 7, 3], "m": {"k": np.arange(4) / 9}}
    p1 = write_report(payload, tmp_path / "a.json")
    p2 = write_report(dict(reversed(list(payload.items()))), tmp_path / "b.json")
    assert p1.read_bytes() == p2.read_bytes()
    assert file_digest(p1) == file_digest(p2)
    assert file_digest(p1).startswith("sha256:")


def test_jsonl_lines_parse(tmp_path):
    recs = [{"epoch": i, "v": i / 3} for i in range(10)]
    p = write_report(recs, tmp_path / "t.jsonl", "jsonl")
    lines = p.read_text().splitlines()
    assert len(lines) == 10
    assert [json.loads(s)["epoch"] for s in lines] == list(range(10))


def test_tsv_and_errors(tmp_path):
    text = tsv_text(["a", "b"], [(1, 0.5), ("x", 1 / 3)])
    assert text == "a\tb\n1\t0.5\nx\t0.333333333333\n"
    with pytest.raises(ValueError):
        write_report({}, tmp_path / "x", "yaml")
    with pytest.raises(OSError):
        write_report({}, tmp_path / "missing" / "x.json")


def test_manifest_dict():
    m = RunManifest("spco", {"eps": 0.01}, {"graph": "sha256:0"}, 3, "0.1.0")
    assert m.as_dict() == {"command": "spco", "config": {"eps": 0.01}, "input_hashes": {"graph": "sha256:0"},
                           "seed": 3, "toolkit_version": "0.1.0"}
