"""Tests for result persistence."""

import json
import math

import numpy as np

from boltzlab.core.io import format_float, read_csv, to_jsonable, write_csv, write_json

def test_format_float():
    """Test that floats are written with 17 significant digits."""
    assert format_float(0.1) == "0.10000000000000001"
    assert format_float(2.0) == "2"
    assert format_float(math.nan) == "nan"
    assert format_float(-math.inf) == "-inf"
    assert float(format_float(1.0 / 3.0)) == 1.0 / 3.0

def test_to_jsonable():
    """Test the conversion of numpy values and non-finite floats."""
    payload = {"a": np.float64(0.5), "b": [math.nan, math.inf], "c": np.array([1, 2]), "d": np.bool_(True)}
    assert to_jsonable(payload) == {"a": 0.5, "b": [None, "inf"], "c": [1, 2], "d": True}

def test_write_json(tmp_path):
    """Test that reports are written as plain JSON."""
    path = write_json(tmp_path / "nested" / "report.json", {"value": 0.1, "missing": math.nan})
    assert json.loads(path.read_text()) == {"value": 0.1, "missing": None}

def test_write_csv(tmp_path):
    """Test the column order and cell formatting of CSV tables."""
    rows = [{"name": "m0", "value": 0.1, "ok": True}, {"name": "m1", "value": math.inf, "ok": False}]
    path = write_csv(tmp_path / "table.csv", rows, ["name", "value", "ok", "note"])
    lines = path.read_text().splitlines()
    assert lines[0] == "name,value,ok,note"
    assert lines[1] == "m0,0.10000000000000001,true,"
    assert lines[2] == "m1,inf,false,"
    assert read_csv(path)[0]["value"] == "0.10000000000000001"
