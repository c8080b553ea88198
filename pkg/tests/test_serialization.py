# tests/test_serialization.py
import json

import numpy as np

from app.core.utils.serialization import dumps, field_rows, inputs_digest, to_jsonable, write_csv
from app.schemas.system import GridDomain


def test_floats_keep_seventeen_digits():
    assert dumps(0.1) == "0.10000000000000001"
    assert json.loads(dumps({"x": 1 / 3}))["x"] == 1 / 3


def test_non_finite_values_become_strings():
    text = dumps({"b": float("inf"), "a": float("nan"), "c": -np.inf})
    assert json.loads(text) == {"a": "nan", "b": "inf", "c": "-inf"}
    assert text.index('"a"') < text.index('"b"') < text.index('"c"')


def test_layout_is_indented_and_sorted():
    assert dumps({"b": [1, 2.5], "a": {}, "c": []}) == (
        '{\n  "a": {},\n  "b": [\n    1,\n    2.5\n  ],\n  "c": []\n}'
    )
    nested = {"x": [{"k": None, "flag": False, "name": "ε"}], "y": -0.30000000000000004}
    assert json.loads(dumps(nested)) == nested


def test_numpy_and_models_are_converted():
    g = GridDomain.interval(0.0, 1.0, 3)
    value = to_jsonable({"grid": g, "flag": np.bool_(True), "count": np.int64(3), "v": np.arange(2.0)})
    assert value == {
        "grid": {"kind": "interval", "lo": [0.0], "hi": [1.0], "resolution": [3]},
        "flag": True,
        "count": 3,
        "v": [0.0, 1.0],
    }


def test_digest_is_stable():
    first = inputs_digest({"a": 1, "b": [1.0, 2.0]})
    assert first == inputs_digest({"b": [1.0, 2.0], "a": 1})
    assert first != inputs_digest({"a": 1, "b": [1.0, 2.5]})
    assert len(first) == 64


def test_csv_rows(tmp_path):
    g = GridDomain.interval(0.0, 1.0, 3)
    rows = field_rows(g.coordinates, np.array([[1.0, -1.0], [2.0, -2.0], [0.1, 0.0]]))
    assert rows[0] == [0.0, 0, 1.0]
    assert len(rows) == 6
    path = write_csv(tmp_path / "out" / "field.csv", ["x", "component", "value"], rows)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "x,component,value"
    assert lines[5] == "1,0,0.10000000000000001"
