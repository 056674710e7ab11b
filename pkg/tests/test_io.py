import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sepkin.io import (read_json, read_labeled_csv, read_measurement, write_columns, write_json,
                       write_labeled_csv, write_measurement)


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)),
              elements=st.floats(allow_nan=False, allow_infinity=False, width=64)))
def test_csv_round_trip_bit_exact(tmp_path_factory, A):
    p = tmp_path_factory.mktemp("csv") / "a.csv"
    rows = np.arange(A.shape[0]) * 0.1
    cols = np.arange(A.shape[1]) / 3
    write_labeled_csv(p, A, rows, cols)
    B, r, c = read_labeled_csv(p)
    assert B.tobytes() == A.tobytes()
    assert r.tobytes() == rows.tobytes() and c.tobytes() == cols.tobytes()


def test_string_labels(tmp_path):
    p = tmp_path / "h.csv"
    write_labeled_csv(p, np.eye(2), ["A", "B"], [0.0, 1.0])
    _, r, c = read_labeled_csv(p)
    assert r == ["A", "B"]
    np.testing.assert_array_equal(c, [0.0, 1.0])


def test_measurement_layout(tmp_path):
    p = tmp_path / "M.csv"
    write_measurement(p, [400.0, 401.0, 402.0], [0.0, 0.5], np.arange(6.0).reshape(3, 2))
    lines = p.read_text().splitlines()
    assert lines[0] == ",0,0.5"
    assert lines[1] == "400,0,1"
    f, t, M = read_measurement(p)
    assert M.shape == (3, 2)


@pytest.mark.parametrize("text, match", [
    (",0,1\n400,1\n", "expected 3 fields"),
    (",0,1\n400,1,x\n", "non-numeric"),
    (",0,1\n400,1,-2\n", "negative"),
    (",1,0\n400,1,2\n", "time points"),
    (",0,1\n", "at least one data row"),
    (",0,1\n400,1,nan\n", "non-finite"),
])
def test_measurement_errors(tmp_path, text, match):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(ValueError, match=match):
        read_measurement(p)


def test_missing_file(tmp_path):
    with pytest.raises(ValueError, match="cannot read"):
        read_labeled_csv(tmp_path / "none.csv")
    with pytest.raises(ValueError, match="cannot read"):
        read_json(tmp_path / "none.json")


def test_json_numpy(tmp_path):
    p = tmp_path / "x.json"
    write_json(p, {"a": np.arange(3.0), "b": np.float64(2.5), "c": np.int64(4)})
    assert read_json(p) == {"a": [0.0, 1.0, 2.0], "b": 2.5, "c": 4}
    p.write_text("{")
    with pytest.raises(ValueError, match="invalid JSON"):
        read_json(p)


def test_columns_file(tmp_path):
    p = tmp_path / "c.txt"
    write_columns(p, [[1.0, 2.0], [3.0, 4.0]], ["x", "y"])
    assert p.read_text().startswith("# x y")
    np.testing.assert_array_equal(np.loadtxt(p), [[1, 3], [2, 4]])
