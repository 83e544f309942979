import json
import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from hslab.core import family_params
from hslab.radial import closed_form_profile
from hslab.report import RunConfig, csv_text, fmt_float, profile_table, read_profile_table, to_json

_word = st.text("abcdefghijklmnopqrstuvwxyz_", min_size=1, max_size=8)
_finite = st.floats(allow_nan=False, allow_infinity=False)


@given(
    st.sampled_from(["solve-radial", "verify", "minimize"]),
    st.none() | st.integers(2, 60),
    st.none() | st.sampled_from(["1.6667", "0.5", "2"]),
    st.none() | _finite,
    st.none() | st.integers(10, 5000),
    st.none() | st.floats(1e-3, 1.0),
    st.sampled_from(["json", "csv"]),
    st.dictionaries(_word, _word, max_size=3),
)
def test_run_config_round_trip(command, N, s, tol, n_grid, h, fmt, extra):
    cfg = RunConfig(command, N=N, s=s, tol=tol, n_grid=n_grid, h=h, output="out/x.json", fmt=fmt, extra=extra)
    text = cfg.to_text()
    back = RunConfig.parse(text)
    assert back == cfg
    assert back.to_text() == text


@given(_finite)
def test_fmt_float_round_trips(x):
    assert float(fmt_float(x)) == x


def test_to_json_is_valid_and_exact():
    obj = {"a": 0.1, "b": [1.0, 2, np.float64(1 / 3)], "c": {"d": float("nan"), "e": True}, "f": np.arange(3)}
    text = to_json(obj)
    back = json.loads(text)
    assert back["a"] == 0.1 and back["b"][2] == 1 / 3
    assert back["c"]["d"] == "nan" and back["c"]["e"] is True
    assert back["f"] == [0, 1, 2]
    assert "0.10000000000000001" in text  # 17 significant digits
    assert to_json(obj) == text


def test_csv_uses_lf_and_commas():
    text = csv_text(["x", "ok"], [(0.5, True), (1 / 3, False)])
    assert "\r" not in text
    assert text.splitlines() == ["x,ok", "0.5,true", "0.33333333333333331,false"]


def test_profile_table_round_trip():
    prof = closed_form_profile(family_params(3, "2overN"))
    r = np.linspace(0, 1, 11)
    meta, rows = read_profile_table(profile_table(prof, r))
    assert meta["N"] == "3" and meta["source"] == "closed_form"
    assert math.isclose(float(meta["p"]), 8 / 3, rel_tol=1e-16)
    u, du = prof.evaluate(r)
    assert np.array_equal(rows[:, 0], r) and np.array_equal(rows[:, 1], u) and np.array_equal(rows[:, 2], du)
