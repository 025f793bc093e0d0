import datetime as dt
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from twostrain.config import load_config
from twostrain.data import (
    format_value,
    load_case_data,
    load_variant_shares,
    read_csv,
    write_csv,
    write_json,
)
from twostrain.errors import (
    ConfigError,
    NegativeCases,
    NonMonotoneDates,
    ParseError,
    ShareOutOfRange,
    WindowMisaligned,
)

PARAMS = """[params]
beta1 = 0.4
beta2 = 0.6
gamma1 = 0.2
gamma2 = 0.1
sigma1 = 0.1
sigma2 = 0.1
epsilon = 0
n_pop = 10000
"""


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


# -- loaders -----------------------------------------------------------------

def test_two_day_case_file(tmp_path):
    path = write(tmp_path, "cases.csv", "date,new_cases\n2021-06-01,5\n2021-06-02,7\n")
    data = load_case_data(path)
    assert len(data) == 2
    assert data.dates == (dt.date(2021, 6, 1), dt.date(2021, 6, 2))
    assert data.new_cases.tolist() == [5.0, 7.0]


def test_comments_and_blank_lines_skipped(tmp_path):
    path = write(tmp_path, "cases.csv", "# source: test\ndate,new_cases\n\n2021-06-01,5\n")
    assert len(load_case_data(path)) == 1


def test_out_of_order_dates(tmp_path):
    path = write(tmp_path, "cases.csv", "date,new_cases\n2021-06-02,5\n2021-06-01,7\n")
    with pytest.raises(NonMonotoneDates):
        load_case_data(path)


def test_negative_count(tmp_path):
    path = write(tmp_path, "cases.csv", "date,new_cases\n2021-06-01,-5\n")
    with pytest.raises(NegativeCases):
        load_case_data(path)


@pytest.mark.parametrize("body, line", [
    ("date,new_cases\n2021-06-01,five\n", 2),
    ("date,new_cases\n2021-13-01,5\n", 2),
    ("date,new_cases\n2021-06-01,5\n2021-06-02\n", 3),
    ("day,cases\n2021-06-01,5\n", 1),
    ("date,new_cases\n2021-06-01,nan\n", 2),
])
def test_parse_errors_carry_line_numbers(tmp_path, body, line):
    path = write(tmp_path, "cases.csv", body)
    with pytest.raises(ParseError) as info:
        load_case_data(path)
    assert info.value.line == line
    assert str(path) in str(info.value)


def test_share_file(tmp_path):
    path = write(tmp_path, "shares.csv", "window_end_date,emerging_share\n2021-06-14,0.1\n2021-06-28,0.3\n")
    shares = load_variant_shares(path)
    assert shares.emerging_share.tolist() == [0.1, 0.3]


def test_share_windows_must_be_two_weeks_apart(tmp_path):
    path = write(tmp_path, "shares.csv", "window_end_date,emerging_share\n2021-06-14,0.1\n2021-06-21,0.3\n")
    with pytest.raises(WindowMisaligned):
        load_variant_shares(path)


def test_share_out_of_range(tmp_path):
    path = write(tmp_path, "shares.csv", "window_end_date,emerging_share\n2021-06-14,1.2\n")
    with pytest.raises(ShareOutOfRange):
        load_variant_shares(path)


# -- writers -------------------------------------------------------------------

def test_format_value():
    assert format_value(0.1) == "0.1"
    assert format_value(np.float64(1 / 3)) == "0.3333333333333333"
    assert format_value(True) == "true"
    assert format_value(np.int64(7)) == "7"
    assert format_value(dt.date(2021, 6, 1)) == "2021-06-01"


@given(st.lists(st.tuples(st.floats(allow_nan=False, allow_infinity=False),
                          st.floats(allow_nan=False, allow_infinity=False)), max_size=20))
def test_csv_round_trip_is_exact(tmp_path_factory, rows):
    path = tmp_path_factory.mktemp("csv") / "out.csv"
    write_csv(path, ("a", "b"), rows)
    header, back = read_csv(path)
    assert header == ("a", "b")
    assert back == [tuple(r) for r in rows]


def test_timestamp_only_without_reproducible_flag(tmp_path):
    write_csv(tmp_path / "a.csv", ("x",), [(1.0,)], reproducible=False)
    write_csv(tmp_path / "b.csv", ("x",), [(1.0,)], reproducible=True)
    a = (tmp_path / "a.csv").read_text().splitlines()
    b = (tmp_path / "b.csv").read_text().splitlines()
    assert a[0].startswith("# generated") and a[1:] == b
    assert read_csv(tmp_path / "a.csv") == read_csv(tmp_path / "b.csv")


def test_json_encodes_non_finite_values(tmp_path):
    write_json(tmp_path / "r.json", {"r12": math.nan, "v": np.arange(2), "d": dt.date(2021, 1, 1)})
    payload = json.loads((tmp_path / "r.json").read_text())
    assert payload == {"r12": "nan", "v": [0, 1], "d": "2021-01-01"}


def test_no_temporary_files_left(tmp_path):
    write_csv(tmp_path / "a.csv", ("x",), [(1.0,)])
    assert [p.name for p in tmp_path.iterdir()] == ["a.csv"]


# -- configuration -------------------------------------------------------------

def test_config_sections_are_typed(tmp_path):
    path = write(tmp_path, "run.ini", PARAMS + "[simulate]\nt_end = 100\nmodel = reduced\n")
    cfg = load_config(path)
    assert cfg.params().beta1 == 0.4
    sim = cfg.section("simulate")
    assert sim["t_end"] == 100.0 and sim["model"] == "reduced" and sim["h"] == 0.05


@pytest.mark.parametrize("extra, fragment", [
    ("[simulate]\nt_end = 100\nbeta = 2\n", "unknown key 'beta'"),
    ("[simulat]\nt_end = 100\n", "unknown section [simulat]"),
    ("[simulate]\nmodel = full\n", "missing required key 't_end'"),
    ("[simulate]\nt_end = soon\n", "t_end"),
    ("[simulate]\nt_end = 1\nmodel = partial\n", "model"),
    ("[fit]\ncase_file = nowhere.csv\nshare_file = nowhere.csv\n", "nowhere.csv"),
])
def test_config_errors(tmp_path, extra, fragment):
    path = write(tmp_path, "run.ini", PARAMS + extra)
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert fragment in str(info.value)


def test_key_case_is_significant(tmp_path):
    path = write(tmp_path, "run.ini", PARAMS.replace("beta1", "Beta1"))
    with pytest.raises(ConfigError):
        load_config(path)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.ini")


def test_command_needs_its_section(tmp_path):
    cfg = load_config(write(tmp_path, "run.ini", PARAMS))
    with pytest.raises(ConfigError):
        cfg.require("scan")
    cfg.require("analyze")


def test_inline_comments_allowed(tmp_path):
    path = write(tmp_path, "run.ini", PARAMS + "[simulate]\nmodel = reduced   # planar model\nt_end = 5\n")
    assert load_config(path).section("simulate")["model"] == "reduced"
