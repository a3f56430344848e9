import os

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from blayer.bench import (BENCHMARKS, BendingBeamConfig, HertzConfig,
                          OffsetValidateConfig, PatchTestConfig,
                          config_from_tree, config_to_tree)
from blayer.io import (ConfigError, format_float, read_config, read_csv,
                       read_summary, write_config, write_csv, write_summary)

key_strategy = st.text(
    st.characters(whitelist_categories=("Ll", "Lu", "Nd"), whitelist_characters="_-"),
    min_size=1, max_size=12)
value_strategy = st.one_of(
    st.text(st.characters(blacklist_characters="\n\r%", blacklist_categories=("Cs", "Cc")),
            max_size=20).map(str.strip).filter(lambda s: s),
    st.integers(-10 ** 9, 10 ** 9).map(str),
    st.floats(allow_nan=False, allow_infinity=False).map(format_float))


@settings(max_examples=50, deadline=None)
@given(tree=st.dictionaries(
    key_strategy, st.dictionaries(key_strategy, value_strategy, max_size=5),
    min_size=1, max_size=4))
def test_config_round_trip_identity(tmp_path_factory, tree):
    path = str(tmp_path_factory.mktemp("cfg") / "c.ini")
    write_config(path, tree)
    back = read_config(path)
    back.pop("meta", None)
    expect = {k: v for k, v in tree.items() if k != "meta"}
    assert back == expect


def test_schema_version_checked(tmp_path):
    path = str(tmp_path / "c.ini")
    write_config(path, {"meta": {"schema_version": "999"}})
    with pytest.raises(ConfigError):
        read_config(path)


def test_missing_config_rejected():
    with pytest.raises(ConfigError):
        read_config("/nonexistent/path.ini")


def test_csv_round_trip_floats_exact(tmp_path):
    path = str(tmp_path / "t.csv")
    rows = [[1 / 3, "label", 2 ** -40], [np.pi, "x", -1e300]]
    write_csv(path, ["a", "b", "c"], rows)
    header, back = read_csv(path)
    assert header == ["a", "b", "c"]
    assert float(back[0][0]) == 1 / 3
    assert float(back[1][0]) == np.pi
    assert float(back[1][2]) == -1e300


def test_summary_round_trip(tmp_path):
    path = str(tmp_path / "summary.txt")
    write_summary(path, "demo", "fail", {"a": True, "b": False},
                  {"m": 0.125, "s": "note"}, failure_category="acceptance")
    back = read_summary(path)
    assert back["run"]["benchmark"] == "demo"
    assert back["run"]["status"] == "fail"
    assert back["run"]["failure_category"] == "acceptance"
    assert back["checks"] == {"a": "pass", "b": "fail"}
    assert float(back["metrics"]["m"]) == 0.125


def test_benchmark_config_round_trip_all_defaults():
    for name, (cls, _) in BENCHMARKS.items():
        cfg = cls()
        name2, cfg2 = config_from_tree(config_to_tree(name, cfg))
        assert name2 == name and cfg2 == cfg


def test_benchmark_config_round_trip_through_file(tmp_path):
    cfg = HertzConfig(load=0.5, levels=2, out="custom/dir")
    path = str(tmp_path / "hertz.ini")
    write_config(path, config_to_tree("hertz", cfg))
    name, back = config_from_tree(read_config(path))
    assert name == "hertz" and back == cfg


@settings(max_examples=30, deadline=None)
@given(load=st.floats(0.01, 2.0), levels=st.integers(1, 6),
       spans=st.integers(2, 64))
def test_hertz_config_round_trip_property(tmp_path_factory, load, levels,
                                          spans):
    cfg = HertzConfig(load=load, levels=levels, base_central_spans=spans)
    path = str(tmp_path_factory.mktemp("cfg") / "h.ini")
    write_config(path, config_to_tree("hertz", cfg))
    _, back = config_from_tree(read_config(path))
    assert back == cfg


def test_unknown_benchmark_and_parameter_rejected():
    with pytest.raises(ConfigError):
        config_from_tree({"benchmark": {"name": "nope"}})
    with pytest.raises(ConfigError):
        config_from_tree({"benchmark": {"name": "hertz"},
                          "params": {"bogus": "1"}})
    with pytest.raises(ConfigError):
        config_from_tree({"benchmark": {"name": "hertz"},
                          "params": {"levels": "three"}})
    with pytest.raises(ConfigError):
        config_from_tree({"params": {}})
