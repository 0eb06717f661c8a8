import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from besovlab.config import SCHEMA, ConfigError, ExperimentConfig
from besovlab.output import csv_text, fmt, json_text, write_text


# output --------------------------------------------------------------------------

def test_fmt_cases():
    assert fmt(0.1) == "1.0000000000000001e-01"
    assert fmt(np.float32(2.0)) == "2.0000000000000000e+00"
    assert fmt(3) == "3" and fmt(np.int64(-4)) == "-4"
    assert fmt(True) == "1" and fmt(np.bool_(False)) == "0"
    assert (fmt(math.inf), fmt(-math.inf), fmt(math.nan)) == ("inf", "-inf", "nan")
    assert fmt("label") == "label"


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_roundtrip(x):
    s = fmt(x)
    assert float(s) == x
    assert len(s.split("e")[0].replace("-", "").replace(".", "")) == 17


def test_csv_text_quotes():
    text = csv_text(["a", "b"], [[1, 'x,"y"'], [0.5, "z"]])
    assert text == 'a,b\n1,"x,""y"""\n5.0000000000000000e-01,z\n'


def test_json_text_order_and_values():
    obj = {"z": 1, "a": [0.5, math.inf], "c": 1 + 2j, "n": None, "b": True, "s": 'q"'}
    text = json_text(obj)
    back = json.loads(text)
    assert list(back) == ["z", "a", "c", "n", "b", "s"]
    assert back["a"] == [0.5, "inf"] and back["c"] == [1.0, 2.0]
    assert back["n"] is None and back["b"] is True and back["s"] == 'q"'
    assert "5.0000000000000000e-01" in text


def test_write_text_creates_dirs(tmp_path):
    path = tmp_path / "a" / "b" / "c.txt"
    write_text(str(path), "hi\n")
    assert path.read_text() == "hi\n"


# config ----------------------------------------------------------------------------

def test_defaults():
    cfg = ExperimentConfig.from_string("")
    assert cfg["grid", "n"] == 256 and cfg.seed == 0
    assert cfg.besov.s == 1.0 and math.isinf(cfg.besov.p)
    assert cfg.circle_map.degree == 2


def test_full_config_parses():
    text = """
    [run]
    seed = 7
    [map]
    family = perturbed
    epsilon = 0.1
    [weight]
    family = cusp
    value = 0.5
    exponent = 2.5
    [besov]
    s = 2
    p = 2
    q = inf
    [grid]
    n = 128
    truncations = 8, 16, 32
    [corpus]
    modes = 32
    [kernel]
    branch = nonlinear
    beta = 0.3
    """
    cfg = ExperimentConfig.from_string("\n".join(l.strip() for l in text.splitlines()))
    assert cfg.seed == 7
    assert cfg.weight.family == "cusp" and cfg.weight.regularity == 2.5
    assert cfg.besov.regularity == 2.5
    assert cfg.branch.family == "nonlinear"
    assert ExperimentConfig.from_string("[run]\nseed = 7\n", seed=3).seed == 3


@pytest.mark.parametrize("text", [
    "[grid]\nn = 100\n",
    "[grid]\nn = 4\n",
    "[grid]\nbogus = 1\n",
    "[nosuch]\nx = 1\n",
    "[run]\nother = 1\n",
    "[grid]\ntruncations = 8, 16\n",
    "[grid]\ntruncations = 8, 8, 16\n",
    "[corpus]\nsize = 0\nmodes = -1\n",
    "[corpus]\nmodes = 200\n",
    "[besov]\ns = 0\n",
    "[besov]\np = 0.5\n",
    "[besov]\ns = x\n",
    "[map]\nfamily = tent\n",
    "[map]\nfamily = perturbed\nepsilon = 3\n",
    "[weight]\nfamily = cusp\nvalue = 2\n",
    "[weight]\nfamily = cusp\nexponent = 1.5\n[besov]\ns = 2\n",
    "[pressure]\npotential = other\n",
    "[kernel]\ntop = 13\n",
    "[kernel]\ntop = 4\n",
    "[kernel]\nbranch = affine\na = 0.5\n",
    "not an ini file",
])
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_string(text)


def test_keys_case_insensitive():
    cfg = ExperimentConfig.from_string("[grid]\nN = 512\n")
    assert cfg["grid", "n"] == 512


def test_missing_file():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file("/nonexistent/cfg.ini")


def test_schema_sections():
    assert set(SCHEMA) == {"map", "weight", "besov", "grid", "corpus", "pressure", "bounds",
                           "spectrum", "kernel"}
