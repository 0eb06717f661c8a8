"""INI-style experiment configuration.

Sections and keys are fixed; anything unrecognised is rejected so that a
typo can never silently fall back to a default.  Example::

    [map]
    family = perturbed
    degree = 2
    epsilon = 0.1

    [weight]
    family = trigonometric
    value = 0.2

    [besov]
    s = 1.0
    p = inf
    q = inf
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from typing import Optional

from .dyadic import BesovParams
from .dynamics import CircleMap, Weight
from .kernels import LocalBranch, LocalWeight, big_lambda, far_pairs
from .transfer import TransferOp


class ConfigError(ValueError):
    """Invalid configuration file or value."""


def _float(text: str) -> float:
    t = text.strip().lower()
    if t in ("inf", "infinity", "+inf"):
        return math.inf
    return float(t)


def _floats(text: str) -> list:
    return [_float(t) for t in text.replace(";", ",").split(",") if t.strip()]


def _ints(text: str) -> list:
    return [int(t) for t in text.replace(";", ",").split(",") if t.strip()]


# section -> key -> (parser, default)
SCHEMA = {
    "map": {"family": (str, "linear"), "degree": (int, 2), "epsilon": (_float, 0.0)},
    "weight": {"family": (str, "inverse_jacobian"), "value": (_float, 1.0),
               "exponent": (_float, 2.5)},
    "besov": {"s": (_float, 1.0), "p": (_float, math.inf), "q": (_float, math.inf),
              "sigma": (_float, None), "delta": (_float, None)},
    "grid": {"n": (int, 256), "n_max": (int, 8), "truncations": (_ints, [8, 16, 32]),
             "power": (int, 1)},
    "corpus": {"size": (int, 50), "modes": (int, 64)},
    "pressure": {"n_max": (int, 10), "potential": (str, "zero"), "constant": (_float, 0.0)},
    "bounds": {"s_values": (_floats, [0.5, 1.0, 2.0]), "n_max": (int, 12)},
    "spectrum": {"match_tol": (_float, 1e-6), "margin": (_float, 1e-3)},
    "kernel": {"branch": (str, "affine"), "a": (_float, 2.0), "beta": (_float, 0.0),
               "center": (_float, 0.0), "radius": (_float, 0.5),
               "regularity": (_float, 2.0), "gamma": (_float, 0.0), "top": (int, 10),
               "export_n": (int, 7), "export_l": (int, 1)},
}

POTENTIALS = ("zero", "log_weight", "neg_log_deriv", "constant")


@dataclass
class ExperimentConfig:
    """Validated experiment settings; build with :meth:`from_file` or :meth:`from_string`."""

    values: dict = field(default_factory=dict)
    seed: int = 0

    def __getitem__(self, key):
        section, name = key
        return self.values[section][name]

    # domain objects -------------------------------------------------------
    @property
    def circle_map(self) -> CircleMap:
        m = self.values["map"]
        if m["family"] == "linear":
            return CircleMap.linear(m["degree"])
        return CircleMap.perturbed(m["degree"], m["epsilon"])

    @property
    def weight(self) -> Weight:
        w = self.values["weight"]
        fam = w["family"]
        if fam == "constant":
            return Weight.constant(w["value"])
        if fam == "inverse_jacobian":
            return Weight.inverse_jacobian(self.circle_map)
        if fam == "trigonometric":
            return Weight.trigonometric(w["value"])
        return Weight.cusp(w["value"], w["exponent"])

    @property
    def operator(self) -> TransferOp:
        return TransferOp(self.circle_map, self.weight, self.values["grid"]["power"])

    @property
    def besov(self) -> BesovParams:
        b = self.values["besov"]
        return BesovParams(s=b["s"], p=b["p"], q=b["q"], sigma=b["sigma"],
                           regularity=self.weight.regularity, delta=b["delta"])

    @property
    def branch(self) -> LocalBranch:
        k = self.values["kernel"]
        if k["branch"] == "affine":
            return LocalBranch.affine(k["a"])
        return LocalBranch.nonlinear(k["a"], k["beta"])

    @property
    def local_weight(self) -> LocalWeight:
        k = self.values["kernel"]
        return LocalWeight(k["center"], k["radius"], k["regularity"], k["gamma"])

    # loading --------------------------------------------------------------
    @classmethod
    def from_string(cls, text: str, seed: Optional[int] = None) -> "ExperimentConfig":
        parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
        parser.optionxform = str.lower
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        values = {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}
        run_seed = 0
        for sec in parser.sections():
            if sec == "run":
                for key, raw in parser.items(sec):
                    if key != "seed":
                        raise ConfigError(f"unknown key [run] {key}")
                    run_seed = _parse(int, raw, sec, key)
                continue
            if sec not in SCHEMA:
                raise ConfigError(f"unknown section [{sec}]")
            for key, raw in parser.items(sec):
                if key not in SCHEMA[sec]:
                    raise ConfigError(f"unknown key [{sec}] {key}")
                values[sec][key] = _parse(SCHEMA[sec][key][0], raw, sec, key)
        cfg = cls(values, run_seed if seed is None else seed)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path: Optional[str], seed: Optional[int] = None) -> "ExperimentConfig":
        if path is None:
            return cls.from_string("", seed)
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_string(text, seed)

    def validate(self) -> None:
        """Check every cross-field constraint; raise :class:`ConfigError`."""
        v = self.values
        g = v["grid"]
        if g["n"] < 8 or g["n"] & (g["n"] - 1):
            raise ConfigError(f"grid n must be a power of two >= 8, got {g['n']}")
        if g["n_max"] < 0:
            raise ConfigError("grid n_max must be >= 0")
        if g["power"] < 1:
            raise ConfigError("grid power must be >= 1")
        ks = g["truncations"]
        if len(ks) < 3 or any(k < 1 for k in ks) or len(set(ks)) != len(ks):
            raise ConfigError("need at least three distinct positive truncations")
        if v["map"]["family"] not in ("linear", "perturbed"):
            raise ConfigError(f"unknown map family {v['map']['family']!r}")
        if v["weight"]["family"] not in ("constant", "inverse_jacobian", "trigonometric", "cusp"):
            raise ConfigError(f"unknown weight family {v['weight']['family']!r}")
        if v["pressure"]["potential"] not in POTENTIALS:
            raise ConfigError(f"potential must be one of {', '.join(POTENTIALS)}")
        if v["pressure"]["n_max"] < 1:
            raise ConfigError("pressure n_max must be >= 1")
        if v["bounds"]["n_max"] < 1 or not v["bounds"]["s_values"]:
            raise ConfigError("bounds need n_max >= 1 and at least one s value")
        if any(s < 0 for s in v["bounds"]["s_values"]):
            raise ConfigError("bounds s values must be >= 0")
        c = v["corpus"]
        if c["size"] < 0 or c["modes"] < -1:
            raise ConfigError("corpus size must be >= 0 and modes >= -1")
        if c["size"] == 0 and c["modes"] < 0:
            raise ConfigError("empty corpus")
        if c["modes"] > g["n"] // 4:
            raise ConfigError("corpus modes must stay below n/4 to keep L u resolved")
        if v["kernel"]["branch"] not in ("affine", "nonlinear"):
            raise ConfigError(f"unknown branch {v['kernel']['branch']!r}")
        if not 0 <= v["kernel"]["top"] <= 12:
            raise ConfigError("kernel top must lie in 0..12")
        try:
            self.operator
            self.besov
            self.branch
            self.local_weight
        except (ValueError, ArithmeticError) as exc:
            raise ConfigError(str(exc)) from exc
        if not far_pairs(big_lambda(self.branch, self.local_weight), v["kernel"]["top"]):
            raise ConfigError("no far block pairs within [kernel] top; raise it")


def _parse(kind, raw: str, sec: str, key: str):
    try:
        return kind(raw.strip()) if kind is not str else raw.strip().lower()
    except ValueError as exc:
        raise ConfigError(f"bad value for [{sec}] {key}: {raw!r}") from exc
