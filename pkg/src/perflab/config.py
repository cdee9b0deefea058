"""Experiment configs: a TOML file checked against a fixed schema.

Every key, its type and its default lives in ``SCHEMA``. Unknown sections or
keys, wrong types and out-of-range values raise ConfigError carrying the line
of the offending key.
"""
from __future__ import annotations

import re
import sys
from dataclasses import dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError

REQUIRED = object()
METHODS = ("np2m2", "rrm_lr", "rgd_lr")
SWEEPABLE = {"alpha": ("rrm", "alpha"), "d": ("map", "d")}

_num = (int, float)

# section -> key -> (accepted types, default)
SCHEMA = {
    "experiment": {
        "name": (str, REQUIRED),
        "seed": (int, 0),
        "output_dir": (str, REQUIRED),
        "methods": (list, ["np2m2"]),
    },
    "dataset": {
        "kind": (str, REQUIRED),            # circles | linear | csv
        "n_per_class": (int, None),
        "noise_std": (_num, 0.2),
        "dim": (int, None),
        "n_informative": (int, None),
        "class_sep": (_num, 1.0),
        "tau": (_num, 1.0),
        "path": (str, None),
        "label_column": (str, None),
        "positive_label": (str, None),
        "feature_columns": (list, None),
        "standardize": (bool, True),
        "nearmiss_k": (int, 0),             # 0 disables NearMiss-3 undersampling
    },
    "kernel": {
        "kind": (str, "rbf"),
        "sigma": (_num, 0.1),
        "squared_exponent": (bool, False),
    },
    "map": {
        "kind": (str, REQUIRED),
        "d": (list, REQUIRED),
        "b": (_num, None),                  # bankruptcy only; None ties b to d
        "n_candidates": (int, 100),
        "flip_rule": (str, "printed"),
        "performative": (list, None),       # bankruptcy: columns agents may modify
        "non_performative": (list, None),   # or: every column except these
    },
    "rrm": {
        "alpha": (_num, 0.49),
        "T_max": (int, 100),
        "trials": (int, 10),
        "burn_in": (int, 20),
        "C_init": (_num, 1.0),
        "convergence_consistency": (_num, 1.0 - 1e-6),
        "violator_filter": (str, "previous"),
        "stop_at_convergence": (bool, True),
    },
    "solver": {
        "tol": (_num, 1e-6),
        "max_passes": (int, 20000),
        "shrink": (bool, True),
    },
    "baselines": {
        "l2": (_num, 1e-3),
        "lr": (_num, None),
        "max_iters": (int, 20000),
        "tol": (_num, 1e-6),
        "step_lr": (_num, 0.1),
    },
}
REQUIRED_SECTIONS = ("experiment", "dataset", "map")


class _Lines:
    """Maps section.key to the line it is written on."""

    _section = re.compile(r"^\s*\[\s*([A-Za-z0-9_.-]+)\s*\]")
    _key = re.compile(r"^\s*([A-Za-z0-9_-]+)\s*=")

    def __init__(self, text: str):
        self.sections, self.keys = {}, {}
        current = ""
        for i, line in enumerate(text.splitlines(), start=1):
            m = self._section.match(line)
            if m:
                current = m.group(1)
                self.sections.setdefault(current, i)
                continue
            m = self._key.match(line)
            if m:
                self.keys.setdefault((current, m.group(1)), i)

    def of(self, section, key=None):
        if key is not None and (section, key) in self.keys:
            return self.keys[(section, key)]
        return self.sections.get(section, 1)


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict          # fully resolved tree, defaults filled in
    source: str = ""

    def __getitem__(self, section):
        return self.raw[section]

    def with_value(self, section, key, value) -> "ExperimentConfig":
        tree = {s: dict(v) for s, v in self.raw.items()}
        tree[section][key] = value
        return ExperimentConfig(validate(tree), self.source)


def _type_ok(value, types):
    if types is _num or types == _num:
        return isinstance(value, _num) and not isinstance(value, bool)
    if types is int:
        return isinstance(value, int) and not isinstance(value, bool)
    return isinstance(value, types)


def _tname(types):
    if types == _num:
        return "number"
    return types.__name__


def validate(tree: dict, lines: _Lines | None = None) -> dict:
    """Fill defaults and check the tree; returns a new resolved dict."""
    lines = lines or _Lines("")

    def fail(msg, section, key=None):
        raise ConfigError(msg, lines.of(section, key))

    for section in tree:
        if section not in SCHEMA:
            fail(f"unknown section [{section}]", section)
        if not isinstance(tree[section], dict):
            fail(f"[{section}] must be a table", section)
    for section in REQUIRED_SECTIONS:
        if section not in tree:
            raise ConfigError(f"missing section [{section}]", 1)

    out = {}
    for section, fields in SCHEMA.items():
        given = tree.get(section, {})
        for key in given:
            if key not in fields:
                fail(f"unknown key {section}.{key}", section, key)
        res = {}
        for key, (types, default) in fields.items():
            if key in given and given[key] is not None:
                v = given[key]
                if not _type_ok(v, types):
                    fail(f"{section}.{key} must be a {_tname(types)}, got {type(v).__name__}", section, key)
                res[key] = float(v) if types == _num else v
            elif default is REQUIRED:
                fail(f"missing required key {section}.{key}", section)
            else:
                res[key] = default
        out[section] = res
    _check_values(out, lambda msg, s, k=None: fail(msg, s, k))
    return out


def _check_values(c, fail):
    e, ds, k, m, r, s, bl = (c[x] for x in ("experiment", "dataset", "kernel", "map", "rrm", "solver", "baselines"))
    if not e["methods"]:
        fail("experiment.methods must not be empty", "experiment", "methods")
    for meth in e["methods"]:
        if meth not in METHODS:
            fail(f"unknown method {meth!r}; expected one of {METHODS}", "experiment", "methods")
    if len(set(e["methods"])) != len(e["methods"]):
        fail("experiment.methods has duplicates", "experiment", "methods")

    kind = ds["kind"]
    if kind == "circles":
        if ds["n_per_class"] is None or ds["n_per_class"] < 1:
            fail("dataset.n_per_class must be >= 1", "dataset", "n_per_class")
        if ds["noise_std"] < 0:
            fail("dataset.noise_std must be >= 0", "dataset", "noise_std")
    elif kind == "linear":
        for key in ("n_per_class", "dim", "n_informative"):
            if ds[key] is None or ds[key] < 1:
                fail(f"dataset.{key} must be >= 1", "dataset", key)
        if ds["n_informative"] > ds["dim"]:
            fail("dataset.n_informative must not exceed dataset.dim", "dataset", "n_informative")
    elif kind == "csv":
        for key in ("path", "label_column", "positive_label"):
            if ds[key] is None:
                fail(f"dataset.{key} is required for csv data", "dataset")
        if ds["nearmiss_k"] < 0:
            fail("dataset.nearmiss_k must be >= 0", "dataset", "nearmiss_k")
    else:
        fail(f"unknown dataset.kind {kind!r}; expected circles, linear or csv", "dataset", "kind")
    if not ds["tau"] > 0:
        fail("dataset.tau must be > 0", "dataset", "tau")

    if k["kind"] not in ("rbf", "linear"):
        fail(f"unknown kernel.kind {k['kind']!r}", "kernel", "kind")
    if not k["sigma"] > 0:
        fail("kernel.sigma must be > 0", "kernel", "sigma")

    if m["kind"] not in ("feature_linear", "feature_simulated", "label_flip", "bankruptcy"):
        fail(f"unknown map.kind {m['kind']!r}", "map", "kind")
    if not m["d"]:
        fail("map.d must list at least one value", "map", "d")
    for v in m["d"]:
        if not _type_ok(v, _num) or v < 0:
            fail("map.d entries must be numbers >= 0", "map", "d")
    m["d"] = [float(v) for v in m["d"]]
    if len(set(m["d"])) != len(m["d"]):
        fail("map.d has duplicates", "map", "d")
    if m["n_candidates"] < 1:
        fail("map.n_candidates must be >= 1", "map", "n_candidates")
    if m["flip_rule"] not in ("printed", "complement"):
        fail("map.flip_rule must be 'printed' or 'complement'", "map", "flip_rule")
    if m["kind"] == "bankruptcy":
        if kind != "csv":
            fail("the bankruptcy map needs csv data", "map", "kind")
        if (m["performative"] is None) == (m["non_performative"] is None):
            fail("give exactly one of map.performative and map.non_performative", "map")
        if m["performative"] is not None and not m["performative"]:
            fail("map.performative must name at least one column", "map", "performative")
    elif any(m[key] is not None for key in ("performative", "non_performative", "b")):
        fail("map.performative, map.non_performative and map.b apply only to the bankruptcy map", "map")

    if not 0 < r["alpha"] < 0.5:
        fail(f"rrm.alpha must lie in (0, 0.5), got {r['alpha']}", "rrm", "alpha")
    if r["T_max"] < 1 or r["trials"] < 1:
        fail("rrm.T_max and rrm.trials must be >= 1", "rrm")
    if not 0 <= r["burn_in"] < r["T_max"]:
        fail("rrm.burn_in must lie in [0, T_max)", "rrm", "burn_in")
    if not r["C_init"] > 0:
        fail("rrm.C_init must be > 0", "rrm", "C_init")
    if r["violator_filter"] not in ("previous", "current"):
        fail("rrm.violator_filter must be 'previous' or 'current'", "rrm", "violator_filter")
    if not s["tol"] > 0 or s["max_passes"] < 1:
        fail("solver.tol must be > 0 and solver.max_passes >= 1", "solver")
    if bl["l2"] < 0 or not bl["tol"] > 0 or bl["max_iters"] < 1 or not bl["step_lr"] > 0:
        fail("baselines: l2 >= 0, tol > 0, max_iters >= 1, step_lr > 0 required", "baselines")
    if bl["lr"] is not None and not bl["lr"] > 0:
        fail("baselines.lr must be > 0", "baselines", "lr")


def parse(text: str, source: str = "<string>") -> ExperimentConfig:
    try:
        tree = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(str(exc), int(m.group(1)) if m else 1, source) from None
    try:
        return ExperimentConfig(validate(tree, _Lines(text)), source)
    except ConfigError as exc:
        raise ConfigError(exc.message, exc.line, source) from None


def load(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read file: {exc.strerror}", None, str(path)) from None
    return parse(text, str(path))
