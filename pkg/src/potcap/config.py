"""Flat ``key = value`` experiment configs with dotted keys.

One assignment per line::

    experiment = capacity
    domain.kind = ball
    domain.radius = 1.0
    potential.terms[0].m = 3
    schedule.j = [16, 64, 256]

Values are parsed as JSON when possible and kept as bare strings otherwise.
``#`` starts a comment.  Every parsed key remembers its line so errors can
point at it.
"""

from __future__ import annotations

import copy
import json
import re
from dataclasses import dataclass, field

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config", "DEFAULTS", "EXPERIMENTS"]

EXPERIMENTS = ("capacity", "rates", "lorentz", "dichotomy", "removable", "kato", "density")

_KEY = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*(\[\d+\])?(\.[A-Za-z_][A-Za-z0-9_]*(\[\d+\])?)*$")
_PART = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)(?:\[(\d+)\])?")


class ConfigError(ValueError):
    """Malformed config; ``messages`` holds one ``path:line: text`` entry per problem."""

    def __init__(self, messages):
        self.messages = list(messages)
        super().__init__("\n".join(self.messages))


_BALL3 = {"kind": "ball", "center": [0.0, 0.0, 0.0], "radius": 1.0, "h": 0.0625}
_DISK = {"kind": "ball", "center": [0.0, 0.0], "radius": 1.0, "h": 0.03125}
_ORIGIN3 = {"kind": "point", "point": [0.0, 0.0, 0.0]}

DEFAULTS = {
    "capacity": {
        "domain": _BALL3,
        "set": _ORIGIN3,
        "potential": {"terms": [{"m": 3.0, "b": 1.0}]},
        "schedule": {"j": [2**k for k in range(4, 25, 2)]},
        "tolerance": 1e-3,
    },
    "rates": {
        "domain": _BALL3,
        "set": _ORIGIN3,
        "potential": {"terms": [{"m": 3.0, "b": 1.0}]},
        "schedule": {"j": [8, 16, 32, 64, 128, 256, 512, 1024]},
    },
    "lorentz": {
        "domain": _BALL3,
        "set": _ORIGIN3,
        "potential": {"terms": [{"m": 1.5, "b": 1.0}]},
        "lorentz": {"p": 1.5, "q": 1.0},
        "schedule": {"levels": 4},
        "tolerance": 1.05,
    },
    "dichotomy": {
        "solver": {"mode": "radial", "cells": 1024, "r_min": 1e-8, "rtol": 1e-10},
        "domain": _BALL3,
        "set": _ORIGIN3,
        "potential": {"terms": [{"m": 3.0, "b": 1.0}]},
        "data": {"kind": "dirac", "point": [0.0, 0.0, 0.0], "mass": 1.0},
        "transport": {"kind": "none", "kappa": 1.0},
        "schedule": {"j": [10 * 2**k for k in range(11)]},
    },
    "removable": {
        "domain": _BALL3,
        "set": _ORIGIN3,
        "potential": {"terms": [{"m": 3.0, "b": 1.0}]},
        "candidate": {"kind": "zero", "epsilon": 1e-3, "center": [0.4, 0.0, 0.0], "radius": 0.2},
        "schedule": {"j": [16, 32, 64, 128, 256]},
        "tolerance": 1e-3,
    },
    "kato": {
        "domain": _DISK,
        "kato": {"pairs": 50},
        "tolerance": 1e-12,
    },
    "density": {
        "domain": _BALL3,
        "set": _ORIGIN3,
        "potential": {"terms": [{"m": 3.0, "b": 1.0}]},
        "schedule": {"j": [8, 16, 32, 64, 128, 256]},
        "tolerance": 1e-2,
    },
}


def _coerce(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _assign(tree, key, value):
    parts = key.split(".")
    node = tree
    for i, part in enumerate(parts):
        name, idx = _PART.fullmatch(part).groups()
        last = i == len(parts) - 1
        if idx is None:
            if last:
                node[name] = value
            else:
                if not isinstance(node.get(name), dict):
                    node[name] = {}
                node = node[name]
        else:
            k = int(idx)
            lst = node.get(name)
            if not isinstance(lst, list):
                lst = node[name] = []
            while len(lst) <= k:
                lst.append({})
            if last:
                lst[k] = value
            else:
                if not isinstance(lst[k], dict):
                    lst[k] = {}
                node = lst[k]


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        elif isinstance(v, list) and isinstance(out.get(k), list) and v and all(isinstance(x, dict) for x in v):
            merged = copy.deepcopy(out[k])
            for i, item in enumerate(v):
                if i < len(merged) and isinstance(merged[i], dict):
                    merged[i] = _merge(merged[i], item)
                elif i < len(merged):
                    merged[i] = item
                else:
                    merged.append(item)
            out[k] = merged
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass
class ExperimentConfig:
    """A parsed config: the merged settings plus the source line of each key."""

    experiment: str
    settings: dict
    lines: dict = field(default_factory=dict)
    path: str = "<config>"

    def get(self, dotted, default=None):
        node = self.settings
        for part in dotted.split("."):
            name, idx = _PART.fullmatch(part).groups()
            if not isinstance(node, dict) or name not in node:
                return default
            node = node[name]
            if idx is not None:
                if not isinstance(node, list) or int(idx) >= len(node):
                    return default
                node = node[int(idx)]
        return node

    def where(self, dotted):
        """``path:line`` of the key (or of its closest configured parent)."""
        key = dotted
        while key:
            if key in self.lines:
                return f"{self.path}:{self.lines[key]}"
            for k, ln in self.lines.items():
                if k.startswith(key + ".") or k.startswith(key + "["):
                    return f"{self.path}:{ln}"
            key = key.rpartition(".")[0]
        return f"{self.path}:default"

    def with_override(self, dotted, value):
        settings = copy.deepcopy(self.settings)
        _assign(settings, dotted, value)
        lines = dict(self.lines)
        lines[dotted] = "cli"
        return ExperimentConfig(self.experiment, settings, lines, self.path)

    def echo(self):
        return {"experiment": self.experiment, **copy.deepcopy(self.settings)}


def parse_config(text, path="<config>"):
    """Parse config text; raise :class:`ConfigError` with line-precise messages."""
    errors = []
    raw = {}
    lines = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            errors.append(f"{path}:{lineno}: expected 'key = value', got {body!r}")
            continue
        key, _, value = (s.strip() for s in body.partition("="))
        if not _KEY.match(key):
            errors.append(f"{path}:{lineno}: malformed key {key!r}")
            continue
        if not value:
            errors.append(f"{path}:{lineno}: missing value for {key!r}")
            continue
        if key in lines:
            errors.append(f"{path}:{lineno}: duplicate key {key!r} (first set on line {lines[key]})")
            continue
        raw[key] = _coerce(value)
        lines[key] = lineno
    exp = raw.pop("experiment", None)
    if exp is None and not errors:
        errors.append(f"{path}:1: missing required key 'experiment'")
    elif exp is not None and exp not in EXPERIMENTS:
        errors.append(f"{path}:{lines['experiment']}: unknown experiment {exp!r} (expected one of {', '.join(EXPERIMENTS)})")
    if errors:
        raise ConfigError(errors)
    tree = {}
    for key, value in raw.items():
        _assign(tree, key, value)
    lines.pop("experiment", None)
    return ExperimentConfig(exp, _merge(DEFAULTS[exp], tree), lines, path)


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), str(path))


def default_config(experiment):
    if experiment not in EXPERIMENTS:
        raise ConfigError([f"<default>:1: unknown experiment {experiment!r}"])
    return ExperimentConfig(experiment, copy.deepcopy(DEFAULTS[experiment]), {}, "<default>")
