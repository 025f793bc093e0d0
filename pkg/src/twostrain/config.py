"""Run configuration files.

INI syntax with one section per command plus a shared ``[params]`` block.
Every key is typed; unknown sections or keys are rejected so that a typo
in a rate name cannot silently fall back to a default.  Relative file
paths resolve against the config file's directory.

Example::

    [params]
    beta1 = 0.4
    beta2 = 0.6
    gamma1 = 0.2
    gamma2 = 0.1
    sigma1 = 0.1
    sigma2 = 0.1
    epsilon = 0
    n_pop = 10000

    [simulate]
    model = full
    t_end = 1000
    i1 = 500
    i2 = 1000
"""
from __future__ import annotations

import configparser
import datetime as dt
from dataclasses import dataclass
from pathlib import Path

from .core import PARAM_NAMES, ModelParams
from .errors import ConfigError

REQUIRED = object()


def _choice(*options):
    def parse(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text
    parse.__name__ = "choice"
    return parse


def _bool(text):
    lowered = text.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true or false")


def _names(text):
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise ValueError("expected a positive integer")
    return v


def _nonnegative_int(text):
    v = int(text)
    if v < 0:
        raise ValueError("expected a non-negative integer")
    return v


_PATH = "path"

SCHEMA = {
    "params": {name: (float, REQUIRED) for name in PARAM_NAMES},
    "simulate": {
        "model": (_choice("full", "reduced"), "full"),
        "t_end": (float, REQUIRED),
        "h": (float, 0.05),
        "i1": (float, 0.0),
        "r1": (float, 0.0),
        "i2": (float, 0.0),
        "r2": (float, 0.0),
        "quasi_steady_start": (_bool, False),
        "record_every": (_positive_int, 1),
    },
    "analyze": {},
    "phase": {
        "field_points": (_positive_int, 21),
        "nullcline_points": (_positive_int, 101),
    },
    "scan": {
        "axis1": (str, REQUIRED),
        "axis1_start": (float, REQUIRED),
        "axis1_stop": (float, REQUIRED),
        "axis1_num": (_positive_int, REQUIRED),
        "axis2": (str, REQUIRED),
        "axis2_start": (float, REQUIRED),
        "axis2_stop": (float, REQUIRED),
        "axis2_num": (_positive_int, REQUIRED),
        "quantity": (_choice("region", "r12", "r21"), "region"),
    },
    "fit": {
        "model": (_choice("full", "reduced"), "full"),
        "case_file": (_PATH, REQUIRED),
        "share_file": (_PATH, REQUIRED),
        "start_date": (dt.date.fromisoformat, None),
        "end_date": (dt.date.fromisoformat, None),
        "free": (_names, None),
        "max_iterations": (_nonnegative_int, 2000),
        "h": (float, 0.25),
        "seed": (_nonnegative_int, 0),
        "i1_0": (float, 0.0),
        "r1_0": (float, 0.0),
        "i2_0": (float, 0.0),
        "r2_0": (float, 0.0),
    },
}

# sections each command needs besides the ones it may optionally read
COMMAND_SECTIONS = {
    "simulate": ("params", "simulate"),
    "analyze": ("params",),
    "phase": ("params",),
    "scan": ("params", "scan"),
    "fit": ("params", "fit"),
}


@dataclass(frozen=True)
class RunConfig:
    path: Path
    sections: dict  # section name -> {key: typed value}

    def section(self, name: str) -> dict:
        if name in self.sections:
            return self.sections[name]
        return _parse_section(self.path, name, {})

    def params(self) -> ModelParams:
        return ModelParams(**self.sections["params"])

    def require(self, command: str) -> None:
        missing = [s for s in COMMAND_SECTIONS[command] if s not in self.sections]
        if missing:
            raise ConfigError(f"{self.path}: command {command!r} needs section [{missing[0]}]")


def _parse_section(path: Path, name: str, raw: dict) -> dict:
    schema = SCHEMA[name]
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"{path}: unknown key {unknown[0]!r} in [{name}]")
    out = {}
    for key, (kind, default) in schema.items():
        if key not in raw:
            if default is REQUIRED:
                raise ConfigError(f"{path}: [{name}] is missing required key {key!r}")
            out[key] = default
            continue
        text = raw[key].strip()
        if kind is _PATH:
            target = Path(text)
            if not target.is_absolute():
                target = path.parent / target
            if not target.is_file():
                raise ConfigError(f"{path}: [{name}] {key} refers to missing file {target}")
            out[key] = target
            continue
        try:
            out[key] = kind(text)
        except ValueError as exc:
            raise ConfigError(f"{path}: [{name}] {key} = {text!r}: {exc}") from None
    return out


def load_config(path) -> RunConfig:
    """Parse and type-check a run configuration.

    Raises
    ------
    ConfigError
        On syntax errors, unknown sections or keys, missing required keys,
        values of the wrong type, or references to files that do not exist.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    parser = configparser.ConfigParser(interpolation=None, default_section="__no_defaults__",
                                       inline_comment_prefixes=("#",))
    parser.optionxform = str  # keep key case so typos are not folded away
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    sections = {}
    for name in parser.sections():
        if name not in SCHEMA:
            raise ConfigError(f"{path}: unknown section [{name}]")
        sections[name] = _parse_section(path, name, dict(parser[name]))
    return RunConfig(path, sections)
