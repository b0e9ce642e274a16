"""Sectioned ``key = value`` run configuration with typed defaults.

Values are validated against :data:`SCHEMA`; any problem is reported as
:class:`ConfigError` pointing at the offending file line when there is one.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import re
from pathlib import Path

from .errors import FourlinError


class ConfigError(FourlinError, ValueError):
    pass


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _int_list(text: str) -> list[int]:
    items = [x for x in re.split(r"[,\s]+", text.strip()) if x]
    if not items:
        raise ValueError("expected a non-empty list of integers")
    return [int(x) for x in items]


def _triples(text: str) -> list[tuple[int, int, int]]:
    out = []
    for chunk in text.split(";"):
        if chunk.strip():
            vals = _int_list(chunk)
            if len(vals) != 3:
                raise ValueError(f"expected n,N,K triples separated by ';', got {chunk!r}")
            out.append(tuple(vals))
    return out


def _opt_int(text: str) -> int | None:
    return None if text.strip().lower() in ("", "none", "auto") else int(text)


def _choice(*options):
    def parse(text: str) -> str:
        t = text.strip()
        if t not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {t!r}")
        return t

    return parse


def _str(text: str) -> str:
    return text.strip()


SCHEMA: dict[str, dict[str, tuple]] = {
    "run": {"seed": (int, "0")},
    "data": {
        "d": (int, "1"),
        "N": (int, "32"),
        "n": (int, "8"),
        "gamma": (float, "2.0"),
        "sigma": (float, "10.0"),
        "bound": (float, "2.0"),
        "noise": (_bool, "true"),
        "K_star": (_opt_int, "auto"),
    },
    "fit": {
        "manifest": (_str, "data/manifest.json"),
        "K": (int, "4"),
        "C": (float, "2.0"),
        "method": (_choice("closed_form", "projected_sgd"), "closed_form"),
        "step_size": (float, "0.5"),
        "batch_size": (int, "32"),
        "epochs": (int, "200"),
        "seed": (int, "0"),
    },
    "eval": {
        "operator": (_str, "fit/operator.fop"),
        "manifest": (_str, "data/manifest.json"),
        "csv": (_str, "eval.csv"),
        "squared": (_bool, "false"),
    },
    "sweep": {
        "kind": (_choice("statistical", "truncation", "discretization"), "statistical"),
        "d": (int, "2"),
        "N": (int, "64"),
        "K": (int, "32"),
        "gamma": (float, "2.0"),
        "sigma": (float, "10.0"),
        "bound": (float, "2.0"),
        "C": (float, "2.0"),
        "noise": (_bool, "true"),
        "test_noise": (_bool, "false"),
        "n_train": (int, "500"),
        "n_test": (int, "100"),
        "seeds": (int, "5"),
        "redraw_operator": (_bool, "true"),
        "squared": (_bool, "false"),
        "n_list": (_int_list, "10, 50, 100, 500"),
        "K_list": (_int_list, "1, 2, 4, 8, 16, 32"),
        "N_list": (_int_list, "8, 16, 32, 64"),
        "N_test": (int, "64"),
    },
    "verify": {
        "draws": (int, "100"),
        "s": (int, "1"),
        "B": (float, "1.0"),
        "trials": (int, "200"),
        "lower_bound": (_triples, "4,8,2; 2,8,1; 8,16,4"),
        "counterexample_K": (int, "2"),
    },
}


def _line_numbers(text: str) -> dict[tuple[str, str], int]:
    where, section = {}, None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip()
            continue
        m = re.match(r"([^=:#;\s][^=:]*?)\s*[=:]", s)
        if m and section is not None:
            where.setdefault((section, m.group(1).strip()), i)
    return where


class RunConfig:
    """Resolved configuration: every schema key has a raw string and a typed value."""

    def __init__(self, raw: dict[str, dict[str, str]]):
        self.raw = raw
        self.values: dict[str, dict] = {}

    @classmethod
    def load(cls, path: str | Path | None = None, overrides: list[str] = ()) -> "RunConfig":
        raw = {sec: {k: v[1] for k, v in keys.items()} for sec, keys in SCHEMA.items()}
        where: dict[tuple[str, str], str] = {}
        if path is not None:
            try:
                text = Path(path).read_text(encoding="utf-8")
            except UnicodeDecodeError as exc:
                raise ConfigError(f"{path}: not a UTF-8 text file") from exc
            except OSError as exc:
                raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
            lines = _line_numbers(text)
            cp = configparser.ConfigParser(interpolation=None)
            cp.optionxform = str
            try:
                cp.read_string(text, source=str(path))
            except configparser.Error as exc:
                raise ConfigError(f"{path}: {exc}") from exc
            for sec in cp.sections():
                if sec not in SCHEMA:
                    raise ConfigError(f"{path}:{_sec_line(text, sec)}: unknown section [{sec}]")
                for key, val in cp.items(sec):
                    loc = f"{path}:{lines.get((sec, key), '?')}"
                    if key not in SCHEMA[sec]:
                        raise ConfigError(f"{loc}: unknown key {sec}.{key}")
                    raw[sec][key] = val
                    where[(sec, key)] = loc
        for item in overrides:
            name, sep, val = item.partition("=")
            sec, dot, key = name.strip().partition(".")
            if not sep or not dot:
                raise ConfigError(f"--set {item!r}: expected section.key=value")
            if sec not in SCHEMA or key not in SCHEMA[sec]:
                raise ConfigError(f"--set {item!r}: unknown key {sec}.{key}")
            raw[sec][key] = val
            where[(sec, key)] = f"--set {name.strip()}"
        cfg = cls(raw)
        for sec, keys in SCHEMA.items():
            cfg.values[sec] = {}
            for key, (parse, _) in keys.items():
                try:
                    cfg.values[sec][key] = parse(raw[sec][key])
                except ValueError as exc:
                    loc = where.get((sec, key), "default")
                    raise ConfigError(f"{loc}: {sec}.{key}: {exc}") from exc
        return cfg

    def __getitem__(self, section: str) -> dict:
        return self.values[section]

    def dumps(self, sections=None) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        for sec in sections or SCHEMA:
            cp[sec] = {k: self.raw[sec][k].strip() for k in SCHEMA[sec]}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def digest(self, sections=None) -> str:
        return hashlib.sha256(self.dumps(sections).encode("utf-8")).hexdigest()[:16]


def _sec_line(text: str, sec: str) -> int | str:
    for i, line in enumerate(text.splitlines(), 1):
        if line.strip() == f"[{sec}]":
            return i
    return "?"
