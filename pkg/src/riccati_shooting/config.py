"""Run configuration: INI-style files with ``--set section.key=value`` overrides.

Every section and key has a default, so an empty file is a valid
configuration.  Unknown sections or keys and malformed values are rejected
with the line number where they appear.
"""

import configparser
import math
import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Tuple

from .errors import ConfigError

MODES = ("solve-ode", "find-critical", "equilibrium", "simulate", "verify-all", "sweep")


def _float(text):
    value = float(text)
    if math.isnan(value):
        raise ValueError("nan is not allowed")
    return value


def _int(text):
    return int(text, 0)


def _bool(text):
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _float_list(text):
    items = [t for t in re.split(r"[,\s]+", text.strip()) if t]
    if not items:
        raise ValueError("empty list")
    return tuple(_float(t) for t in items)


def _optional_float(text):
    return None if text.strip() == "" else _float(text)


def _mode(text):
    text = text.strip()
    if text not in MODES:
        raise ValueError(f"mode must be one of {', '.join(MODES)}")
    return text


# section -> key -> (parser, default)
SCHEMA: Dict[str, Dict[str, Tuple]] = {
    "run": {
        "mode": (_mode, "verify-all"),
    },
    "model": {
        "gamma": (_float, 0.5),
        "sigma_D": (_float, 0.2),
        "A": (_float, 2.0),
        "xi": (_float, 0.03),
    },
    "economy": {
        "beta": (_float, 0.025),
        "mu_D": (_float, 0.02),
        "sigma_D": (_float, 0.2),
        "gamma": (_float, 0.5),
        "D0": (_float, 1.0),
    },
    "integrator": {
        "rel_tol": (_float, 1e-10),
        "abs_tol": (_float, 1e-10),
        "min_step": (_float, 1e-14),
        "explosion_cap": (_float, 1e3),
        "start_offset": (_float, 1e-6),
        "end_offset": (_float, 1e-8),
    },
    "shooting": {
        "xi_tol": (_float, 1e-9),
    },
    "equilibrium": {
        "n": (_int, 101),
        "margin": (_float, 1e-3),
        "theta2": (_optional_float, None),
    },
    "simulation": {
        "Y0": (_float, 0.5),
        "dt": (_float, 0.02),
        "horizon": (_float, 20.0),
        "refine": (_int, 2),
        "n_paths": (_int, 100_000),
        "seed": (_int, 0),
        "clamp_margin": (_float, 1e-8),
        "max_clamp_rate": (_float, 1e-3),
        "dividend_dt": (_float, 0.1),
        "dividend_horizon": (_float, 300.0),
        "dump_paths": (_bool, False),
    },
    "sweep": {
        "xi": (_float_list, (0.15, 0.152, 0.1522, 0.15223, 0.152232)),
    },
    "verify": {
        "n_paths": (_int, 100_000),
        "seed": (_int, 0),
    },
}

# case-sensitive names that configparser would otherwise fold
_KEY_LOOKUP = {s: {k.lower(): k for k in keys} for s, keys in SCHEMA.items()}


@dataclass
class RunConfig:
    values: Dict[str, Dict[str, object]] = field(default_factory=dict)
    source: Optional[str] = None

    def __getitem__(self, section):
        return self.values[section]

    @property
    def mode(self) -> str:
        return self.values["run"]["mode"]


def _defaults():
    return {s: {k: spec[1] for k, spec in keys.items()} for s, keys in SCHEMA.items()}


def _line_index(text: str):
    """Map ``(section, lowercased key)`` and sections to their 1-based line numbers."""
    where, section = {}, None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            where.setdefault((section, None), n)
            continue
        m = re.match(r"([^=:]+?)\s*[=:]", line)
        if m and section is not None:
            where.setdefault((section, m.group(1).strip().lower()), n)
    return where


def _assign(values, section, key, raw, origin):
    if section not in SCHEMA:
        raise ConfigError(f"{origin}: unknown section [{section}]")
    name = _KEY_LOOKUP[section].get(key.lower())
    if name is None:
        raise ConfigError(f"{origin}: unknown key {key!r} in section [{section}]")
    parser = SCHEMA[section][name][0]
    try:
        values[section][name] = parser(raw)
    except ValueError as exc:
        raise ConfigError(f"{origin}: bad value {raw!r} for {section}.{name}: {exc}") from None


def parse_text(text: str, source: str = "<config>") -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, default_section="__unused__")
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: entry before any [section]: "
                          f"{exc.line.strip()!r}") from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"{source}:{lineno}: cannot parse {line.strip()!r}") from None
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as exc:
        raise ConfigError(f"{source}:{exc.lineno}: {exc.message}") from None
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    lines = _line_index(text)
    values = _defaults()
    for section in parser.sections():
        if section not in SCHEMA:
            n = lines.get((section, None), "?")
            raise ConfigError(f"{source}:{n}: unknown section [{section}]")
        for key, raw in parser.items(section):
            n = lines.get((section, key.lower()), "?")
            _assign(values, section, key, raw, f"{source}:{n}")
    return RunConfig(values, source)


def load(path: Optional[str] = None, overrides: Iterable[str] = ()) -> RunConfig:
    """Read ``path`` (or start from defaults) and apply ``section.key=value`` overrides."""
    if path is None:
        cfg = RunConfig(_defaults())
    else:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        cfg = parse_text(text, path)
    for item in overrides:
        apply_override(cfg, item)
    return cfg


def apply_override(cfg: RunConfig, item: str):
    key, sep, raw = item.partition("=")
    section, dot, name = key.strip().partition(".")
    if not sep or not dot or not section or not name:
        raise ConfigError(f"--set expects section.key=value, got {item!r}")
    _assign(cfg.values, section, name.strip(), raw.strip(), f"--set {item}")


def dump(cfg: RunConfig) -> str:
    """Render the full configuration (defaults included) as INI text."""
    out = []
    for section, keys in SCHEMA.items():
        out.append(f"[{section}]")
        for key in keys:
            value = cfg.values[section][key]
            if value is None:
                text = ""
            elif isinstance(value, tuple):
                text = ", ".join(repr(v) for v in value)
            elif isinstance(value, bool):
                text = "true" if value else "false"
            else:
                text = repr(value) if isinstance(value, float) else str(value)
            out.append(f"{key} = {text}")
        out.append("")
    return "\n".join(out)
