"""Plain-text configuration: `key = value` lines mapped onto the three
config dataclasses (encoder, lexical, training).

All field names share one flat namespace (the dataclasses have disjoint
fields; checked at import time).  Lines starting with # and blank lines are
ignored; an inline ` # comment` after the value is stripped.  CLI overrides
use the same `key=value` syntax and are applied after the file.
"""

from __future__ import annotations

import dataclasses

from .encoder import EncoderConfig
from .lexical import LexicalConfig
from .training import TrainConfig


class ConfigError(ValueError):
    """Malformed configuration text or unknown/ill-typed keys."""


_SECTIONS = (EncoderConfig, LexicalConfig, TrainConfig)


def _field_map():
    out = {}
    for cls in _SECTIONS:
        for f in dataclasses.fields(cls):
            if f.name in out:
                raise AssertionError("config field %r defined twice" % f.name)
            out[f.name] = (cls, f)
    return out


_FIELDS = _field_map()

_TRUE = ("true", "yes", "on", "1")
_FALSE = ("false", "no", "off", "0")


def _coerce(name, text, py_type):
    text = text.strip()
    try:
        if py_type is bool:
            low = text.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError
        if py_type is int:
            return int(text)
        if py_type is float:
            return float(text)
        return text
    except ValueError:
        raise ConfigError("key %r expects a %s, got %r"
                          % (name, py_type.__name__, text)) from None


_TYPE_NAMES = {"int": int, "float": float, "str": str, "bool": bool}


def parse_config_text(text, source="<config>") -> dict:
    """Parse `key = value` lines into a raw string dict."""
    out = {}
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("%s:%d: expected 'key = value', got %r"
                              % (source, lineno, raw.strip()))
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_config_file(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read(), source=str(path))


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply CLI `key=value` strings on top of the file values."""
    out = dict(raw)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError("override %r is not of the form key=value"
                              % item)
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def build_configs(raw: dict):
    """Turn raw strings into validated (EncoderConfig, LexicalConfig,
    TrainConfig).  Unknown keys are errors, not warnings."""
    per_class = {cls: {} for cls in _SECTIONS}
    for key, value in raw.items():
        if key not in _FIELDS:
            raise ConfigError("unknown configuration key %r" % key)
        cls, f = _FIELDS[key]
        py_type = _TYPE_NAMES.get(f.type, str) if isinstance(f.type, str) else f.type
        per_class[cls][key] = _coerce(key, value, py_type)
    encoder = EncoderConfig(**per_class[EncoderConfig]).validate()
    lexical = LexicalConfig(**per_class[LexicalConfig]).validate()
    train = TrainConfig(**per_class[TrainConfig]).validate()
    return encoder, lexical, train


def default_config_text() -> str:
    """Render every key with its default value, as a starting-point file."""
    lines = []
    for cls in _SECTIONS:
        lines.append("# %s" % cls.__name__)
        for f in dataclasses.fields(cls):
            value = f.default
            if isinstance(value, bool):
                value = "true" if value else "false"
            lines.append("%s = %s" % (f.name, value))
        lines.append("")
    return "\n".join(lines)
