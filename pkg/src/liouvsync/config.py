"""Flat key=value run configuration.

Files hold one ``key = value`` pair per line with ``#`` comments. Every
command declares its key schema; unknown keys are errors, not warnings.
Rate-valued keys are accepted either absolutely or in units of gamma through
the ``_over_gamma`` suffix (gamma itself is always absolute); giving both
forms of one key is an error.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["ConfigError", "Field", "parse_config_text", "serialize_config", "resolve"]


class ConfigError(ValueError):
    """Invalid configuration (unknown key, bad value, conflicting forms)."""


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_PARSERS = {"float": float, "int": int, "str": str, "bool": _parse_bool}


@dataclass(frozen=True)
class Field:
    """One config key: its type, default (None = required) and rate-ness."""

    name: str
    kind: str = "float"
    default: object = None
    required: bool = False
    rate: bool = False


def parse_config_text(text: str) -> dict[str, str]:
    """Raw key -> value mapping; duplicates and malformed lines are errors."""
    out: dict[str, str] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw_line!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.split("#", 1)[0].strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def serialize_config(raw: dict[str, str]) -> str:
    return "".join(f"{key} = {value}\n" for key, value in raw.items())


def resolve(raw: dict[str, str], fields: list[Field]) -> dict:
    """Validate a raw mapping against a schema and produce typed values."""
    by_name = {f.name: f for f in fields}
    known = set(by_name)
    known.update(f.name + "_over_gamma" for f in fields if f.rate)
    unknown = [k for k in raw if k not in known]
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(sorted(unknown))}")

    def parse_value(field: Field, key: str) -> object:
        try:
            return _PARSERS[field.kind](raw[key])
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"key {key!r}: {exc}") from exc

    gamma_field = by_name.get("gamma")
    gamma = None
    if gamma_field is not None:
        gamma = parse_value(gamma_field, "gamma") if "gamma" in raw else gamma_field.default

    out: dict = {}
    for field in fields:
        scaled_key = field.name + "_over_gamma"
        has_abs = field.name in raw
        has_scaled = field.rate and scaled_key in raw
        if has_abs and has_scaled:
            raise ConfigError(f"both {field.name!r} and {scaled_key!r} given")
        if has_abs:
            out[field.name] = parse_value(field, field.name)
        elif has_scaled:
            if gamma is None:
                raise ConfigError(f"{scaled_key!r} needs a gamma value")
            try:
                out[field.name] = float(raw[scaled_key]) * gamma
            except ValueError as exc:
                raise ConfigError(f"key {scaled_key!r}: {exc}") from exc
        elif field.required:
            raise ConfigError(f"missing required key {field.name!r}")
        else:
            out[field.name] = field.default
    return out
