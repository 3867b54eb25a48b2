"""Line-oriented configuration files.

The format is diff-friendly plain text: one ``key = value`` pair per line,
with dotted section names (``mission.launch_speed_mps = 4.0``).  Blank
lines and ``#`` comments are ignored.  Values parse as int, float, bool,
or string; serialization sorts keys so parse -> serialize -> parse is the
identity on the mapping.
"""

from __future__ import annotations

from typing import Dict, Union

__all__ = ["ConfigError", "parse_config", "serialize_config", "load_config"]

Value = Union[int, float, bool, str]


class ConfigError(ValueError):
    """Malformed or invalid configuration input."""


def _parse_value(raw: str) -> Value:
    text = raw.strip()
    if text.lower() == "true":
        return True
    if text.lower() == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def parse_config(text: str) -> Dict[str, Value]:
    """Parse ``key = value`` lines into a flat dotted-key mapping."""
    result: Dict[str, Value] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', "
                              f"got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in result:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        result[key] = _parse_value(raw)
    return result


def _format_value(value: Value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)  # shortest round-trip decimal
    return str(value)


def serialize_config(mapping: Dict[str, Value]) -> str:
    """Render a mapping as sorted ``key = value`` lines."""
    lines = [f"{key} = {_format_value(mapping[key])}"
             for key in sorted(mapping)]
    return "\n".join(lines) + ("\n" if lines else "")


def load_config(path: str) -> Dict[str, Value]:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_config(handle.read())
