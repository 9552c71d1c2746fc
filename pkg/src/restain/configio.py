"""Flat key=value run configuration files.

One `key = value` pair per line, full-line # comments, blank lines
ignored. Unknown and duplicate keys are hard errors that cite line
numbers, so a typo can never silently fall back to a default. Every
command writes its resolved configuration next to its outputs;
emission order is fixed by the schema, so reruns are byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .errors import DataError

_MISSING = object()


@dataclass(frozen=True)
class ConfigField:
    name: str
    parse: Callable[[str], object]
    default: object = _MISSING

    @property
    def required(self) -> bool:
        return self.default is _MISSING


def parse_kv(path) -> list[tuple[int, str, str]]:
    """(line_number, key, value) triples in file order."""
    try:
        with open(path) as f:
            lines = f.readlines()
    except OSError as e:
        raise DataError(f"cannot read config {path}: {e}") from None
    entries = []
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"{path}: line {lineno}: expected key = value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise DataError(f"{path}: line {lineno}: empty key")
        if key in seen:
            raise DataError(
                f"{path}: line {lineno}: duplicate key {key!r} (first at line {seen[key]})"
            )
        seen[key] = lineno
        entries.append((lineno, key, value))
    return entries


def resolve(entries, schema: list[ConfigField], path="config") -> dict:
    """Typed config dict; rejects unknown keys, missing required ones,
    and unparseable values, citing line numbers."""
    fields = {f.name: f for f in schema}
    unknown = [
        f"{key!r} at line {lineno}" for lineno, key, _ in entries if key not in fields
    ]
    if unknown:
        raise DataError(f"{path}: unknown keys: " + ", ".join(unknown))
    out = {f.name: f.default for f in schema}
    for lineno, key, value in entries:
        try:
            out[key] = fields[key].parse(value)
        except (ValueError, TypeError):
            raise DataError(
                f"{path}: line {lineno}: cannot parse {key} value {value!r}"
            ) from None
    missing = [name for name, v in out.items() if v is _MISSING]
    if missing:
        raise DataError(f"{path}: missing required keys: " + ", ".join(missing))
    return out


def load_config(path, schema: list[ConfigField]) -> dict:
    return resolve(parse_kv(path), schema, path=path)


def write_kv(path, items: dict) -> None:
    """Emit in the given key order; floats via repr for exact reload."""
    with open(path, "w") as f:
        for key, value in items.items():
            f.write(f"{key} = {value!r}\n" if isinstance(value, float) else f"{key} = {value}\n")
