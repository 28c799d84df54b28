"""Flat key-value run configuration.

Config files are plain text, one `key = value` assignment per line, with
`#` comments and blank lines ignored.  Keys are namespaced with dotted
prefixes (`sde.epsilon`, `mc.replicas`); model parameters live at the top
level (`alpha_on`, `alpha_off`, `beta`, `x_ref`), as does `seed`.  Values
use decimal notation.  Later assignments win within a file, command-line
`--set key=value` overrides win over the file, and dedicated flags win
over everything.
"""

from __future__ import annotations

from pathlib import Path

from .errors import ConfigError
from .params import ConverterParams

_TRUE = {"true", "1", "yes", "on"}
_FALSE = {"false", "0", "no", "off"}


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"{source}:{lineno}: empty key or value in {raw!r}")
        values[key] = value
    return values


def load_config(path: str | Path) -> dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config_text(text, source=str(path))


def apply_overrides(values: dict[str, str], overrides: list[str]) -> dict[str, str]:
    """Merge repeatable `key=value` override strings; later entries win."""
    out = dict(values)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        out[key] = value
    return out


class ConfigView:
    """Typed access to the flat key-value map."""

    def __init__(self, values: dict[str, str]):
        self.values = values

    def has(self, key: str) -> bool:
        return key in self.values

    def _raw(self, key: str, default):
        if key in self.values:
            return self.values[key]
        if default is _REQUIRED:
            raise ConfigError(f"missing required config key '{key}'")
        return default

    def get_float(self, key: str, default=None) -> float | None:
        raw = self._raw(key, default)
        if raw is None or isinstance(raw, (int, float)):
            return raw
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"config key '{key}': {raw!r} is not a number") from exc

    def get_int(self, key: str, default=None) -> int | None:
        raw = self._raw(key, default)
        if raw is None or isinstance(raw, int):
            return raw
        try:
            return int(str(raw), 10)
        except ValueError as exc:
            raise ConfigError(f"config key '{key}': {raw!r} is not an integer") from exc

    def get_bool(self, key: str, default=None) -> bool | None:
        raw = self._raw(key, default)
        if raw is None or isinstance(raw, bool):
            return raw
        low = str(raw).lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ConfigError(f"config key '{key}': {raw!r} is not a boolean")

    def get_float_list(self, key: str, default=None) -> tuple[float, ...] | None:
        raw = self._raw(key, default)
        if raw is None or isinstance(raw, tuple):
            return raw
        try:
            return tuple(float(tok) for tok in str(raw).split(",") if tok.strip())
        except ValueError as exc:
            raise ConfigError(f"config key '{key}': {raw!r} is not a number list") from exc

    def converter_params(self) -> ConverterParams:
        return ConverterParams(
            alpha_on=self.get_float("alpha_on", _REQUIRED),
            alpha_off=self.get_float("alpha_off", _REQUIRED),
            beta=self.get_float("beta", _REQUIRED),
            x_ref=self.get_float("x_ref", _REQUIRED),
        )


class _Required:
    pass


_REQUIRED = _Required()
REQUIRED = _REQUIRED
