"""Sweep configuration files: a small ``key = value`` format.

Example::

    # system
    n_r = 128
    users = 20
    n_rf = 3
    constellation = 4-qam
    # experiment
    snr_db = 0, 2, 4, 6, 8
    detectors = mmse, iic(L=6), map-isd(L=6), kmap-iic(L=6, K=4)
    seed = 1
    min_bit_errors = 200
    max_frames = 100000

Blank lines and ``#`` comments are ignored.  ``n_r``, ``users``, ``n_rf``,
``constellation``, ``snr_db`` and ``detectors`` are required; ``seed`` (0),
``min_bit_errors`` (200) and ``max_frames`` (1000000) have defaults.
Iterative detectors default to ``L=6``; ``kmap-iic`` must name its ``K``.
Unknown keys are rejected.  All errors carry the offending line number.
"""

from __future__ import annotations

import re
from pathlib import Path

from .model import MbmConfig, constellation_by_name
from .simulate import DetectorSpec, SweepConfig

__all__ = ["ConfigError", "parse_config", "parse_detector_spec"]

_REQUIRED = ("n_r", "users", "n_rf", "constellation", "snr_db", "detectors")
_OPTIONAL = {"seed": "0", "min_bit_errors": "200", "max_frames": "1000000"}
_KNOWN = set(_REQUIRED) | set(_OPTIONAL)

_DEFAULT_ITERATIONS = 6

_SPEC_RE = re.compile(r"^\s*([a-z\-_]+)\s*(?:\(([^()]*)\))?\s*$", re.IGNORECASE)


class ConfigError(ValueError):
    """A sweep configuration problem, pointing at the file line."""

    def __init__(self, path, line: int | None, message: str):
        where = f"{path}:{line}: " if line else f"{path}: "
        super().__init__(where + message)
        self.path = path
        self.line = line


def parse_detector_spec(text: str, default_iterations: int | None = _DEFAULT_ITERATIONS) -> DetectorSpec:
    """Parse one entry like ``kmap-iic(L=6, K=4)`` or ``mmse``."""
    m = _SPEC_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse detector spec {text!r}")
    kind = m.group(1).lower().replace("_", "-")
    params: dict[str, int] = {}
    if m.group(2):
        for item in m.group(2).split(","):
            if not item.strip():
                continue
            key, _, value = item.partition("=")
            key = key.strip().upper()
            if key not in ("L", "K"):
                raise ValueError(f"unknown detector parameter {key!r} in {text!r}")
            try:
                params[key] = int(value.strip())
            except ValueError:
                raise ValueError(f"parameter {key} in {text!r} must be an integer") from None
    iterations = params.get("L")
    list_size = params.get("K")
    if kind in ("isd", "iic", "map-isd", "kmap-iic") and iterations is None:
        iterations = default_iterations
    if kind == "kmap-iic" and list_size is None:
        raise ValueError(f"kmap-iic requires an explicit K, got {text!r}")
    return DetectorSpec(kind=kind, iterations=iterations, list_size=list_size)


def _parse_lines(path: Path):
    values: dict[str, tuple[int, str]] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(path, lineno, f"expected 'key = value', got {raw.strip()!r}")
        key = key.strip().lower()
        if key not in _KNOWN:
            raise ConfigError(path, lineno, f"unknown key {key!r} (known: {sorted(_KNOWN)})")
        if key in values:
            raise ConfigError(path, lineno, f"duplicate key {key!r} (first on line {values[key][0]})")
        values[key] = (lineno, value.strip())
    return values


def parse_config(path) -> SweepConfig:
    """Read and validate a sweep configuration file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(path, None, "no such file")
    values = _parse_lines(path)
    for key in _REQUIRED:
        if key not in values:
            raise ConfigError(path, None, f"missing required key {key!r}")
    for key, default in _OPTIONAL.items():
        values.setdefault(key, (0, default))

    def integer(key: str) -> int:
        lineno, raw = values[key]
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(path, lineno, f"{key} must be an integer, got {raw!r}") from None

    lineno, raw = values["constellation"]
    try:
        constellation = constellation_by_name(raw)
    except ValueError as exc:
        raise ConfigError(path, lineno, str(exc)) from None

    lineno, raw = values["snr_db"]
    try:
        snrs = tuple(float(s) for s in raw.split(",") if s.strip())
    except ValueError:
        raise ConfigError(path, lineno, f"snr_db must be comma-separated numbers, got {raw!r}") from None

    det_line, raw = values["detectors"]
    specs = []
    # split on commas that are not inside parentheses
    for chunk in re.split(r",(?![^()]*\))", raw):
        if not chunk.strip():
            continue
        try:
            specs.append(parse_detector_spec(chunk))
        except ValueError as exc:
            raise ConfigError(path, det_line, str(exc)) from None

    try:
        mbm = MbmConfig(
            n_r=integer("n_r"),
            users=integer("users"),
            n_rf=integer("n_rf"),
            constellation=constellation,
        )
    except ValueError as exc:
        raise ConfigError(path, values["n_r"][0], str(exc)) from None

    for spec in specs:
        if spec.kind == "kmap-iic" and not 1 <= spec.list_size <= mbm.maps:
            raise ConfigError(
                path, det_line,
                f"detector {spec.ident}: K must satisfy 1 <= K <= M={mbm.maps}",
            )

    try:
        return SweepConfig(
            mbm=mbm,
            snr_db=snrs,
            detectors=tuple(specs),
            min_bit_errors=integer("min_bit_errors"),
            max_frames=integer("max_frames"),
            seed=integer("seed"),
        )
    except ValueError as exc:
        raise ConfigError(path, None, str(exc)) from None
