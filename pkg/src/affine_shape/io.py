"""Landmark and configuration file formats.

Landmark JSON (canonical)::

    {"beta": 2, "N": 13, "K": 1, "group": "a",
     "specimens": [{"id": "s01", "landmarks": [[[x, y]], ...]}, ...]}

``landmarks`` is ``N x K x beta`` (plain ``N x K`` numbers are accepted for
``beta = 1``).  Landmark CSV holds planar data read as ``beta = 2, K = 1``:
one row per specimen, an ``id`` column followed by ``x1, y1, x2, y2, ...``.

Configuration JSON replaces ``landmarks`` by ``V`` (``q x K x beta``) and
lists degenerate specimens under ``"degenerate"``.
"""

from __future__ import annotations

import csv
import io
import json
from importlib import resources
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .algebra import MatrixF
from .errors import DegenerateConfigurationError, DimensionError
from .shape import ConfigurationCoordinates, configuration_coords

__all__ = [
    "DataFormatError",
    "ParseError",
    "LandmarkFile",
    "ConfigurationFile",
    "read_landmarks",
    "read_any",
    "configurations_from_landmarks",
    "load_schema",
]


class DataFormatError(ValueError):
    """Malformed or inconsistent input data."""


class ParseError(DataFormatError):
    """Input that cannot be parsed at all (bad JSON, missing header fields)."""


@dataclass
class LandmarkFile:
    beta: int
    N: int
    K: int
    specimens: list  # list of (id, MatrixF)
    group: str | None = None

    def __post_init__(self):
        ids = [sid for sid, _ in self.specimens]
        if len(set(ids)) != len(ids):
            raise DataFormatError("specimen ids must be unique")
        for sid, X in self.specimens:
            if X.shape != (self.N, self.K) or X.beta != self.beta:
                raise DimensionError(f"specimen {sid!r} is not {self.N} x {self.K} over beta={self.beta}")

    def to_json_obj(self) -> dict:
        return {"beta": self.beta, "N": self.N, "K": self.K, "group": self.group,
                "specimens": [{"id": sid, "landmarks": X.data.tolist()} for sid, X in self.specimens]}

    def to_csv(self) -> str:
        if (self.beta, self.K) != (2, 1):
            raise DataFormatError("CSV landmark output is defined for beta = 2, K = 1")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["id"] + [f"{c}{i + 1}" for i in range(self.N) for c in ("x", "y")])
        for sid, X in self.specimens:
            w.writerow([sid] + [repr(float(v)) for v in X.data[:, 0, :].ravel()])
        return buf.getvalue()


@dataclass
class ConfigurationFile:
    beta: int
    N: int
    K: int
    specimens: list  # list of (id, ConfigurationCoordinates)
    group: str | None = None
    degenerate: list = field(default_factory=list)

    def to_json_obj(self) -> dict:
        return {"beta": self.beta, "N": self.N, "K": self.K, "group": self.group,
                "specimens": [{"id": sid, "V": c.V.data.tolist()} for sid, c in self.specimens],
                "degenerate": list(self.degenerate)}


def _entries(raw, beta: int, shape: tuple, what: str) -> np.ndarray:
    try:
        a = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise DataFormatError(f"{what}: entries must be numbers") from exc
    if a.ndim == 2 and beta == 1:
        a = a[:, :, None]
    if a.shape != (*shape, beta):
        raise DimensionError(f"{what}: expected shape {(*shape, beta)}, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DataFormatError(f"{what}: non-finite entries")
    return a


def _header(obj: dict) -> tuple[int, int, int]:
    try:
        beta, N, K = int(obj["beta"]), int(obj["N"]), int(obj["K"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError("file must define integer beta, N and K") from exc
    if beta not in (1, 2, 4):
        raise DataFormatError("beta must be 1, 2 or 4 for numeric data")
    return beta, N, K


def _parse_landmark_obj(obj: dict) -> LandmarkFile:
    beta, N, K = _header(obj)
    specs = obj.get("specimens")
    if not isinstance(specs, list):
        raise DataFormatError("'specimens' must be a list")
    out = []
    for i, s in enumerate(specs):
        if not isinstance(s, dict) or "landmarks" not in s:
            raise DataFormatError(f"specimen {i} has no 'landmarks'")
        sid = str(s.get("id", i))
        out.append((sid, MatrixF(_entries(s["landmarks"], beta, (N, K), f"specimen {sid!r}"), beta)))
    return LandmarkFile(beta, N, K, out, obj.get("group"))


def _parse_config_obj(obj: dict) -> ConfigurationFile:
    beta, N, K = _header(obj)
    q = N - K - 1
    out = []
    for i, s in enumerate(obj.get("specimens", [])):
        if not isinstance(s, dict) or "V" not in s:
            raise DataFormatError(f"specimen {i} has no 'V'")
        sid = str(s.get("id", i))
        out.append((sid, ConfigurationCoordinates(
            MatrixF(_entries(s["V"], beta, (q, K), f"specimen {sid!r}"), beta))))
    return ConfigurationFile(beta, N, K, out, obj.get("group"), list(obj.get("degenerate", [])))


def _parse_csv(text: str, group: str | None) -> LandmarkFile:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        return LandmarkFile(2, 0, 1, [], group)
    try:
        float(rows[0][1])
    except (ValueError, IndexError):
        rows = rows[1:]
    specs = []
    width = None
    for r in rows:
        vals = r[1:]
        if width is None:
            width = len(vals)
        if len(vals) != width or width % 2:
            raise DimensionError("CSV rows must hold the same even number of coordinates")
        try:
            a = np.array([float(v) for v in vals]).reshape(width // 2, 1, 2)
        except ValueError as exc:
            raise DataFormatError(f"row {r[0]!r}: coordinates must be numbers") from exc
        specs.append((r[0].strip(), MatrixF(a, 2)))
    return LandmarkFile(2, width // 2 if width else 0, 1, specs, group)


def read_any(path: str | Path, group: str | None = None):
    """Read a landmark file (JSON or CSV) or a configuration file (JSON)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    if path.suffix.lower() == ".csv":
        return _parse_csv(text, group or path.stem)
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(obj, dict):
        raise ParseError(f"{path}: top level must be an object")
    specs = obj.get("specimens") or []
    if specs and isinstance(specs[0], dict) and "V" in specs[0]:
        res = _parse_config_obj(obj)
    else:
        res = _parse_landmark_obj(obj)
    if group is not None:
        res.group = group
    elif res.group is None:
        res.group = path.stem
    return res


def read_landmarks(path: str | Path, group: str | None = None) -> LandmarkFile:
    res = read_any(path, group)
    if not isinstance(res, LandmarkFile):
        raise DataFormatError(f"{path} is a configuration file, landmarks expected")
    return res


def configurations_from_landmarks(lf: LandmarkFile, Theta: MatrixF | None = None) -> ConfigurationFile:
    """Configuration coordinates of every specimen; degenerate ones are listed, not repaired."""
    if lf.specimens and lf.N < lf.K + 2:
        raise DimensionError(f"need N >= K + 2 landmarks, got N={lf.N}, K={lf.K}")
    out, bad = [], []
    for sid, X in lf.specimens:
        try:
            out.append((sid, configuration_coords(X, Theta)))
        except DegenerateConfigurationError:
            bad.append(sid)
    return ConfigurationFile(lf.beta, lf.N, lf.K, out, lf.group, bad)


def load_schema(name: str) -> dict:
    """JSON Schema shipped with the package: landmarks, configuration, fit, lrt, density or validate."""
    ref = resources.files("affine_shape").joinpath("schemas", f"{name}.schema.json")
    try:
        return json.loads(ref.read_text())
    except FileNotFoundError as exc:
        raise KeyError(f"no schema named {name!r}") from exc
