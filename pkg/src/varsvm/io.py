"""Dataset CSV files, model JSON files and full-precision JSON output."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import CompatibilityError, DataError
from .model import Dataset, Hyperplane

FORMAT_VERSION = 1


def fmt(x: float) -> str:
    """17 significant digits: enough to round-trip any double."""
    return format(float(x), ".17g")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with every float written to 17 significant digits."""

    def enc(o, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(o, (bool, np.bool_)):
            return "true" if o else "false"
        if o is None:
            return "null"
        if isinstance(o, (int, np.integer)):
            return str(int(o))
        if isinstance(o, (float, np.floating)):
            if not math.isfinite(o):
                return "null"
            return fmt(o)
        if isinstance(o, str):
            return json.dumps(o)
        if isinstance(o, np.ndarray):
            return enc(o.tolist(), level)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{pad}{json.dumps(str(k))}: {enc(v, level + 1)}" for k, v in o.items()]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(o, (list, tuple)):
            if not o:
                return "[]"
            if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in o):
                return "[" + ", ".join(enc(v, level + 1) for v in o) + "]"
            return "[\n" + ",\n".join(pad + enc(v, level + 1) for v in o) + "\n" + end + "]"
        raise TypeError(f"cannot serialise {type(o).__name__}")

    return enc(obj, 0)


def dataset_to_csv(data: Dataset) -> str:
    header = ",".join([f"f{k + 1}" for k in range(data.p)] + ["label"])
    lines = [header]
    for row, label in zip(data.points, data.labels):
        lines.append(",".join([fmt(v) for v in row] + [str(int(label))]))
    return "\n".join(lines) + "\n"


def dataset_hash(data: Dataset) -> str:
    """SHA-256 of the canonical CSV serialisation."""
    return hashlib.sha256(dataset_to_csv(data).encode("utf-8")).hexdigest()


def write_dataset(data: Dataset, path) -> None:
    Path(path).write_bytes(dataset_to_csv(data).encode("utf-8"))


def parse_dataset(text: str, source: str = "<string>") -> Dataset:
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r]
    if not rows:
        raise DataError(f"{source}: empty file")
    header = [h.strip() for h in rows[0]]
    p = len(header) - 1
    if p < 1 or header[-1] != "label" or header[:-1] != [f"f{k + 1}" for k in range(p)]:
        raise DataError(f"{source}: header must be f1,...,fp,label")
    points, labels = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != p + 1:
            raise DataError(f"{source}:{lineno}: expected {p + 1} fields, got {len(row)}")
        try:
            points.append([float(v) for v in row[:-1]])
            label = float(row[-1])
        except ValueError as exc:
            raise DataError(f"{source}:{lineno}: {exc}") from exc
        if label not in (-1.0, 1.0):
            raise DataError(f"{source}:{lineno}: label must be -1 or 1, got {row[-1]!r}")
        labels.append(int(label))
    if len(points) < 2:
        raise DataError(f"{source}: need at least two data rows")
    return Dataset(np.array(points, dtype=float).reshape(len(points), p), np.array(labels))


def read_dataset(path) -> Dataset:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    return parse_dataset(text, str(path))


_MODEL_FIELDS = {"format_version", "variant", "beta", "beta0", "sigmas", "config", "provenance",
                 "metrics"}
_CONFIG_FIELDS = {"cost", "kkt_tol", "outer_tol", "max_outer", "sigma_mode", "gradient_mode"}
_PROVENANCE_FIELDS = {"dataset_hash", "seed", "timestamp"}


@dataclass(frozen=True, eq=False)
class ModelFile:
    variant: str
    beta: np.ndarray
    beta0: float
    sigmas: tuple | None
    config: dict
    provenance: dict
    metrics: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    @property
    def hyperplane(self) -> Hyperplane:
        return Hyperplane(self.beta, self.beta0)

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "variant": self.variant,
            "beta": [float(b) for b in self.beta],
            "beta0": float(self.beta0),
            "sigmas": None if self.sigmas is None else [float(s) for s in self.sigmas],
            "config": self.config,
            "provenance": self.provenance,
            "metrics": self.metrics,
        }

    @classmethod
    def from_model(cls, model, config, data_hash, seed, metrics=None) -> "ModelFile":
        return cls(
            variant=model.variant,
            beta=np.array(model.hyperplane.beta, dtype=float),
            beta0=model.hyperplane.beta0,
            sigmas=None if model.sigmas is None else tuple(float(s) for s in model.sigmas),
            config={"cost": config.cost, "kkt_tol": config.kkt_tol,
                    "outer_tol": config.outer_tol, "max_outer": int(config.max_outer),
                    "sigma_mode": config.sigma_mode, "gradient_mode": config.gradient_mode},
            provenance={"dataset_hash": data_hash, "seed": int(seed),
                        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds")},
            metrics=metrics or {},
        )

    @classmethod
    def from_dict(cls, d: dict) -> "ModelFile":
        if not isinstance(d, dict):
            raise CompatibilityError("model file must hold a JSON object")
        _reject_unknown(d, _MODEL_FIELDS, "model")
        if d.get("format_version") != FORMAT_VERSION:
            raise CompatibilityError(
                f"unsupported model format_version {d.get('format_version')!r}")
        for key in ("variant", "beta", "beta0", "config", "provenance"):
            if key not in d:
                raise CompatibilityError(f"model file lacks field '{key}'")
        _reject_unknown(d["config"], _CONFIG_FIELDS, "config")
        _reject_unknown(d["provenance"], _PROVENANCE_FIELDS, "provenance")
        if d["variant"] not in ("classical", "variance"):
            raise CompatibilityError(f"unknown variant {d['variant']!r}")
        sigmas = d.get("sigmas")
        return cls(
            variant=d["variant"],
            beta=np.array([float(b) for b in d["beta"]], dtype=float),
            beta0=float(d["beta0"]),
            sigmas=None if sigmas is None else tuple(float(s) for s in sigmas),
            config=dict(d["config"]),
            provenance=dict(d["provenance"]),
            metrics=dict(d.get("metrics") or {}),
        )


def _reject_unknown(d, allowed, what):
    if not isinstance(d, dict):
        raise CompatibilityError(f"{what} must be a JSON object")
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise CompatibilityError(f"unknown {what} field '{unknown[0]}'")


def save_model(mf: ModelFile, path) -> None:
    Path(path).write_text(dumps(mf.to_dict()) + "\n", encoding="utf-8")


def load_model(path) -> ModelFile:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CompatibilityError(f"cannot load model {path}: {exc}") from exc
    return ModelFile.from_dict(d)


def read_points(path):
    """Feature matrix from a CSV with header ``f1,...,fp`` and an optional ``label`` column."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    labelled = header[-1:] == ["label"]
    p = len(header) - labelled
    if p < 1 or header[:p] != [f"f{k + 1}" for k in range(p)]:
        raise DataError(f"{path}: header must be f1,...,fp[,label]")
    try:
        pts = np.array([[float(v) for v in r[:p]] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc
    if any(len(r) != len(header) for r in rows[1:]):
        raise DataError(f"{path}: ragged rows")
    if not np.all(np.isfinite(pts)):
        raise DataError(f"{path}: all coordinates must be finite")
    return pts.reshape(len(rows) - 1, p)
