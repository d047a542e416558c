"""Core types: datasets, hyperplanes, directional class statistics and margins."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, InvalidHyperplaneError, MissingClassError

LABELS = (-1, 1)
SIGMA_MODES = ("normalized", "paper-literal")
SIGMA_FLOOR_FACTOR = 1e-8


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """N labelled points in p dimensions, labels in {-1, +1}."""

    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        points = np.array(self.points, dtype=float)
        if points.ndim == 1:
            points = points[:, None]
        if points.ndim != 2:
            raise DataError(f"points must be a 2-D array, got shape {points.shape}")
        labels = np.asarray(self.labels)
        if labels.ndim != 1 or labels.shape[0] != points.shape[0]:
            raise DataError(
                f"need one label per point: {labels.shape} labels for {points.shape[0]} points")
        if points.shape[0] < 2:
            raise DataError("a dataset needs at least two points")
        if points.shape[1] < 1:
            raise DataError("points need at least one coordinate")
        if not np.all(np.isfinite(points)):
            raise DataError("all coordinates must be finite")
        if not np.all(np.isin(labels, LABELS)):
            bad = labels[~np.isin(labels, LABELS)][0]
            raise DataError(f"labels must be -1 or +1, found {bad!r}")
        labels = np.array(labels, dtype=np.int64)
        labels.setflags(write=False)
        points.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def p(self) -> int:
        return self.points.shape[1]

    def members(self, label: int) -> np.ndarray:
        """Rows belonging to class ``label`` (raises if the class is empty)."""
        if label not in LABELS:
            raise DataError(f"unknown class label {label!r}")
        rows = self.points[self.labels == label]
        if rows.shape[0] == 0:
            raise MissingClassError(f"class {label:+d} has no members")
        return rows

    def require_both_classes(self):
        for label in LABELS:
            if not np.any(self.labels == label):
                raise MissingClassError(f"class {label:+d} has no members; training needs both")

    def with_labels(self, labels) -> "Dataset":
        return Dataset(self.points, labels)

    def with_points(self, points) -> "Dataset":
        return Dataset(points, self.labels)


@dataclass(frozen=True, eq=False)
class Hyperplane:
    """The set ``{x : x . beta + beta0 = 0}``."""

    beta: np.ndarray
    beta0: float

    def __post_init__(self):
        object.__setattr__(self, "beta", _frozen(np.atleast_1d(self.beta)))
        object.__setattr__(self, "beta0", float(self.beta0))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.beta))

    def check(self) -> "Hyperplane":
        n = self.norm
        if not np.isfinite(n) or n == 0.0 or not np.isfinite(self.beta0):
            raise InvalidHyperplaneError("hyperplane normal must be finite and nonzero")
        return self

    def scaled(self, c: float) -> "Hyperplane":
        return Hyperplane(self.beta * c, self.beta0 * c)

    def unit(self) -> "Hyperplane":
        """Same hyperplane with ``||beta|| = 1``."""
        return self.scaled(1.0 / self.check().norm)

    def normalized_offset(self) -> float:
        return self.beta0 / self.check().norm

    def boundary_position(self) -> float:
        """Signed distance from the origin to the hyperplane along the unit normal."""
        return -self.normalized_offset()


@dataclass(frozen=True)
class ClassStats:
    label: int
    count: int
    mean: np.ndarray
    sigma: float


@dataclass(frozen=True)
class MarginReport:
    """Per-class margins of a hyperplane.

    ``margin_*`` are sigma-normalised functional margins
    ``min y (x . beta + beta0) / sigma``; they depend on the scale of beta.
    ``distance_*`` are the Euclidean signed distances of each class's closest
    point, so ``distance_ratio_gap`` is the scale-free form of the balance.
    """

    margin_neg: float
    margin_pos: float
    sigma_neg: float
    sigma_pos: float
    ratio_gap: float
    distance_neg: float
    distance_pos: float
    distance_ratio_gap: float
    sigma_floored: bool = False

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def decision_value(h: Hyperplane, x) -> float:
    h.check()
    return float(np.dot(np.asarray(x, dtype=float), h.beta) + h.beta0)


def decision_values(h: Hyperplane, points) -> np.ndarray:
    h.check()
    return np.asarray(points, dtype=float) @ h.beta + h.beta0


def classify(h: Hyperplane, x) -> int:
    """Sign of the decision value; a point on the hyperplane is labelled +1."""
    return 1 if decision_value(h, x) >= 0.0 else -1


def classify_all(h: Hyperplane, points) -> np.ndarray:
    return np.where(decision_values(h, points) >= 0.0, 1, -1)


def _check_mode(mode):
    if mode not in SIGMA_MODES:
        raise ValueError(f"sigma mode must be one of {SIGMA_MODES}, got {mode!r}")


def _direction(beta):
    beta = np.asarray(beta, dtype=float)
    n = np.linalg.norm(beta)
    if not np.isfinite(n) or n == 0.0:
        raise InvalidHyperplaneError("direction beta must be finite and nonzero")
    return beta / n


def class_scatter(data: Dataset, label: int, mode: str = "normalized") -> np.ndarray:
    """Scatter matrix ``S`` with ``class_sigma(beta)**2 == u' S u`` for ``u = beta/|beta|``."""
    _check_mode(mode)
    rows = data.members(label)
    centred = rows - rows.mean(axis=0)
    s = centred.T @ centred
    return s / rows.shape[0] if mode == "normalized" else s


def class_sigma(data: Dataset, label: int, beta, mode: str = "normalized") -> float:
    """Spread of class ``label`` along the unit normal ``beta/|beta|``.

    Projections are centred on the class mean. ``normalized`` is the population
    standard deviation; ``paper-literal`` omits the ``1/count`` factor.
    No floor is applied here; see :func:`class_sigmas`.
    """
    _check_mode(mode)
    u = _direction(beta)
    rows = data.members(label)
    proj = (rows - rows.mean(axis=0)) @ u
    ss = float(proj @ proj)
    if mode == "normalized":
        ss /= rows.shape[0]
    return float(np.sqrt(ss))


def sigma_floor(data: Dataset) -> float:
    """Smallest sigma used in any division: 1e-8 times the widest coordinate range."""
    spread = float(np.max(np.ptp(data.points, axis=0)))
    return SIGMA_FLOOR_FACTOR * (spread if spread > 0 else 1.0)


def class_sigmas(data: Dataset, beta, mode: str = "normalized"):
    """``(sigma_neg, sigma_pos, floored)`` with the sigma floor applied."""
    floor = sigma_floor(data)
    raw = [class_sigma(data, label, beta, mode) for label in LABELS]
    floored = any(s < floor for s in raw)
    return max(raw[0], floor), max(raw[1], floor), floored


def point_sigmas(data: Dataset, beta, mode: str = "normalized") -> np.ndarray:
    """Floored sigma of each point's own class."""
    s_neg, s_pos, _ = class_sigmas(data, beta, mode)
    return np.where(data.labels > 0, s_pos, s_neg)


def class_stats(data: Dataset, label: int, beta, mode: str = "normalized") -> ClassStats:
    rows = data.members(label)
    return ClassStats(label=label, count=rows.shape[0], mean=_frozen(rows.mean(axis=0)),
                      sigma=class_sigma(data, label, beta, mode))


def class_margin(data: Dataset, label: int, h: Hyperplane, mode: str = "normalized") -> float:
    """Smallest sigma-normalised functional margin ``y (x . beta + beta0) / sigma`` in a class."""
    h.check()
    rows = data.members(label)
    sigma = max(class_sigma(data, label, h.beta, mode), sigma_floor(data))
    return float(np.min(label * (rows @ h.beta + h.beta0)) / sigma)


def margin_report(data: Dataset, h: Hyperplane, mode: str = "normalized") -> MarginReport:
    h.check()
    data.require_both_classes()
    s_neg, s_pos, floored = class_sigmas(data, h.beta, mode)
    m_neg = class_margin(data, -1, h, mode)
    m_pos = class_margin(data, 1, h, mode)
    d_neg, d_pos = m_neg * s_neg / h.norm, m_pos * s_pos / h.norm
    return MarginReport(
        margin_neg=m_neg,
        margin_pos=m_pos,
        sigma_neg=s_neg,
        sigma_pos=s_pos,
        ratio_gap=abs(m_neg - m_pos),
        distance_neg=d_neg,
        distance_pos=d_pos,
        distance_ratio_gap=abs(d_neg / s_neg - d_pos / s_pos),
        sigma_floored=floored,
    )
