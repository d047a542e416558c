"""Seeded two-class Gaussian data."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SpecError
from .model import LABELS, Dataset

GENERATOR_VERSION = "numpy-pcg64/eigh-sqrt/v1"


@dataclass(frozen=True, eq=False)
class GaussianSpec:
    mean: np.ndarray
    covariance: np.ndarray
    count: int
    label: int

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if mean.ndim != 1:
            raise SpecError("mean must be a vector")
        p = mean.shape[0]
        if cov.shape != (p, p):
            raise SpecError(f"covariance must be {p}x{p}, got {cov.shape}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise SpecError("mean and covariance must be finite")
        if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12):
            raise SpecError("covariance must be symmetric")
        eig = np.linalg.eigvalsh(cov)
        if eig[0] < -1e-12 * max(1.0, abs(eig[-1])):
            raise SpecError(f"covariance is not positive semidefinite (eigenvalue {eig[0]:.3g})")
        if int(self.count) != self.count or int(self.count) < 1:
            raise SpecError(f"count must be a positive integer, got {self.count!r}")
        if self.label not in LABELS:
            raise SpecError(f"label must be -1 or +1, got {self.label!r}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "count", int(self.count))
        object.__setattr__(self, "label", int(self.label))

    @classmethod
    def from_dict(cls, block: dict) -> "GaussianSpec":
        missing = [k for k in ("mean", "covariance", "count", "label") if k not in block]
        if missing:
            raise SpecError(f"gaussian block is missing field '{missing[0]}'")
        unknown = sorted(set(block) - {"mean", "covariance", "count", "label"})
        if unknown:
            raise SpecError(f"gaussian block has unknown field '{unknown[0]}'")
        try:
            return cls(block["mean"], block["covariance"], block["count"], block["label"])
        except (TypeError, ValueError) as exc:
            if isinstance(exc, SpecError):
                raise
            raise SpecError(f"invalid gaussian block: {exc}") from exc


def _factor(cov):
    """Symmetric square root via eigendecomposition; negative roundoff is clipped."""
    w, v = np.linalg.eigh(cov)
    return v * np.sqrt(np.clip(w, 0.0, None))


def generate(specs, seed: int = 0) -> Dataset:
    """Draw each block in order from one PCG64 stream seeded with ``seed``."""
    specs = list(specs)
    if len(specs) != 2:
        raise SpecError(f"need exactly two gaussian blocks, got {len(specs)}")
    if {s.label for s in specs} != set(LABELS):
        raise SpecError("the two blocks must carry labels -1 and +1")
    if specs[0].mean.shape != specs[1].mean.shape:
        raise SpecError("both blocks must have the same dimension")
    rng = np.random.Generator(np.random.PCG64(seed))
    points, labels = [], []
    for spec in specs:
        z = rng.standard_normal((spec.count, spec.mean.shape[0]))
        points.append(spec.mean + z @ _factor(spec.covariance).T)
        labels.append(np.full(spec.count, spec.label))
    return Dataset(np.vstack(points), np.concatenate(labels))


def isotropic_pair(mean_neg, mean_pos, std_neg, std_pos, count_neg, count_pos):
    """Two isotropic Gaussian blocks."""
    mean_neg, mean_pos = np.asarray(mean_neg, float), np.asarray(mean_pos, float)
    eye = np.eye(mean_neg.shape[0])
    return (GaussianSpec(mean_neg, std_neg**2 * eye, count_neg, -1),
            GaussianSpec(mean_pos, std_pos**2 * eye, count_pos, 1))


def mirror_pair(points, axis: int = 0, offset: float = 0.0) -> Dataset:
    """Label ``points`` as class -1 and their reflection across ``x[axis] = offset`` as +1."""
    points = np.asarray(points, dtype=float)
    mirrored = points.copy()
    mirrored[:, axis] = 2.0 * offset - mirrored[:, axis]
    n = points.shape[0]
    return Dataset(np.vstack([points, mirrored]), np.r_[-np.ones(n, int), np.ones(n, int)])
