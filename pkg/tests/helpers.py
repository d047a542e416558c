"""Dataset factories and independent reference computations shared by the tests.

The reference functions deliberately avoid the package's own numerics: sigma
goes through ``statistics.pstdev``, the dual through explicit double loops.
"""
from __future__ import annotations

import math
import statistics

import numpy as np

from varsvm import Dataset, mirror_pair
from varsvm.datagen import generate, isotropic_pair
from varsvm.oracle import is_separable

FIXTURE_1D = Dataset(np.array([[-3.0], [-1.0], [2.0], [6.0]]), np.array([-1, -1, 1, 1]))
HARD = 1e6

# acceptance verdict lines, echoed again in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def ref_sigma(points, labels, label, beta, normalized=True):
    """Spread of one class along ``beta`` from plain Python arithmetic."""
    norm = math.sqrt(sum(b * b for b in beta))
    proj = [sum(float(x) * b for x, b in zip(row, beta)) / norm
            for row, lab in zip(points, labels) if lab == label]
    if normalized:
        return statistics.pstdev(proj)
    mean = statistics.fmean(proj)
    return math.sqrt(sum((v - mean) ** 2 for v in proj))


def ref_dual(points, labels, alphas):
    """``sum a - 1/2 sum_ij a_i a_j y_i y_j <x_i, x_j>`` by explicit loops."""
    n = len(alphas)
    quad = 0.0
    for i in range(n):
        for j in range(n):
            dot = sum(float(a) * float(b) for a, b in zip(points[i], points[j]))
            quad += alphas[i] * alphas[j] * labels[i] * labels[j] * dot
    return float(sum(alphas) - 0.5 * quad)


def mirror_data(seed, n=100, separation=8.0):
    """Gaussian cloud left of ``x1 = 0`` and its reflection, labelled -1/+1."""
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((n, 2)) * [1.0, 1.5] + [-separation / 2, 0.5]
    return mirror_pair(pts, axis=0, offset=0.0)


def unequal_variance(seed, n=500, ratio=3.0, gap=4.0, p=2):
    """Wide class -1 at the origin, narrow class +1 ``gap`` units along x1."""
    mean_pos = np.zeros(p)
    mean_pos[0] = gap
    return generate(isotropic_pair(np.zeros(p), mean_pos, ratio, 1.0, n, n), seed)


def separable_instances(count, n_per_class, p=2, ratio=2.0, gap=6.0, first_seed=0):
    """The first ``count`` seeds whose unequal-variance draw is linearly separable."""
    out, seed = [], first_seed
    while len(out) < count:
        rng = np.random.default_rng(seed)
        direction = rng.standard_normal(p)
        direction /= np.linalg.norm(direction)
        stds = rng.uniform(0.5, 1.5, p)
        neg = rng.standard_normal((n_per_class, p)) * stds * ratio
        pos = rng.standard_normal((n_per_class, p)) * stds + gap * direction
        data = Dataset(np.vstack([neg, pos]),
                       np.r_[-np.ones(n_per_class, int), np.ones(n_per_class, int)])
        if is_separable(data):
            out.append((seed, data))
        seed += 1
    return out


def random_instance(seed, n=20, p=3):
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((n, p)) * rng.uniform(0.5, 2.0, p)
    labels = np.where(np.arange(n) < n // 2, -1, 1)
    pts[labels > 0] += rng.standard_normal(p) * 2.0
    return Dataset(pts, labels)
