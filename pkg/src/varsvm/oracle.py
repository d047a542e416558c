"""Brute-force reference solutions for low-dimensional instances.

These searches share no code path with the solvers beyond the dataset type
and the sigma definition; they exist to check the solvers.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .model import LABELS, Dataset, Hyperplane, class_scatter, sigma_floor


@dataclass(frozen=True, eq=False)
class OracleResult:
    hyperplane: Hyperplane      # unit normal
    objective: float            # best min-class margin on the grid
    angle_step: float           # radians (pi in 1-D: both orientations tried)
    offset_step: float          # data units (largest step used)


def _class_spreads(data, u, scaled, mode):
    """Spread of each class along the unit directions in the rows of ``u``."""
    if not scaled:
        return np.ones(len(u)), np.ones(len(u))
    floor = sigma_floor(data)
    out = []
    for label in LABELS:
        s = class_scatter(data, label, mode)
        var = np.einsum("ki,ij,kj->k", u, s, u)
        out.append(np.maximum(np.sqrt(np.maximum(var, 0.0)), floor))
    return out


def _margins_for_offsets(d_pos, d_neg, s_neg, s_pos, positions):
    """min-class margin when the boundary sits at ``positions`` along each direction.

    ``d_pos`` is the smallest positive projection and ``d_neg`` the largest
    negative one, per direction (arrays broadcast against ``positions``).
    """
    m_pos = (d_pos[:, None] - positions) / s_pos[:, None]
    m_neg = (positions - d_neg[:, None]) / s_neg[:, None]
    return np.minimum(m_pos, m_neg)


def oracle_1d(data: Dataset, scaled: bool = True, step: float = 1e-4,
              mode: str = "normalized") -> OracleResult:
    """Best 1-D boundary by sweeping midpoints and a uniform grid between the class hulls."""
    if data.p != 1:
        raise DataError(f"oracle_1d needs 1-D data, got p={data.p}")
    data.require_both_classes()
    x = data.points[:, 0]
    xs = np.unique(x)
    mids = 0.5 * (xs[1:] + xs[:-1])
    lo, hi = x.min(), x.max()
    grid = lo + step * np.arange(int(np.floor((hi - lo) / step)) + 1)
    positions = np.concatenate([mids, grid])
    best = None
    for sign in (1.0, -1.0):
        u = np.array([[sign]])
        proj = x * sign
        d_pos = np.array([proj[data.labels > 0].min()])
        d_neg = np.array([proj[data.labels < 0].max()])
        s_neg, s_pos = _class_spreads(data, u, scaled, mode)
        vals = _margins_for_offsets(d_pos, d_neg, s_neg, s_pos, (positions * sign)[None, :])[0]
        k = int(np.argmax(vals))
        if best is None or vals[k] > best[0]:
            best = (vals[k], sign, positions[k])
    value, sign, pos = best
    return OracleResult(Hyperplane([sign], -sign * pos), float(value), np.pi, step)


def oracle_2d(data: Dataset, scaled: bool = True, angle_steps: int = 360,
              offset_steps: int = 1000, mode: str = "normalized",
              chunk: int = 256) -> OracleResult:
    """Exhaustive search over unit normals ``(cos t, sin t)`` and boundary offsets.

    For each angle the boundary position sweeps the projected data range
    widened by 10% on each side. Ties go to the smallest angle index, then
    the smallest offset index.
    """
    if data.p != 2:
        raise DataError(f"oracle_2d needs 2-D data, got p={data.p}")
    data.require_both_classes()
    if angle_steps < 1 or offset_steps < 2:
        raise DataError("grid needs at least one angle and two offsets")
    theta = 2.0 * np.pi * np.arange(angle_steps) / angle_steps
    dirs = np.column_stack([np.cos(theta), np.sin(theta)])
    proj = data.points @ dirs.T                     # (N, angles)
    pos = data.labels > 0
    d_pos = proj[pos].min(axis=0)
    d_neg = proj[~pos].max(axis=0)
    lo, hi = proj.min(axis=0), proj.max(axis=0)
    span = hi - lo
    if np.any(span <= 0):
        raise DataError("degenerate data: zero projected range")
    start, stop = lo - 0.1 * span, hi + 0.1 * span
    frac = np.linspace(0.0, 1.0, offset_steps)
    s_neg, s_pos = _class_spreads(data, dirs, scaled, mode)

    best_val, best_k, best_j = -np.inf, 0, 0
    for a in range(0, angle_steps, chunk):
        b = min(a + chunk, angle_steps)
        positions = start[a:b, None] + (stop - start)[a:b, None] * frac[None, :]
        vals = _margins_for_offsets(d_pos[a:b], d_neg[a:b], s_neg[a:b], s_pos[a:b], positions)
        flat = int(np.argmax(vals))
        k, j = divmod(flat, offset_steps)
        if vals[k, j] > best_val:
            best_val, best_k, best_j = float(vals[k, j]), a + k, j
    t = start[best_k] + (stop[best_k] - start[best_k]) * frac[best_j]
    h = Hyperplane(dirs[best_k], -t)
    offset_step = float(np.max(stop - start) / (offset_steps - 1))
    return OracleResult(h, best_val, 2.0 * np.pi / angle_steps, offset_step)


def grid_error_bound(data: Dataset, result: OracleResult, scaled: bool = True,
                     mode: str = "normalized") -> float:
    """Upper bound on how far the grid maximum can sit below the true maximum.

    Lipschitz bound of the min-class margin in the boundary position
    (``1/sigma_min``) and in the angle, times half of each grid step.
    """
    radius = float(np.max(np.linalg.norm(data.points, axis=1)))
    if scaled:
        floor = sigma_floor(data)
        eig = [np.linalg.eigvalsh(class_scatter(data, label, mode)) for label in LABELS]
        s_min = max(min(np.sqrt(max(e[0], 0.0)) for e in eig), floor)
        lam_max = max(e[-1] for e in eig)
        d_sigma = lam_max / s_min
    else:
        s_min, d_sigma = 1.0, 0.0
    # |position| <= 1.2 radius, so |x.u - position| <= 2.2 radius
    l_angle = radius / s_min + 2.2 * radius * d_sigma / s_min**2
    l_offset = 1.0 / s_min
    return 0.5 * (l_angle * result.angle_step + l_offset * result.offset_step)


def min_class_margin(data: Dataset, h: Hyperplane, scaled: bool = True,
                     mode: str = "normalized") -> float:
    """The searched objective evaluated at any hyperplane (normalised to a unit normal)."""
    u = h.unit()
    s_neg, s_pos = _class_spreads(data, u.beta[None, :], scaled, mode)
    f = data.points @ u.beta + u.beta0
    pos = data.labels > 0
    return float(min(np.min(f[pos]) / s_pos[0], np.min(-f[~pos]) / s_neg[0]))


def hard_margin_active_set(data: Dataset) -> tuple[Hyperplane, float]:
    """Classical hard-margin SVM by enumerating candidate support sets.

    For every subset of at most ``p + 1`` points containing both labels, the
    equality-constrained problem ``min |beta|^2/2`` with ``y (x . beta + beta0) = 1``
    on the subset is solved from its linear KKT system; the feasible candidate
    with the smallest norm is optimal. Returns the hyperplane and the optimal
    value ``|beta|^2 / 2`` (equal to the dual optimum).
    """
    data.require_both_classes()
    x, y = data.points, data.labels.astype(float)
    n, p = x.shape
    best = None
    for size in range(2, min(p + 1, n) + 1):
        for subset in itertools.combinations(range(n), size):
            ys = y[list(subset)]
            if np.all(ys == ys[0]):
                continue
            xs = x[list(subset)]
            # unknowns: beta (p), beta0, lambdas (size)
            kkt = np.zeros((p + 1 + size, p + 1 + size))
            kkt[:p, :p] = np.eye(p)
            kkt[:p, p + 1:] = -(ys[:, None] * xs).T
            kkt[p, p + 1:] = -ys
            kkt[p + 1:, :p] = ys[:, None] * xs
            kkt[p + 1:, p] = ys
            rhs = np.concatenate([np.zeros(p + 1), np.ones(size)])
            sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
            if not np.allclose(kkt @ sol, rhs, atol=1e-9):
                continue
            beta, beta0 = sol[:p], sol[p]
            if np.min(y * (x @ beta + beta0)) < 1.0 - 1e-9:
                continue
            value = 0.5 * float(beta @ beta)
            if best is None or value < best[1]:
                best = (Hyperplane(beta, beta0), value)
    if best is None:
        raise DataError("data is not linearly separable")
    return best


def is_separable(data: Dataset) -> bool:
    """LP feasibility of ``y (x . beta + beta0) >= 1`` for all points."""
    from scipy.optimize import linprog

    y = data.labels.astype(float)
    a_ub = -np.column_stack([y[:, None] * data.points, y])
    res = linprog(np.zeros(data.p + 1), A_ub=a_ub, b_ub=-np.ones(data.n),
                  bounds=[(None, None)] * (data.p + 1), method="highs")
    return res.status == 0
