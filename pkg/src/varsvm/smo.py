"""Pairwise coordinate ascent for the (sigma-weighted) linear SVM dual.

The dual solved here is

    max  sum_i alpha_i - 1/2 sum_ij alpha_i alpha_j q_i q_j <x_i, x_j>
    s.t. 0 <= alpha_i <= C,  sum_i alpha_i q_i = 0,    q_i = y_i / s_i

with a positive per-point scale ``s_i`` (``s = 1`` is the classical SVM).
Substituting ``a_i = alpha_i / s_i`` gives a standard dual with labels ``y``,
linear term ``-s_i`` and per-point box ``C / s_i``, which is what the loop
below works on. Working pairs are chosen by maximal violation with
second-order selection of the partner.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TAU = 1e-12
_REFRESH_EVERY = 500


@dataclass
class DualSolution:
    alphas: np.ndarray      # alpha_i, 0 <= alpha_i <= C
    beta: np.ndarray
    beta0: float
    gap: float              # final maximal violating-pair gap
    iterations: int
    converged: bool


def _offset(y, grad, a, upper):
    yg = y * grad
    at_upper = a >= upper
    at_lower = a <= 0.0
    free = ~(at_upper | at_lower)
    if np.any(free):
        return -float(np.mean(yg[free]))
    ub_mask = (at_upper & (y < 0)) | (at_lower & (y > 0))
    lb_mask = (at_upper & (y > 0)) | (at_lower & (y < 0))
    ub = np.min(yg[ub_mask]) if np.any(ub_mask) else np.inf
    lb = np.max(yg[lb_mask]) if np.any(lb_mask) else -np.inf
    if not np.isfinite(ub):
        ub = lb
    if not np.isfinite(lb):
        lb = ub
    return -float(0.5 * (ub + lb))


def solve_dual(points, labels, scales, cost, eps, max_iter, start=None, callback=None):
    """Run the pair updates until the maximal violation drops to ``eps``.

    ``start`` is an optional feasible alpha vector to continue from.
    ``callback(iteration, alphas)`` is invoked after every pair update.
    """
    x = np.ascontiguousarray(points, dtype=float)
    y = np.asarray(labels, dtype=float)
    s = np.asarray(scales, dtype=float)
    upper = cost / s
    a = np.zeros(len(y)) if start is None else np.asarray(start, dtype=float) / s
    qd = np.einsum("ij,ij->i", x, x)

    def refresh():
        b = (a * y) @ x
        return b, y * (x @ b) - s

    beta, grad = refresh()
    it = 0
    gap = np.inf
    while True:
        v = -y * grad
        up = np.where(y > 0, a < upper, a > 0)
        low = np.where(y > 0, a > 0, a < upper)
        if not (np.any(up) and np.any(low)):
            gap = 0.0
            break
        vu = np.where(up, v, -np.inf)
        i = int(np.argmax(vu))
        m = vu[i]
        gap = m - np.min(v[low])
        if gap <= eps:
            break
        if it >= max_iter:
            break

        kcol = x @ x[i]
        cand = low & (v < m)
        diff = m - v
        quad = qd[i] + qd - 2.0 * kcol
        quad = np.where(quad > 0, quad, TAU)
        score = np.where(cand, -(diff * diff) / quad, np.inf)
        j = int(np.argmin(score))

        ci, cj = upper[i], upper[j]
        ai_old, aj_old = a[i], a[j]
        if y[i] != y[j]:
            q = qd[i] + qd[j] - 2.0 * kcol[j]
            q = q if q > 0 else TAU
            delta = (-grad[i] - grad[j]) / q
            d = ai_old - aj_old
            ai, aj = ai_old + delta, aj_old + delta
            if d > 0:
                if aj < 0:
                    aj, ai = 0.0, d
            elif ai < 0:
                ai, aj = 0.0, -d
            if d > ci - cj:
                if ai > ci:
                    ai, aj = ci, ci - d
            elif aj > cj:
                aj, ai = cj, cj + d
        else:
            q = qd[i] + qd[j] - 2.0 * kcol[j]
            q = q if q > 0 else TAU
            delta = (grad[i] - grad[j]) / q
            total = ai_old + aj_old
            ai, aj = ai_old - delta, aj_old + delta
            if total > ci:
                if ai > ci:
                    ai, aj = ci, total - ci
            elif aj < 0:
                aj, ai = 0.0, total
            if total > cj:
                if aj > cj:
                    aj, ai = cj, total - cj
            elif ai < 0:
                ai, aj = 0.0, total
        a[i], a[j] = ai, aj
        it += 1
        if it % _REFRESH_EVERY == 0:
            beta, grad = refresh()
        else:
            step = y[i] * (ai - ai_old) * x[i] + y[j] * (aj - aj_old) * x[j]
            beta = beta + step
            grad = grad + y * (x @ step)
        if callback is not None:
            callback(it, np.where(a >= upper, cost, a * s))

    beta, grad = refresh()
    return DualSolution(
        alphas=np.where(a >= upper, cost, a * s),
        beta=beta,
        beta0=_offset(y, grad, a, upper),
        gap=float(gap),
        iterations=it,
        converged=bool(gap <= eps),
    )
