"""Variance-adjusted SVM: each class's margin scales with its spread along the normal.

The training problem is

    min  1/2 |beta|^2 + C sum_i max(0, 1 - y_i (x_i . beta + beta0) / sigma_{y_i}(beta))

where ``sigma_K(beta)`` is the spread of class K projected on ``beta/|beta|``.
Because sigma depends on beta the problem is nonconvex. :func:`solve_variance`
alternates between freezing sigma (a convex, sigma-weighted SVM dual) and
refreshing it, then polishes the normal direction against the true objective.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import least_squares, lsq_linear, minimize, minimize_scalar

from .classical import (
    SolverConfig,
    TrainedModel,
    fit_scaled,
    recover_slacks,
    solve_classical,
)
from .errors import ConvergenceError, DataError
from .model import (
    LABELS,
    Dataset,
    Hyperplane,
    class_scatter,
    class_sigma,
    class_sigmas,
    decision_values,
    point_sigmas,
    sigma_floor,
)

HINGE_SMOOTHING = 1e-6
ACTIVE_TOL = 1e-6


class SigmaFloorWarning(RuntimeWarning):
    """A class spread hit the sigma floor; sigma is not differentiable there."""


@dataclass(frozen=True, eq=False)
class VarianceIterate:
    hyperplane: Hyperplane
    sigma_neg: float
    sigma_pos: float
    inner_model: TrainedModel
    direction_change: float


@dataclass(frozen=True)
class StationarityResiduals:
    equality: float         # |sum alpha_i y_i / sigma_i|
    multiplier: float       # max |alpha_i + mu_i - C|
    beta: float             # norm of the beta-stationarity residual (exact sigma gradient)

    @property
    def max(self) -> float:
        return max(self.equality, self.multiplier, self.beta)


@dataclass(frozen=True, eq=False)
class RefineResult:
    hyperplane: Hyperplane
    start_objective: float
    objective: float
    history: list           # smoothed objective per accepted step, nonincreasing
    stalled: bool


def variance_slack(data: Dataset, h: Hyperplane, mode: str = "normalized") -> np.ndarray:
    """``max(0, 1 - y f / sigma_y)`` per point, with sigma measured along ``h.beta``."""
    h.check()
    sig = point_sigmas(data, h.beta, mode)
    return np.maximum(0.0, 1.0 - data.labels * decision_values(h, data.points) / sig)


def variance_primal_objective(data: Dataset, h: Hyperplane, cost: float,
                              mode: str = "normalized") -> float:
    return float(0.5 * h.beta @ h.beta + cost * np.sum(variance_slack(data, h, mode)))


def sigma_gradients(data: Dataset, beta, mode: str = "normalized", form: str = "exact"):
    """Gradient of each class's sigma in beta, as ``({label: grad}, at_floor)``.

    ``form="exact"`` differentiates ``sqrt(u' S u)`` with ``u = beta/|beta|``.
    ``form="paper"`` substitutes the diagonal (Hadamard) expression
    ``(x - xbar) o (|beta|^2 - beta o beta) / |beta|^3`` for the gradient of each
    normalised projection; it is kept only as a diagnostic and is wrong
    whenever beta has more than one nonzero coordinate.
    """
    beta = np.asarray(beta, dtype=float)
    nb2 = float(beta @ beta)
    nb = np.sqrt(nb2)
    floor = sigma_floor(data)
    grads, at_floor = {}, False
    for label in LABELS:
        sigma = class_sigma(data, label, beta, mode)
        if sigma < floor:
            grads[label] = np.zeros_like(beta)
            at_floor = True
            continue
        if form == "exact":
            s = class_scatter(data, label, mode)
            grads[label] = (s @ beta / sigma - sigma * beta) / nb2
        elif form == "paper":
            rows = data.members(label)
            centred = rows - rows.mean(axis=0)
            proj = centred @ (beta / nb)
            hadamard = (nb2 - beta * beta) / nb**3
            weight = 1.0 / rows.shape[0] if mode == "normalized" else 1.0
            grads[label] = weight / sigma * (proj @ (centred * hadamard))
        else:
            raise ValueError(f"unknown gradient form {form!r}")
    return grads, at_floor


def lagrangian(data: Dataset, h: Hyperplane, alphas, mode: str = "normalized",
               slacks=None, mus=None, cost: float = 0.0) -> float:
    """Value of the primal Lagrangian of the variance-adjusted problem."""
    alphas = _check_alphas(data, alphas)
    slacks = np.zeros(data.n) if slacks is None else np.asarray(slacks, dtype=float)
    mus = np.zeros(data.n) if mus is None else np.asarray(mus, dtype=float)
    sig = point_sigmas(data, h.beta, mode)
    margin = data.labels * decision_values(h, data.points) / sig
    return float(0.5 * h.beta @ h.beta + cost * slacks.sum()
                 - alphas @ (margin - (1.0 - slacks)) - mus @ slacks)


def lagrangian_gradient(data: Dataset, h: Hyperplane, alphas, mode: str = "exact",
                        sigma_mode: str = "normalized") -> np.ndarray:
    """Gradient in beta of :func:`lagrangian` at fixed multipliers and offset.

    Emits :class:`SigmaFloorWarning` when a class spread is at the floor.
    """
    h.check()
    alphas = _check_alphas(data, alphas)
    grads, at_floor = sigma_gradients(data, h.beta, sigma_mode, mode)
    if at_floor:
        warnings.warn("class sigma at floor; gradient is not defined there",
                      SigmaFloorWarning, stacklevel=2)
    y = data.labels
    sig = point_sigmas(data, h.beta, sigma_mode)
    f = decision_values(h, data.points)
    g = h.beta - (alphas * y / sig) @ data.points
    for label in LABELS:
        k = y == label
        g = g + np.sum(alphas[k] * y[k] * f[k] / sig[k] ** 2) * grads[label]
    return g


def finite_difference_gradient(data: Dataset, h: Hyperplane, alphas, sigma_mode="normalized",
                               step: float = 1e-6) -> np.ndarray:
    """Central differences of :func:`lagrangian` in beta."""
    out = np.empty(h.beta.shape)
    for k in range(h.beta.size):
        e = np.zeros_like(h.beta)
        e[k] = step
        hi = lagrangian(data, Hyperplane(h.beta + e, h.beta0), alphas, sigma_mode)
        lo = lagrangian(data, Hyperplane(h.beta - e, h.beta0), alphas, sigma_mode)
        out[k] = (hi - lo) / (2.0 * step)
    return out


def gradient_check(data: Dataset, h: Hyperplane, alphas, mode: str = "exact",
                   sigma_mode: str = "normalized", step: float = 1e-6) -> float:
    """Relative distance between the analytic gradient and central differences."""
    fd = finite_difference_gradient(data, h, alphas, sigma_mode, step)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SigmaFloorWarning)
        g = lagrangian_gradient(data, h, alphas, mode, sigma_mode)
    return float(np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-300))


def _check_alphas(data, alphas):
    alphas = np.asarray(alphas, dtype=float)
    if alphas.shape != (data.n,):
        raise DataError(f"expected {data.n} multipliers, got shape {alphas.shape}")
    return alphas


def _beta_stationarity(data, h, alphas, sigma_mode):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SigmaFloorWarning)
        return lagrangian_gradient(data, h, alphas, "exact", sigma_mode)


def stationarity_residuals(data: Dataset, model: TrainedModel,
                           sigma_override=None) -> StationarityResiduals:
    """Residuals of the stationarity conditions in beta0, the slacks and beta.

    With ``sigma_override=(s_neg, s_pos)`` the spreads are treated as constants,
    which for ``(1, 1)`` reproduces the classical conditions.
    """
    alphas = _check_alphas(data, model.alphas)
    mus = np.asarray(model.mus, dtype=float)
    h = model.hyperplane.check()
    y = data.labels
    if sigma_override is None:
        sig = point_sigmas(data, h.beta, model.sigma_mode)
        beta_res = _beta_stationarity(data, h, alphas, model.sigma_mode)
    else:
        sig = np.where(y > 0, sigma_override[1], sigma_override[0]).astype(float)
        beta_res = h.beta - (alphas * y / sig) @ data.points
    return StationarityResiduals(
        equality=abs(float(alphas @ (y / sig))),
        multiplier=float(np.max(np.abs(alphas + mus - model.cost))),
        beta=float(np.linalg.norm(beta_res)),
    )


def variance_kkt_residual(data: Dataset, model: TrainedModel) -> float:
    """Complementarity/feasibility residual with sigma taken along the model's normal,
    combined with the stationarity residuals (exact sigma gradient)."""
    h = model.hyperplane
    sig = point_sigmas(data, h.beta, model.sigma_mode)
    q = data.labels / sig
    excess = q * decision_values(h, data.points) - (1.0 - model.slacks)
    comp = max(float(np.max(np.abs(model.alphas * excess))),
               float(np.max(np.abs(model.mus * model.slacks))),
               float(np.max(np.maximum(0.0, -excess))),
               float(np.max(np.maximum(0.0, -np.concatenate([model.alphas, model.mus,
                                                              model.slacks])))))
    return max(comp, stationarity_residuals(data, model).max)


def solve_fixed_sigma(data: Dataset, sigmas, config: SolverConfig = SolverConfig()) -> TrainedModel:
    """Convex inner problem: the SVM with class spreads frozen at ``sigmas = (neg, pos)``.

    Raises :class:`ConvergenceError` if the pair-update budget runs out.
    """
    data.require_both_classes()
    s_neg, s_pos = (float(s) for s in sigmas)
    scales = np.where(data.labels > 0, s_pos, s_neg)
    sol, h, slacks, mus, residual = fit_scaled(data, scales, config)
    margin = data.labels * decision_values(h, data.points) / scales
    model = TrainedModel(
        hyperplane=h,
        alphas=sol.alphas,
        slacks=slacks,
        mus=mus,
        objective=float(0.5 * h.beta @ h.beta
                        + config.cost * np.sum(np.maximum(0.0, 1.0 - margin))),
        kkt_residual=residual,
        iterations=sol.iterations,
        variant="variance",
        cost=config.cost,
        sigma_mode=config.sigma_mode,
        sigmas=(s_neg, s_pos),
        converged=bool(sol.converged and residual <= config.kkt_tol),
    )
    if not model.converged:
        raise ConvergenceError(
            f"fixed-sigma solve stopped with KKT residual {residual:.3g}", model)
    return model


def direction_change(a, b) -> float:
    """``1 - |cos|`` of the angle between two normals."""
    c = float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))
    return max(0.0, 1.0 - abs(c))


def _alternate(data, start_beta, config):
    """Freeze sigma, solve the weighted SVM, refresh sigma; returns (iterates, converged)."""
    beta = np.asarray(start_beta, dtype=float)
    iterates = []
    for _ in range(int(config.max_outer)):
        s_neg, s_pos, _ = class_sigmas(data, beta, config.sigma_mode)
        inner = solve_fixed_sigma(data, (s_neg, s_pos), config)
        new_beta = inner.hyperplane.beta
        if np.linalg.norm(new_beta) == 0.0:
            break
        change = direction_change(beta, new_beta)
        iterates.append(VarianceIterate(inner.hyperplane, s_neg, s_pos, inner, change))
        n_neg, n_pos, _ = class_sigmas(data, new_beta, config.sigma_mode)
        sig_change = max(abs(n_neg - s_neg) / s_neg, abs(n_pos - s_pos) / s_pos)
        beta = new_beta
        if change <= config.outer_tol and sig_change <= config.sigma_rtol:
            return iterates, True
    return iterates, False


def _best_offset(t, y, s, cost, beta):
    """Exact minimiser over beta0 of ``C sum max(0, 1 - y (beta t + beta0) / s)``.

    The sum is convex and piecewise linear in beta0, so its minimum sits at a
    breakpoint; all breakpoints are scored at once with prefix sums.
    Returns ``(beta0, value)``.
    """
    c = np.where(y > 0, s - beta * t, -s - beta * t)
    order = np.argsort(c, kind="stable")
    c, pos, w = c[order], y[order] > 0, 1.0 / s[order]
    wp, wn = np.where(pos, w, 0.0), np.where(pos, 0.0, w)
    # positive terms are active above the candidate, negative ones below
    above_w = np.cumsum(wp[::-1])[::-1]
    above_wc = np.cumsum((wp * c)[::-1])[::-1]
    below_w, below_wc = np.cumsum(wn), np.cumsum(wn * c)
    vals = cost * ((above_wc - c * above_w) + (c * below_w - below_wc))
    k = int(np.argmin(vals))
    return float(c[k]), float(vals[k])


def _line_svm(t, y, s, cost):
    """The 1-D scaled SVM ``min beta^2/2 + C sum max(0, 1 - y (beta t + beta0) / s)``, beta >= 0."""
    pos = y > 0
    lo, hi = np.min(t[pos]), np.max(t[~pos])
    if lo > hi:
        # separable along this line: the hard-margin answer is optimal when
        # its two multipliers, beta s / (lo - hi), fit under C
        s_pos, s_neg = s[pos][0], s[~pos][0]
        beta = (s_pos + s_neg) / (lo - hi)
        if beta * max(s_pos, s_neg) / (lo - hi) <= cost:
            return float(beta), float(s_pos - beta * lo)

    def g(beta):
        return 0.5 * beta * beta + _best_offset(t, y, s, cost, beta)[1]

    upper = np.sqrt(2.0 * g(0.0))
    if upper == 0.0:
        return 0.0, 0.0
    res = minimize_scalar(g, bounds=(0.0, upper), method="bounded",
                          options={"xatol": 1e-10 * upper, "maxiter": 200})
    beta = float(res.x)
    return beta, _best_offset(t, y, s, cost, beta)[0]


def _fit_along(data, u, config):
    """Best hyperplane with normal direction ``u``: a 1-D sigma-weighted SVM."""
    s_neg, s_pos, _ = class_sigmas(data, u, config.sigma_mode)
    scales = np.where(data.labels > 0, s_pos, s_neg)
    beta, beta0 = _line_svm(data.points @ u, data.labels.astype(float), scales, config.cost)
    h = Hyperplane(beta * u, beta0)
    if h.norm == 0.0:
        return h, np.inf
    return h, variance_primal_objective(data, h, config.cost, config.sigma_mode)


def _polish(data, h, config, steps=(0.1, 1e-2, 1e-3)):
    """Nelder-Mead over the normal direction, each direction scored by its best (scale, offset)."""
    best_h, best_obj = h, variance_primal_objective(data, h, config.cost, config.sigma_mode)
    if data.p == 1:
        cand, obj = _fit_along(data, h.beta / h.norm, config)
        return (cand, obj) if obj < best_obj else (best_h, best_obj)
    evaluations = 0
    for step in steps:
        u0 = best_h.beta / best_h.norm
        basis = null_space(u0[None, :])

        def score(z):
            u = u0 + basis @ z
            return _fit_along(data, u / np.linalg.norm(u), config)[1]

        dim = basis.shape[1]
        simplex = np.vstack([np.zeros(dim), step * np.eye(dim)])
        res = minimize(score, np.zeros(dim), method="Nelder-Mead",
                       options={"initial_simplex": simplex, "xatol": 1e-9,
                                "fatol": 1e-12 * max(1.0, abs(best_obj)),
                                "maxfev": 200 * dim})
        evaluations += res.nfev
        u = u0 + basis @ res.x
        cand, obj = _fit_along(data, u / np.linalg.norm(u), config)
        if obj < best_obj:
            best_h, best_obj = cand, obj
    return best_h, best_obj


def recover_multipliers(data: Dataset, h: Hyperplane, cost: float, mode: str = "normalized",
                        active_tol: float = ACTIVE_TOL) -> np.ndarray:
    """Multipliers that best satisfy the beta and beta0 stationarity conditions at ``h``.

    Points strictly inside their margin get ``alpha = C``, points strictly
    outside get 0, and the ones within ``active_tol`` of the margin are fitted
    by bounded least squares.
    """
    y = data.labels
    sig = point_sigmas(data, h.beta, mode)
    f = decision_values(h, data.points)
    margin = y * f / sig
    grads, _ = sigma_gradients(data, h.beta, mode, "exact")
    gsig = np.array([grads[int(lab)] for lab in y])
    # stationarity: sum_i alpha_i c_i = beta,  sum_i alpha_i y_i / sigma_i = 0
    cols = np.vstack([
        (y / sig)[:, None] * data.points - (y * f / sig**2)[:, None] * gsig,
        ]).T
    a_mat = np.vstack([cols, (y / sig)[None, :]])
    rhs = np.concatenate([h.beta, [0.0]])
    alphas = np.where(margin < 1.0 - active_tol, cost, 0.0)
    free = np.abs(margin - 1.0) <= active_tol
    rhs = rhs - a_mat[:, ~free] @ alphas[~free]
    if np.any(free):
        sub = a_mat[:, free]
        if sub.shape[1] == 1:
            # lsq_linear needs at least one column; a single column is trivial
            v = float(sub[:, 0] @ rhs / max(sub[:, 0] @ sub[:, 0], 1e-300))
            alphas[free] = np.clip(v, 0.0, cost)
        else:
            res = lsq_linear(sub, rhs, bounds=(0.0, cost), method="bvls", tol=1e-14)
            alphas[free] = res.x
    return alphas


def _kkt_system(data, h, alphas, cost, mode, active_tol=1e-4):
    """Solve the KKT equations with the active set of ``(h, alphas)`` held fixed.

    Unknowns are beta, beta0 and the multipliers of the points on the margin;
    points inside keep ``alpha = C`` and points outside keep 0. Returns
    ``(hyperplane, alphas)`` or ``None`` when the solve fails or leaves the
    active set inconsistent.
    """
    y = data.labels
    sig = point_sigmas(data, h.beta, mode)
    margin = y * decision_values(h, data.points) / sig
    free = np.abs(margin - 1.0) <= active_tol
    bound = (margin < 1.0 - active_tol)
    if not np.any(free):
        return None
    p = data.p

    def unpack(z):
        a = np.where(bound, cost, 0.0)
        a[free] = z[p + 1:]
        return z[:p], z[p], a

    def residual(z):
        beta, beta0, a = unpack(z)
        nrm = np.linalg.norm(beta)
        if nrm == 0.0:
            return np.full(z.shape, 1e6)
        s = point_sigmas(data, beta, mode)
        f = data.points @ beta + beta0
        grads, _ = sigma_gradients(data, beta, mode, "exact")
        gsig = np.array([grads[int(lab)] for lab in y])
        c = (y / s)[:, None] * data.points - (y * f / s**2)[:, None] * gsig
        return np.concatenate([beta - a @ c, [a @ (y / s)], (y * f / s)[free] - 1.0])

    z0 = np.concatenate([h.beta, [h.beta0], alphas[free]])
    try:
        res = least_squares(residual, z0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                            max_nfev=200 * (z0.size + 1))
    except (ValueError, np.linalg.LinAlgError):
        return None
    beta, beta0, a = unpack(res.x)
    if not np.all(np.isfinite(res.x)) or np.linalg.norm(beta) == 0.0:
        return None
    cand = Hyperplane(beta, beta0)
    s = point_sigmas(data, beta, mode)
    m = y * decision_values(cand, data.points) / s
    tol = 1e-9 * max(1.0, cost)
    consistent = (np.all(a[free] >= -tol) and np.all(a[free] <= cost + tol)
                  and np.all(m[bound] <= 1.0 + 1e-9) and np.all(m[~free & ~bound] >= 1.0 - 1e-9))
    if not consistent:
        return None
    return cand, np.clip(a, 0.0, cost)


def _model_at(data, h, config, alphas=None, info=None, converged=True, iterations=0):
    s_neg, s_pos, floored = class_sigmas(data, h.beta, config.sigma_mode)
    if alphas is None:
        alphas = recover_multipliers(data, h, config.cost, config.sigma_mode)
    scales = np.where(data.labels > 0, s_pos, s_neg)
    slacks = recover_slacks(data, h, alphas, scales, config.cost)
    model = TrainedModel(
        hyperplane=h,
        alphas=alphas,
        slacks=slacks,
        mus=config.cost - alphas,
        objective=variance_primal_objective(data, h, config.cost, config.sigma_mode),
        kkt_residual=0.0,
        iterations=iterations,
        variant="variance",
        cost=config.cost,
        sigma_mode=config.sigma_mode,
        sigmas=(s_neg, s_pos),
        converged=converged,
        info=dict(info or {}, sigma_floored=floored),
    )
    object.__setattr__(model, "kkt_residual", variance_kkt_residual(data, model))
    return model


def solve_variance(data: Dataset, config: SolverConfig = SolverConfig(),
                   classical: TrainedModel | None = None) -> TrainedModel:
    """Train the variance-adjusted SVM.

    Starts from the classical solution (or ``classical`` if given), runs the
    alternating fixed-sigma scheme, then (``config.polish``) refines the normal
    direction against the true objective. ``config.restarts`` extra random
    starts are also tried; every distinct fixed point found is listed in
    ``model.info["fixed_points"]``. The lowest-objective candidate is returned.
    Outer non-convergence is reported through ``model.converged``.
    """
    data.require_both_classes()
    if classical is None:
        try:
            classical = solve_classical(data, config)
        except ConvergenceError as exc:
            classical = exc.model
    rng = np.random.default_rng(config.seed)
    starts = [classical.hyperplane.beta]
    starts += [rng.standard_normal(data.p) for _ in range(int(config.restarts))]

    best = (classical.hyperplane,
            variance_primal_objective(data, classical.hyperplane, config.cost, config.sigma_mode))
    first_objective = best[1]
    best_iterate = None
    fixed_points = []
    outer_converged = True
    iterations = 0
    for start in starts:
        iterates, ok = _alternate(data, start, config)
        outer_converged &= ok
        iterations += len(iterates)
        if not iterates:
            continue
        last = iterates[-1].hyperplane
        obj = variance_primal_objective(data, last, config.cost, config.sigma_mode)
        u = last.beta / last.norm
        if ok and not any(direction_change(u, fp["direction"]) < 1e-6 and
                          abs(fp["normalized_offset"] - last.normalized_offset()) < 1e-6
                          for fp in fixed_points):
            fixed_points.append({"direction": u, "normalized_offset": last.normalized_offset(),
                                 "objective": obj})
        for it in iterates:
            val = variance_primal_objective(data, it.hyperplane, config.cost, config.sigma_mode)
            if val < best[1]:
                best, best_iterate = (it.hyperplane, val), it

    alternating_objective = best[1]
    polished = False
    if config.polish:
        cand, val = _polish(data, best[0], config)
        if val < best[1]:
            best, polished = (cand, val), True

    info = {
        "outer_converged": bool(outer_converged),
        "polished": polished,
        "classical_objective": first_objective,
        "alternating_objective": alternating_objective,
        "fixed_points": fixed_points,
        "restarts": int(config.restarts),
    }
    alphas = None
    if not polished and best_iterate is not None:
        alphas = best_iterate.inner_model.alphas
        info["direction_change"] = best_iterate.direction_change
    if polished:
        alphas = recover_multipliers(data, best[0], config.cost, config.sigma_mode)
        exact = _kkt_system(data, best[0], alphas, config.cost, config.sigma_mode)
        if exact is not None:
            val = variance_primal_objective(data, exact[0], config.cost, config.sigma_mode)
            if val <= best[1] * (1.0 + 1e-9):
                best, alphas = (exact[0], val), exact[1]
                info["kkt_solved"] = True
    return _model_at(data, best[0], config, alphas=alphas, info=info,
                     converged=bool(outer_converged), iterations=iterations)


def _smooth_hinge(z, tau):
    """Quadratically smoothed ``max(0, z)`` and its derivative."""
    val = np.where(z <= 0, 0.0, np.where(z < tau, z * z / (2 * tau), z - tau / 2))
    der = np.where(z <= 0, 0.0, np.where(z < tau, z / tau, 1.0))
    return val, der


def smoothed_objective(data: Dataset, beta, beta0, cost, mode="normalized",
                       tau=HINGE_SMOOTHING):
    """Smoothed-hinge objective and its gradient in ``(beta, beta0)``."""
    beta = np.asarray(beta, dtype=float)
    y = data.labels
    h = Hyperplane(beta, beta0)
    sig = point_sigmas(data, beta, mode)
    f = decision_values(h, data.points)
    val, der = _smooth_hinge(1.0 - y * f / sig, tau)
    grads, _ = sigma_gradients(data, beta, mode, "exact")
    gsig = np.array([grads[int(lab)] for lab in y])
    w = cost * der * y
    # d/dbeta of (f / sigma) = x / sigma - f grad(sigma) / sigma^2
    dmargin = data.points / sig[:, None] - (f / sig**2)[:, None] * gsig
    g_beta = beta - w @ dmargin
    g_beta0 = -float(np.sum(w / sig))
    return float(0.5 * beta @ beta + cost * val.sum()), g_beta, g_beta0


def gradient_descent_refine(data: Dataset, start: Hyperplane, config: SolverConfig = SolverConfig(),
                            tau: float = HINGE_SMOOTHING, max_iter: int = 2000,
                            rtol: float = 1e-14) -> RefineResult:
    """Backtracking gradient descent on the smoothed objective from ``start``.

    The returned hyperplane never has a larger (unsmoothed) objective than
    ``start``. ``stalled`` is set when the line search cannot make progress.
    """
    start.check()
    cost, mode = config.cost, config.sigma_mode
    start_obj = variance_primal_objective(data, start, cost, mode)
    x = np.concatenate([start.beta, [start.beta0]])
    val, gb, g0 = smoothed_objective(data, x[:-1], x[-1], cost, mode, tau)
    history = [val]
    step, stalled = 1.0, False
    for _ in range(max_iter):
        g = np.concatenate([gb, [g0]])
        gg = float(g @ g)
        if gg == 0.0:
            break
        step *= 2.0
        while True:
            trial = x - step * g
            if np.linalg.norm(trial[:-1]) > 0:
                tval, tgb, tg0 = smoothed_objective(data, trial[:-1], trial[-1], cost, mode, tau)
                if tval <= val - 1e-4 * step * gg:
                    break
            step *= 0.5
            if step < 1e-30:
                stalled = True
                break
        if stalled:
            break
        decrease = val - tval
        x, val, gb, g0 = trial, tval, tgb, tg0
        history.append(val)
        if decrease <= rtol * max(1.0, abs(val)):
            break
    end = Hyperplane(x[:-1], x[-1])
    end_obj = variance_primal_objective(data, end, cost, mode)
    if end_obj > start_obj:
        end, end_obj = start, start_obj
    return RefineResult(end, start_obj, end_obj, history, stalled)
