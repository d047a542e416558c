"""Training summaries, method comparison and the verification battery used by the CLI."""
from __future__ import annotations

import warnings

import numpy as np

from .classical import SolverConfig, TrainedModel, solve_classical
from .errors import ConvergenceError
from .model import Dataset, Hyperplane, classify_all, margin_report
from .oracle import (
    grid_error_bound,
    is_separable,
    min_class_margin,
    oracle_1d,
    oracle_2d,
)
from .variance import (
    SigmaFloorWarning,
    gradient_check,
    lagrangian_gradient,
    solve_variance,
    stationarity_residuals,
)

HARD_MARGIN_COST = 1e6
GRADIENT_TOL = 1e-5
RATIO_TOL = 1e-4
STATIONARITY_TOL = 1e-6


def train(data: Dataset, method: str, config: SolverConfig) -> TrainedModel:
    """Train ``method``; a budget overrun returns the flagged best iterate instead of raising."""
    try:
        if method == "classical":
            return solve_classical(data, config)
        return solve_variance(data, config)
    except ConvergenceError as exc:
        if exc.model is None:
            raise
        return exc.model


def hyperplane_summary(h: Hyperplane) -> dict:
    return {"beta": h.beta, "beta0": h.beta0, "normalized_offset": h.normalized_offset(),
            "boundary_position": h.boundary_position()}


def error_counts(h: Hyperplane, data: Dataset) -> dict:
    wrong = classify_all(h, data.points) != data.labels
    return {"neg": int(np.sum(wrong & (data.labels < 0))),
            "pos": int(np.sum(wrong & (data.labels > 0))),
            "total": int(np.sum(wrong)), "n": int(data.n)}


def train_summary(data: Dataset, model: TrainedModel, config: SolverConfig) -> dict:
    out = {
        "method": model.variant,
        "converged": bool(model.converged),
        "objective": model.objective,
        "iterations": int(model.iterations),
        "kkt_residual": model.kkt_residual,
        "hyperplane": hyperplane_summary(model.hyperplane),
        "margin_report": margin_report(data, model.hyperplane, config.sigma_mode).as_dict(),
    }
    if model.variant == "variance":
        res = stationarity_residuals(data, model)
        out["stationarity"] = {"equality": res.equality, "multiplier": res.multiplier,
                               "beta": res.beta}
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SigmaFloorWarning)
            grad = lagrangian_gradient(data, model.hyperplane, model.alphas,
                                       config.gradient_mode, config.sigma_mode)
        out["lagrangian_gradient"] = {"mode": config.gradient_mode,
                                      "norm": float(np.linalg.norm(grad))}
        out["outer_converged"] = bool(model.info.get("outer_converged", True))
        out["polished"] = bool(model.info.get("polished", False))
        if model.info.get("fixed_points") and config.restarts:
            out["fixed_points"] = model.info["fixed_points"]
    return out


def low_variance_distance(data: Dataset, h: Hyperplane, config: SolverConfig) -> dict:
    """Distance from the boundary to the mean of the class with the smaller spread along it."""
    rep = margin_report(data, h, config.sigma_mode)
    label = -1 if rep.sigma_neg <= rep.sigma_pos else 1
    mean = data.points[data.labels == label].mean(axis=0)
    u = h.unit()
    return {"label": label, "distance": float(label * (mean @ u.beta + u.beta0))}


def compare_report(data: Dataset, config: SolverConfig, holdout: Dataset | None = None) -> dict:
    """Train both methods on ``data`` and report geometry and error counts side by side."""
    data.require_both_classes()
    classical = train(data, "classical", config)
    variance = solve_variance(data, config, classical=classical)
    out = {}
    for name, model in (("classical", classical), ("variance", variance)):
        rep = margin_report(data, model.hyperplane, config.sigma_mode)
        entry = {
            "converged": bool(model.converged),
            "objective": model.objective,
            "hyperplane": hyperplane_summary(model.hyperplane),
            "margins": {"neg": rep.margin_neg, "pos": rep.margin_pos},
            "distances": {"neg": rep.distance_neg, "pos": rep.distance_pos},
            "sigmas": {"neg": rep.sigma_neg, "pos": rep.sigma_pos},
            "ratio_gap": rep.ratio_gap,
            "distance_ratio_gap": rep.distance_ratio_gap,
            "low_variance_mean_distance": low_variance_distance(data, model.hyperplane, config),
            "train_errors": error_counts(model.hyperplane, data),
        }
        if holdout is not None:
            entry["holdout_errors"] = error_counts(model.hyperplane, holdout)
        out[name] = entry
    c, v = classical.hyperplane.unit(), variance.hyperplane.unit()
    out["agreement"] = {
        "direction_cosine": float(c.beta @ v.beta),
        "offset_difference": abs(c.beta0 - v.beta0),
    }
    return out


def _check(name, status, value=None, threshold=None, detail=""):
    return {"name": name, "status": status, "value": value, "threshold": threshold,
            "detail": detail}


def gradient_points(data: Dataset, count: int, seed: int):
    """Random, non-degenerate evaluation points ``(hyperplane, alphas)`` for gradient checks."""
    rng = np.random.default_rng(seed)
    scale = float(np.max(np.abs(data.points))) or 1.0
    for _ in range(count):
        beta = rng.standard_normal(data.p)
        beta0 = rng.uniform(-1.0, 1.0) * scale * np.linalg.norm(beta)
        alphas = rng.uniform(0.0, 1.0, data.n)
        yield Hyperplane(beta, beta0), alphas


def verify_report(data: Dataset, config: SolverConfig, gradient_samples: int = 20) -> dict:
    """Run the verification battery; failures are report entries, never exceptions."""
    data.require_both_classes()
    checks = []
    classical = train(data, "classical", config)
    variance = solve_variance(data, config, classical=classical)

    checks.append(_check("classical_kkt", "pass" if classical.kkt_residual <= config.kkt_tol
                         else "fail", classical.kkt_residual, config.kkt_tol))
    res = stationarity_residuals(data, variance)
    scale = max(1.0, variance.hyperplane.norm)
    checks.append(_check("variance_stationarity",
                         "pass" if res.max <= STATIONARITY_TOL * scale else "fail",
                         res.max, STATIONARITY_TOL * scale,
                         "exact-gradient stationarity of the returned variance model"))

    errors = {"exact": [], "paper": []}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SigmaFloorWarning)
        for h, alphas in gradient_points(data, gradient_samples, config.seed):
            for mode in errors:
                errors[mode].append(gradient_check(data, h, alphas, mode, config.sigma_mode))
    worst = max(errors["exact"])
    checks.append(_check("gradient_exact", "pass" if worst <= GRADIENT_TOL else "fail",
                         worst, GRADIENT_TOL, f"{gradient_samples} random points"))
    checks.append(_check("gradient_paper", "info", max(errors["paper"]), None,
                         "diagonal (Hadamard) gradient form vs finite differences; "
                         "a mismatch is expected when p > 1"))

    separable = is_separable(data)
    if not separable:
        checks.append(_check("ratio_equality", "skipped", detail="skipped: data not separable"))
    else:
        hard = config.with_(cost=max(config.cost, HARD_MARGIN_COST))
        hard_c = train(data, "classical", hard)
        hard_v = solve_variance(data, hard, classical=hard_c)
        gap = margin_report(data, hard_v.hyperplane, config.sigma_mode).ratio_gap
        checks.append(_check("ratio_equality", "pass" if gap <= RATIO_TOL else "fail",
                             gap, RATIO_TOL, "hard-margin variance solution"))

    if data.p > 2:
        for name in ("oracle_classical", "oracle_variance"):
            checks.append(_check(name, "skipped", detail="skipped: p>2"))
    elif not separable:
        for name in ("oracle_classical", "oracle_variance"):
            checks.append(_check(name, "skipped", detail="skipped: data not separable"))
    else:
        for name, model, scaled in (("oracle_classical", hard_c, False),
                                    ("oracle_variance", hard_v, True)):
            if data.p == 1:
                # in 1D only the offset is gridded; half a step moves a margin by at most
                # that much, divided by the smaller spread when margins are scaled
                orc = oracle_1d(data, scaled, mode=config.sigma_mode)
                rep = margin_report(data, model.hyperplane, config.sigma_mode)
                spread = min(rep.sigma_neg, rep.sigma_pos) if scaled else 1.0
                bound = 0.5 * orc.offset_step / spread
            else:
                orc = oracle_2d(data, scaled, mode=config.sigma_mode)
                bound = grid_error_bound(data, orc, scaled, config.sigma_mode)
            value = min_class_margin(data, model.hyperplane, scaled, config.sigma_mode)
            checks.append(_check(name, "pass" if value >= orc.objective - bound else "fail",
                                 value, orc.objective - bound,
                                 f"oracle best {orc.objective:.17g}, grid bound {bound:.3g}"))

    failed = [c["name"] for c in checks if c["status"] == "fail"]
    return {"passed": not failed, "failed": failed, "checks": checks}
