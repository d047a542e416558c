"""Soft-margin linear SVM trained through its Wolfe dual."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConvergenceError, DataError, SpecError
from .model import SIGMA_MODES, Dataset, Hyperplane, decision_values
from .smo import solve_dual

GRADIENT_MODES = ("exact", "paper")
VARIANTS = ("classical", "variance")
_MIN_EPS = 1e-15


@dataclass(frozen=True)
class SolverConfig:
    cost: float = 1.0
    kkt_tol: float = 1e-6
    max_passes: int = 10_000        # pair updates allowed per training point
    sigma_mode: str = "normalized"
    outer_tol: float = 1e-8
    sigma_rtol: float = 1e-8
    max_outer: int = 100
    gradient_mode: str = "exact"
    polish: bool = True
    restarts: int = 0
    seed: int = 0

    def __post_init__(self):
        if not (self.cost > 0 and np.isfinite(self.cost)):
            raise SpecError(f"cost must be positive, got {self.cost!r}")
        if not self.kkt_tol > 0:
            raise SpecError(f"kkt_tol must be positive, got {self.kkt_tol!r}")
        if not (self.outer_tol > 0 and self.sigma_rtol > 0):
            raise SpecError("outer tolerances must be positive")
        if int(self.max_passes) < 1 or int(self.max_outer) < 1:
            raise SpecError("max_passes and max_outer must be at least 1")
        if self.sigma_mode not in SIGMA_MODES:
            raise SpecError(f"sigma_mode must be one of {SIGMA_MODES}, got {self.sigma_mode!r}")
        if self.gradient_mode not in GRADIENT_MODES:
            raise SpecError(
                f"gradient_mode must be one of {GRADIENT_MODES}, got {self.gradient_mode!r}")
        if int(self.restarts) < 0:
            raise SpecError("restarts must be nonnegative")

    def with_(self, **changes) -> "SolverConfig":
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class TrainedModel:
    hyperplane: Hyperplane
    alphas: np.ndarray
    slacks: np.ndarray
    mus: np.ndarray
    objective: float
    kkt_residual: float
    iterations: int
    variant: str
    cost: float
    sigma_mode: str = "normalized"
    sigmas: tuple | None = None     # (sigma_neg, sigma_pos) for the variance variant
    converged: bool = True
    info: dict = field(default_factory=dict)

    def point_scales(self, labels) -> np.ndarray:
        if self.sigmas is None:
            return np.ones(len(labels))
        return np.where(np.asarray(labels) > 0, self.sigmas[1], self.sigmas[0])


def classical_slack(data: Dataset, h: Hyperplane) -> np.ndarray:
    """Hinge slack ``max(0, 1 - y (x . beta + beta0))`` of every point."""
    return np.maximum(0.0, 1.0 - data.labels * decision_values(h, data.points))


def primal_objective(data: Dataset, h: Hyperplane, cost: float) -> float:
    h.check()
    return float(0.5 * h.beta @ h.beta + cost * np.sum(classical_slack(data, h)))


def dual_objective(data: Dataset, alphas) -> float:
    alphas = np.asarray(alphas, dtype=float)
    if alphas.shape != (data.n,):
        raise DataError(f"expected {data.n} multipliers, got shape {alphas.shape}")
    w = (alphas * data.labels) @ data.points
    return float(np.sum(alphas) - 0.5 * w @ w)


def constraint_residual(data, beta, beta0, alphas, slacks, mus, scales, cost) -> float:
    """Largest violation of the KKT system for constraints ``y f / s >= 1 - slack``.

    Covers complementarity, primal feasibility, sign constraints and the
    stationarity conditions in beta0, the slacks and (for constant ``s``) beta.
    """
    y = data.labels
    alphas, slacks, mus = (np.asarray(v, dtype=float) for v in (alphas, slacks, mus))
    q = y / scales
    margin = q * (data.points @ beta + beta0)
    excess = margin - (1.0 - slacks)
    terms = [
        np.abs(alphas * excess),
        np.abs(mus * slacks),
        np.maximum(0.0, -excess),
        np.maximum(0.0, -alphas),
        np.maximum(0.0, -mus),
        np.maximum(0.0, -slacks),
        np.abs(alphas + mus - cost),
        np.abs(beta - (alphas * q) @ data.points),
        [abs(float(alphas @ q))],
    ]
    return float(max(np.max(t) for t in terms))


def recover_slacks(data, h, alphas, scales, cost) -> np.ndarray:
    """Primal slacks consistent with complementarity: zero unless alpha sits at C."""
    margin = data.labels * decision_values(h, data.points) / scales
    return np.where(alphas >= cost * (1.0 - 1e-12), np.maximum(0.0, 1.0 - margin), 0.0)


def kkt_residual(data: Dataset, model: TrainedModel, cost: float) -> float:
    """Largest violation of complementarity, feasibility and stationarity for ``model``."""
    h = model.hyperplane
    for name in ("alphas", "slacks", "mus"):
        if np.shape(getattr(model, name)) != (data.n,):
            raise DataError(f"model.{name} must have one entry per point")
    return constraint_residual(data, h.beta, h.beta0, model.alphas, model.slacks, model.mus,
                               np.ones(data.n), cost)


def fit_scaled(data: Dataset, scales, config: SolverConfig, callback=None):
    """Solve the dual with constant per-point scales, tightening until the KKT residual holds.

    Returns ``(solution, hyperplane, slacks, mus, residual)``.
    """
    scales = np.asarray(scales, dtype=float)
    budget = int(config.max_passes) * data.n
    eps = config.kkt_tol
    alphas = None
    used = 0
    while True:
        sol = solve_dual(data.points, data.labels, scales, config.cost, eps,
                         max(budget - used, 0), start=alphas, callback=callback)
        used += sol.iterations
        alphas = sol.alphas
        h = Hyperplane(sol.beta, sol.beta0)
        slacks = recover_slacks(data, h, alphas, scales, config.cost)
        mus = config.cost - alphas
        residual = constraint_residual(data, h.beta, h.beta0, alphas, slacks, mus,
                                       scales, config.cost)
        if residual <= config.kkt_tol or not sol.converged or eps <= _MIN_EPS:
            sol.iterations = used
            return sol, h, slacks, mus, residual
        eps = max(eps * 0.1, _MIN_EPS)


def solve_classical(data: Dataset, config: SolverConfig = SolverConfig(),
                    callback=None) -> TrainedModel:
    """Train the classical soft-margin SVM.

    Raises :class:`ConvergenceError` (carrying the last iterate as ``.model``)
    if the pair-update budget runs out first.
    """
    data.require_both_classes()
    sol, h, slacks, mus, residual = fit_scaled(data, np.ones(data.n), config, callback)
    if h.norm == 0.0:
        raise ConvergenceError("dual solution gives a zero normal vector")
    model = TrainedModel(
        hyperplane=h,
        alphas=sol.alphas,
        slacks=slacks,
        mus=mus,
        objective=primal_objective(data, h, config.cost),
        kkt_residual=residual,
        iterations=sol.iterations,
        variant="classical",
        cost=config.cost,
        sigma_mode=config.sigma_mode,
        converged=bool(sol.converged and residual <= config.kkt_tol),
        info={"dual_objective": dual_objective(data, sol.alphas), "pair_gap": sol.gap},
    )
    if not model.converged:
        raise ConvergenceError(
            f"classical solver stopped after {sol.iterations} pair updates with KKT "
            f"residual {residual:.3g} > {config.kkt_tol:.3g}", model)
    return model
