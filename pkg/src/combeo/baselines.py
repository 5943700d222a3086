"""Reference differential evolution (rand/1/bin) and global-best PSO.

Both record their traces exactly like the change-of-measure drivers so the
harness can compare them row for row.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Objective, OptimizationSense, RngStream, evaluate_ensemble
from .optimizers import OptimizerConfig, _Tracker


@dataclass
class DEConfig:
    N: int = 50
    CR: float = 0.1
    F_scale: float = 0.5
    it_max: int = 1000
    seed: int = 0
    target_error: float = 1e-5
    error_metric: str = "x"
    sense: OptimizationSense = OptimizationSense.MINIMIZE

    def __post_init__(self):
        if isinstance(self.sense, str):
            self.sense = OptimizationSense(self.sense)
        problems = self.validate()
        if problems:
            raise ValueError("; ".join(problems))

    def validate(self) -> list[str]:
        problems = []
        if self.N < 4:
            problems.append(f"N={self.N} must be >= 4 for rand/1 mutation")
        if not 0.0 <= self.CR <= 1.0:
            problems.append(f"CR={self.CR} must lie in [0, 1]")
        if self.F_scale <= 0:
            problems.append(f"F_scale={self.F_scale} must be > 0")
        if self.it_max < 1:
            problems.append(f"it_max={self.it_max} must be >= 1")
        return problems


@dataclass
class PSOConfig:
    N: int = 50
    w_max: float = 0.9
    w_min: float = 0.4
    c1: float = 2.0
    c2: float = 2.0
    # max speed as a fraction of the box width
    v_max_fraction: float = 0.2
    it_max: int = 1000
    seed: int = 0
    target_error: float = 1e-5
    error_metric: str = "x"
    sense: OptimizationSense = OptimizationSense.MINIMIZE

    def __post_init__(self):
        if isinstance(self.sense, str):
            self.sense = OptimizationSense(self.sense)
        problems = self.validate()
        if problems:
            raise ValueError("; ".join(problems))

    def validate(self) -> list[str]:
        problems = []
        if self.N < 2:
            problems.append(f"N={self.N} must be >= 2")
        if min(self.w_max, self.w_min, self.c1, self.c2, self.v_max_fraction) <= 0:
            problems.append("PSO coefficients must be positive")
        if self.it_max < 1:
            problems.append(f"it_max={self.it_max} must be >= 1")
        return problems

    def inertia(self, i: int) -> float:
        return self.w_max - (self.w_max - self.w_min) * i / self.it_max


def _tracker(name: str, objective: Objective, cfg) -> _Tracker:
    oc = OptimizerConfig(
        N=max(cfg.N, 2), M=cfg.it_max, seed=cfg.seed, target_error=cfg.target_error,
        error_metric=cfg.error_metric, sense=cfg.sense,
    )
    return _Tracker(name, objective, oc)


def _mutation_indices(N: int, rng: np.random.Generator) -> np.ndarray:
    """Three mutually distinct donors per target, all different from the target."""
    target = np.arange(N)
    idx = rng.integers(N, size=(N, 3))
    while True:
        a, b, c = idx.T
        bad = (a == target) | (b == target) | (c == target) | (a == b) | (a == c) | (b == c)
        if not bad.any():
            return idx
        idx[bad] = rng.integers(N, size=(int(bad.sum()), 3))


def de_trials(X, F_scale: float, CR: float, rng: np.random.Generator) -> np.ndarray:
    """rand/1/bin trial vectors for every target row of ``X``."""
    N, n = X.shape
    a, b, c = _mutation_indices(N, rng).T
    mutant = X[a] + F_scale * (X[b] - X[c])
    cross = rng.random((N, n)) < CR
    cross[np.arange(N), rng.integers(n, size=N)] = True
    return np.where(cross, mutant, X)


def run_de(objective: Objective, config: DEConfig, X0=None):
    cfg = config
    rng = RngStream(cfg.seed).generator()
    objective.evaluations = 0
    track = _tracker("de", objective, cfg)
    X = rng.uniform(objective.lower, objective.upper, size=(cfg.N, objective.n)) if X0 is None else np.array(X0, float)
    costs = evaluate_ensemble(objective, X)
    k = cfg.sense.best_index(costs)
    if track.observe(0, X, costs, X[k], costs[k]):
        return track.finish()
    for i in range(1, cfg.it_max + 1):
        trial = objective.clamp(de_trials(X, cfg.F_scale, cfg.CR, rng))
        t_costs = evaluate_ensemble(objective, trial)
        keep = cfg.sense.not_worse(t_costs, costs)
        X = np.where(keep[:, None], trial, X)
        costs = np.where(keep, t_costs, costs)
        k = cfg.sense.best_index(costs)
        if track.observe(i, X, costs, X[k], costs[k]):
            break
    return track.finish()


def run_pso(objective: Objective, config: PSOConfig, X0=None, V0=None):
    cfg = config
    rng = RngStream(cfg.seed).generator()
    objective.evaluations = 0
    track = _tracker("pso", objective, cfg)
    N, n = cfg.N, objective.n
    vmax = cfg.v_max_fraction * (objective.upper - objective.lower)
    X = rng.uniform(objective.lower, objective.upper, size=(N, n)) if X0 is None else np.array(X0, float)
    V = np.zeros((N, n)) if V0 is None else np.array(V0, float)
    costs = evaluate_ensemble(objective, X)
    pbest, pcost = X.copy(), costs.copy()
    g = cfg.sense.best_index(pcost)
    gbest, gcost = pbest[g].copy(), float(pcost[g])
    if track.observe(0, X, costs, gbest, gcost):
        return track.finish()
    for i in range(1, cfg.it_max + 1):
        w = cfg.inertia(i)
        r1, r2 = rng.random((N, n)), rng.random((N, n))
        V = w * V + cfg.c1 * r1 * (pbest - X) + cfg.c2 * r2 * (gbest - X)
        V = np.clip(V, -vmax, vmax)
        X = objective.clamp(X + V)
        costs = evaluate_ensemble(objective, X)
        better = cfg.sense.not_worse(costs, pcost)
        pbest[better], pcost[better] = X[better], costs[better]
        g = cfg.sense.best_index(pcost)
        if cfg.sense.not_worse(pcost[g], gcost):
            gbest, gcost = pbest[g].copy(), float(pcost[g])
        if track.observe(i, X, costs, gbest, gcost):
            break
    return track.finish()
