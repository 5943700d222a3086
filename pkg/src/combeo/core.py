"""Shared types: objective wrapper, optimization sense, tau grid, RNG streams, run records."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class NonFiniteObjectiveError(RuntimeError):
    """Raised when the objective returns NaN or inf for some particle."""


class OptimizationSense(enum.Enum):
    MINIMIZE = "min"
    MAXIMIZE = "max"

    def not_worse(self, candidate, reference):
        """Elementwise ``candidate`` is at least as good as ``reference``."""
        if self is OptimizationSense.MINIMIZE:
            return np.asarray(candidate) <= np.asarray(reference)
        return np.asarray(candidate) >= np.asarray(reference)

    def better(self, candidate, reference):
        if self is OptimizationSense.MINIMIZE:
            return np.asarray(candidate) < np.asarray(reference)
        return np.asarray(candidate) > np.asarray(reference)

    def best_index(self, costs) -> int:
        costs = np.asarray(costs)
        return int(np.argmin(costs) if self is OptimizationSense.MINIMIZE else np.argmax(costs))

    def best(self, costs) -> float:
        return float(np.asarray(costs)[self.best_index(costs)])

    @property
    def worst_value(self) -> float:
        return np.inf if self is OptimizationSense.MINIMIZE else -np.inf


@dataclass(frozen=True)
class TauGrid:
    """Fictitious iteration time ``tau_i = tau0 + i * dtau``."""

    M: int
    tau0: float = 1.0
    dtau: float = 1e-7

    def __post_init__(self):
        if self.dtau <= 0:
            raise ValueError("dtau must be positive")
        if self.M < 1:
            raise ValueError("M must be >= 1")

    def __getitem__(self, i: int) -> float:
        return self.tau0 + i * self.dtau


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(self.stream,)))


@dataclass
class Objective:
    """An objective function plus its box and, when known, its optimum.

    ``vectorized=True`` means ``fn`` accepts an ``(N, n)`` batch and returns ``(N,)``.
    """

    fn: Callable
    lower: np.ndarray
    upper: np.ndarray
    x_opt: np.ndarray | None = None
    f_opt: float | None = None
    name: str = "objective"
    vectorized: bool = False
    evaluations: int = 0

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if self.x_opt is not None:
            self.x_opt = np.asarray(self.x_opt, dtype=float)

    @property
    def n(self) -> int:
        return self.lower.shape[0]

    def clamp(self, X):
        return np.clip(X, self.lower, self.upper)


def evaluate_ensemble(objective: Objective, ensemble) -> np.ndarray:
    """Objective value of every particle (rows of ``ensemble``); bumps the evaluation counter by N."""
    X = np.atleast_2d(np.asarray(ensemble, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("cannot evaluate an empty ensemble")
    if objective.vectorized:
        costs = np.asarray(objective.fn(X), dtype=float).reshape(X.shape[0])
    else:
        costs = np.array([float(objective.fn(x)) for x in X])
    objective.evaluations += X.shape[0]
    bad = np.flatnonzero(~np.isfinite(costs))
    if bad.size:
        j = int(bad[0])
        raise NonFiniteObjectiveError(
            f"{objective.name}: non-finite value {costs[j]!r} at particle {j}, x={X[j].tolist()}"
        )
    return costs


def update_extremal_cost(current: float, costs, sense: OptimizationSense) -> float:
    costs = np.asarray(costs, dtype=float)
    if costs.size == 0:
        raise ValueError("empty cost vector")
    candidate = sense.best(costs)
    if current is None or not np.isfinite(current):
        return candidate
    return candidate if sense.better(candidate, current) else float(current)


def ensemble_mean(ensemble) -> np.ndarray:
    X = np.atleast_2d(np.asarray(ensemble, dtype=float))
    if X.shape[0] < 1:
        raise ValueError("ensemble must contain at least one particle")
    return X.mean(axis=0)


@dataclass
class RunRecord:
    """Per-iteration trace of a single optimizer run.

    ``mean_error`` is the reported error: ``||mean - x*||`` when the optimizer
    location is known, otherwise the cost gap ``|best - f*|``. Both readings are
    kept in ``x_error`` and ``f_gap``.
    """

    optimizer: str
    objective: str
    seed: int
    iteration: list[int] = field(default_factory=list)
    tau: list[float] = field(default_factory=list)
    best_cost: list[float] = field(default_factory=list)
    mean_error: list[float] = field(default_factory=list)
    x_error: list[float] = field(default_factory=list)
    f_gap: list[float] = field(default_factory=list)
    evals: list[int] = field(default_factory=list)
    final_mean: np.ndarray | None = None
    final_best: np.ndarray | None = None
    final_best_cost: float = float("nan")
    termination: str = ""
    iterations_to_target: int | None = None
    wall_time: float = 0.0

    def log(self, i: int, tau: float, best: float, x_err: float, f_gap: float, evals: int):
        self.iteration.append(i)
        self.tau.append(tau)
        self.best_cost.append(best)
        self.x_error.append(x_err)
        self.f_gap.append(f_gap)
        self.mean_error.append(x_err if np.isfinite(x_err) else f_gap)
        self.evals.append(evals)

    @property
    def iterations(self) -> int:
        return self.iteration[-1] if self.iteration else 0

    @property
    def final_error(self) -> float:
        return self.mean_error[-1] if self.mean_error else float("nan")


def error_measures(objective: Objective, mean, best_cost: float) -> tuple[float, float]:
    """(||mean - x*||, |best - f*|); NaN where the reference is unknown."""
    x_err = float(np.linalg.norm(mean - objective.x_opt)) if objective.x_opt is not None else float("nan")
    f_gap = abs(best_cost - objective.f_opt) if objective.f_opt is not None else float("nan")
    return x_err, f_gap
