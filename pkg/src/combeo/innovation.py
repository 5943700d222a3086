"""Per-particle innovation vectors and their stacking into the d x N matrix used by the gain."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import OptimizationSense


class InnovationKind(enum.Enum):
    GREEDY = "greedy"
    COALESCENCE = "coalescence"
    GREEDY_PLUS_COALESCENCE = "greedy+coalescence"
    PERSONAL_GLOBAL_BEST = "personal+global"
    SPLIT_COMPONENTS = "split"
    PAIR_DIFFERENCE = "pair-difference"

    def dimension(self, n: int, n_components: int | None = None) -> int:
        if self is InnovationKind.GREEDY:
            return 1
        if self in (InnovationKind.COALESCENCE, InnovationKind.PAIR_DIFFERENCE):
            return n
        if self is InnovationKind.GREEDY_PLUS_COALESCENCE:
            return 1 + n
        if self is InnovationKind.PERSONAL_GLOBAL_BEST:
            return 2 * n
        if n_components is None or n_components < 1:
            raise ValueError("split innovation needs the number of residual components")
        return n_components


def build_greedy_innovation(extremal: float, cost_j: float) -> np.ndarray:
    return np.array([extremal - cost_j], dtype=float)


def build_coalescence_innovation(ensemble, j: int, sigma1) -> np.ndarray:
    """``x^(sigma1(j)) - x^(j)``; ``sigma1`` must not fix ``j``."""
    k = int(sigma1[j])
    if k == j:
        raise ValueError(f"sigma1 maps particle {j} to itself")
    X = np.asarray(ensemble, dtype=float)
    return X[k] - X[j]


def build_pso_innovation(memory: "BestMemory", particle_j, j: int) -> np.ndarray:
    x = np.asarray(particle_j, dtype=float)
    return np.concatenate([memory.personal[j] - x, memory.global_best - x])


def build_split_innovation(residuals, squared: bool = True) -> np.ndarray:
    """Per-component residual innovation; squared by default, signed when ``squared=False``."""
    r = np.asarray(residuals, dtype=float)
    return r**2 if squared else r.copy()


def stack_innovation_matrix(innovations) -> np.ndarray:
    """Stack N per-particle vectors of equal length d as the columns of a d x N matrix."""
    vecs = [np.atleast_1d(np.asarray(v, dtype=float)) for v in innovations]
    if not vecs:
        raise ValueError("no innovations to stack")
    d = vecs[0].shape[0]
    if any(v.ndim != 1 or v.shape[0] != d for v in vecs):
        raise ValueError("ragged innovation vectors")
    return np.stack(vecs, axis=1)


# Whole-ensemble builders used by the drivers. Rows are particles, so each
# returns an (N, d) array; transpose to get the d x N matrix.


def greedy_rows(extremal: float, costs) -> np.ndarray:
    return (extremal - np.asarray(costs, dtype=float))[:, None]


def pair_difference_rows(X, sigma1) -> np.ndarray:
    sigma1 = np.asarray(sigma1)
    if np.any(sigma1 == np.arange(len(sigma1))):
        raise ValueError("sigma1 has a fixed point")
    return X[sigma1] - X


def greedy_coalescence_rows(extremal: float, costs, X, sigma1) -> np.ndarray:
    return np.hstack([greedy_rows(extremal, costs), pair_difference_rows(X, sigma1)])


def pso_rows(memory: "BestMemory", X) -> np.ndarray:
    return np.hstack([memory.personal - X, memory.global_best[None, :] - X])


@dataclass
class BestMemory:
    """Personal best of every particle index and the global best over them."""

    personal: np.ndarray
    personal_cost: np.ndarray
    global_best: np.ndarray
    global_cost: float
    sense: OptimizationSense = OptimizationSense.MINIMIZE

    @classmethod
    def initialize(cls, X, costs, sense: OptimizationSense) -> "BestMemory":
        X = np.asarray(X, dtype=float)
        costs = np.asarray(costs, dtype=float)
        k = sense.best_index(costs)
        return cls(X.copy(), costs.copy(), X[k].copy(), float(costs[k]), sense)

    def update(self, X, costs) -> None:
        """Personal bests take every not-worse particle; the global best moves on a not-worse batch best."""
        costs = np.asarray(costs, dtype=float)
        keep = self.sense.not_worse(costs, self.personal_cost)
        self.personal[keep] = X[keep]
        self.personal_cost[keep] = costs[keep]
        k = self.sense.best_index(costs)
        if self.sense.not_worse(costs[k], self.global_cost):
            self.global_best = np.array(X[k], dtype=float)
            self.global_cost = float(costs[k])
