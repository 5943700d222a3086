"""Scrambling, relaxation and selection operators plus permutation sampling."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import OptimizationSense


@dataclass(frozen=True)
class SelectionPolicy:
    varsigma: float = 1.0
    sense: OptimizationSense = OptimizationSense.MINIMIZE

    def __post_init__(self):
        if not 0.0 < self.varsigma <= 1.0:
            raise ValueError(f"varsigma={self.varsigma} outside (0, 1]")

    @property
    def perturbation_index(self) -> float:
        """``floor(1 / (1 - varsigma))``; infinite for deterministic selection."""
        if self.varsigma == 1.0:
            return math.inf
        return math.floor(1.0 / (1.0 - self.varsigma))


def sample_permutation(N: int, rng: np.random.Generator) -> np.ndarray:
    if N < 1:
        raise ValueError("N must be >= 1")
    return rng.permutation(N)


def sample_derangement(N: int, rng: np.random.Generator, max_tries: int = 10_000) -> np.ndarray:
    """Uniform permutation without fixed points, by rejection."""
    if N < 2:
        raise ValueError("no derangement exists for N < 2")
    idx = np.arange(N)
    for _ in range(max_tries):
        p = rng.permutation(N)
        if not np.any(p == idx):
            return p
    raise RuntimeError("derangement rejection sampling did not terminate")


def scramble_whole(base, corrections, sigma2) -> np.ndarray:
    """Particle j becomes ``base[sigma2[j]] + corrections[j]``."""
    base = np.asarray(base, dtype=float)
    return base[np.asarray(sigma2)] + np.asarray(corrections, dtype=float)


def scramble_elementwise(
    base,
    corrections,
    sigma2,
    acceptance: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Element-wise scrambling with relaxation.

    Every particle starts as ``base[sigma2[j]]``. A start component ``r`` is drawn
    once, and the components are visited ``r, r+1, ..., r-1`` (wrapping); the
    k-th visited component of particle j takes its correction when the k-th
    uniform draw for that particle is below ``acceptance``.
    """
    if not 0.0 < acceptance <= 1.0:
        raise ValueError(f"acceptance probability {acceptance} outside (0, 1]")
    base = np.asarray(base, dtype=float)
    D = np.asarray(corrections, dtype=float)
    N, n = base.shape
    r = int(rng.integers(n))
    zeta = rng.random((N, n))
    order = (r + np.arange(n)) % n
    accept = np.empty((N, n), dtype=bool)
    accept[:, order] = zeta < acceptance
    out = base[np.asarray(sigma2)].copy()
    out[accept] += D[accept]
    return out


def select(prev, cand, prev_costs, cand_costs, policy: SelectionPolicy, rng: np.random.Generator | None = None):
    """Index-aligned keep/revert. Returns ``(ensemble, costs, kept_mask)``."""
    prev = np.asarray(prev, dtype=float)
    cand = np.asarray(cand, dtype=float)
    prev_costs = np.asarray(prev_costs, dtype=float)
    cand_costs = np.asarray(cand_costs, dtype=float)
    keep = policy.sense.not_worse(cand_costs, prev_costs)
    if policy.varsigma < 1.0:
        if rng is None:
            raise ValueError("stochastic selection needs an rng")
        flip = rng.random(keep.shape[0]) >= policy.varsigma
        keep = keep ^ flip
    out = np.where(keep[:, None], cand, prev)
    costs = np.where(keep, cand_costs, prev_costs)
    return out, costs, keep


def gain_perturbation_index(gamma_gamma_t) -> int:
    """``floor(||(gamma gamma^T)^{-1}||)``; diagnostic only."""
    return int(math.floor(np.linalg.norm(np.linalg.inv(gamma_gamma_t), 2)))
