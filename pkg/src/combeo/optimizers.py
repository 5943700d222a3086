"""Iteration drivers for the three change-of-measure search schemes and the split-innovation variant.

Every driver follows the same skeleton: uniform initial scatter in the box,
then per iteration build innovations from the current ensemble, compute one
gain, form corrections ``D_j = beta G I_j``, perturb (scramble / momentum),
clamp to the box, evaluate, select and log.

The gain regresses particles on the *observation* matrix ``H = -I`` (the
quantity whose target the innovation measures against, e.g. the cost ``f`` for
the greedy innovation ``f_best - f``). The cross term is invariant to constant
shifts of ``H``, so this reproduces the cost-based gain of the greedy update
exactly and extends it consistently to vector innovations.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import scipy.linalg

from . import gain as gain_mod
from .core import (
    Objective,
    OptimizationSense,
    RngStream,
    RunRecord,
    TauGrid,
    ensemble_mean,
    error_measures,
    evaluate_ensemble,
    update_extremal_cost,
)
from .innovation import (
    BestMemory,
    build_split_innovation,
    greedy_coalescence_rows,
    pair_difference_rows,
    pso_rows,
)
from .perturbation import (
    SelectionPolicy,
    sample_derangement,
    sample_permutation,
    scramble_elementwise,
    scramble_whole,
    select,
)

log = logging.getLogger(__name__)


# Step-size scale used when OptimizerConfig.beta_hat is left as None.
DEFAULT_BETA_HAT = {"pc1": 2.0, "pc2": 2.0, "pc3": 0.5, "split": 1.0}


@dataclass
class OptimizerConfig:
    N: int = 50
    M: int = 1000
    alpha: float = 0.8
    # None picks the per-driver value from DEFAULT_BETA_HAT
    beta_hat: float | None = None
    acceptance_probability: float = 0.1
    r: float = 1e-8
    r_c: float = 1e-8
    sense: OptimizationSense = OptimizationSense.MINIMIZE
    dtau: float = 1e-7
    tau0: float = 1.0
    target_error: float = 1e-5
    # "x": ||mean - x*|| when x* is known (else cost gap); "f": cost gap only
    error_metric: str = "x"
    seed: int = 0
    theta_max: float = 1.0
    theta_min: float = 0.1
    varsigma: float = 1.0
    per_particle_zeta: bool = False
    numerator_form: str = "pseudocode"
    split_squared: bool = True
    # split driver only: "auto" localizes the gain to its diagonal when d == n
    localization: str = "auto"

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
        if self.M < 1:
            problems.append(f"M={self.M} must be >= 1")
        if not 0.0 < self.alpha <= 1.0:
            problems.append(f"alpha={self.alpha} must lie in (0, 1]")
        if self.beta_hat is not None and self.beta_hat < 0:
            problems.append(f"beta_hat={self.beta_hat} must be >= 0")
        if not 0.0 < self.acceptance_probability <= 1.0:
            problems.append(f"acceptance_probability={self.acceptance_probability} must lie in (0, 1]")
        if self.r <= 0 or self.r_c <= 0:
            problems.append("noise intensities r, r_c must be > 0")
        if self.dtau <= 0:
            problems.append(f"dtau={self.dtau} must be > 0")
        if self.target_error < 0:
            problems.append("target_error must be >= 0")
        if self.error_metric not in ("x", "f"):
            problems.append(f"error_metric={self.error_metric!r} must be 'x' or 'f'")
        if not 0.0 < self.varsigma <= 1.0:
            problems.append(f"varsigma={self.varsigma} must lie in (0, 1]")
        if self.numerator_form not in ("pseudocode", "update"):
            problems.append(f"numerator_form={self.numerator_form!r} unknown")
        if self.localization not in ("auto", "none", "diagonal"):
            problems.append(f"localization={self.localization!r} must be auto, none or diagonal")
        if not self.theta_min <= self.theta_max:
            problems.append("theta_min must not exceed theta_max")
        return problems


def theta_schedule(i: int, M: int, theta_max: float = 1.0, theta_min: float = 0.1) -> float:
    """Momentum weight, decreasing linearly from ``theta_max`` at i=0."""
    return theta_max - (theta_max - theta_min) * i / M


class _Tracker:
    """Extremal cost, gain state, error bookkeeping and the trace shared by all drivers."""

    def __init__(self, name: str, objective: Objective, cfg: OptimizerConfig):
        self.objective = objective
        self.cfg = cfg
        self.grid = TauGrid(cfg.M, cfg.tau0, cfg.dtau)
        self.record = RunRecord(name, objective.name, cfg.seed)
        self.extremal = cfg.sense.worst_value
        self.gain_state: gain_mod.GainState | None = None
        self._last_f_mean: np.ndarray | None = None
        self.t0 = time.perf_counter()

    def observe(self, i: int, X, costs, best_x=None, best_cost=None) -> bool:
        """Log iteration ``i``; returns True when the target error is reached."""
        self.extremal = update_extremal_cost(self.extremal, costs, self.cfg.sense)
        if best_cost is None:
            best_cost = self.extremal
        mean = ensemble_mean(X)
        x_err, f_gap = error_measures(self.objective, mean, best_cost)
        self.record.log(i, self.grid[i], float(best_cost), x_err, f_gap, self.objective.evaluations)
        err = x_err if (self.cfg.error_metric == "x" and np.isfinite(x_err)) else f_gap
        self.record.final_mean = mean
        if best_x is not None:
            self.record.final_best = np.array(best_x, dtype=float)
        self.record.final_best_cost = float(best_cost)
        if np.isfinite(err) and err <= self.cfg.target_error:
            self.record.termination = "target"
            self.record.iterations_to_target = i
            return True
        return False

    def gain(self, i: int, X, innovations, gamma_gamma_t, localize: bool = False) -> np.ndarray:
        """Gain for iteration ``i`` from the current ensemble (N x n) and innovations (N x d).

        ``localize=True`` keeps only the diagonal of both the cross term and the
        innovation covariance, so component k of the particles is driven by
        innovation component k alone (requires d == n).
        """
        Xc = X.T
        H = -innovations.T
        x_hat = Xc.mean(axis=1)
        f_hat = H.mean(axis=1)
        tau_i, tau_prev = self.grid[i], self.grid[i - 1]
        if self.gain_state is None:
            self.gain_state = gain_mod.GainState.bootstrap(x_hat, f_hat, tau_prev)
        if self.cfg.numerator_form == "pseudocode":
            last = f_hat if self._last_f_mean is None else self._last_f_mean
            state = gain_mod.GainState(x_hat, f_hat, tau_prev, df_mean_prev=f_hat - last)
        else:
            state = replace(self.gain_state, tau_prev=tau_prev)
        num = gain_mod.gain_numerator(Xc, x_hat, H, f_hat, state, tau_i, form=self.cfg.numerator_form)
        cov = gain_mod.innovation_covariance(H, f_hat, self.cfg.alpha, gamma_gamma_t)
        if localize:
            if num.shape[0] != num.shape[1]:
                raise ValueError(f"diagonal localization needs d == n, got gain shape {num.shape}")
            eye = np.eye(num.shape[0])
            num, cov = num * eye, cov * eye
        self.gain_state = gain_mod.GainState(x_hat, f_hat, tau_i)
        self._last_f_mean = f_hat
        return gain_mod.compute_gain(num, cov)

    def finish(self) -> RunRecord:
        if not self.record.termination:
            self.record.termination = "max_iter"
        self.record.wall_time = time.perf_counter() - self.t0
        return self.record


def _initial_population(objective: Objective, N: int, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(objective.lower, objective.upper, size=(N, objective.n))


def resolved_beta_hat(cfg: OptimizerConfig, driver: str) -> float:
    return DEFAULT_BETA_HAT[driver] if cfg.beta_hat is None else cfg.beta_hat


def _beta(cfg: OptimizerConfig, driver: str, N: int, rng: np.random.Generator):
    scale = resolved_beta_hat(cfg, driver)
    if cfg.per_particle_zeta:
        return scale * rng.random(N)
    return scale * float(rng.random())


def _eye_blocks(*sizes_and_scales) -> np.ndarray:
    return scipy.linalg.block_diag(*[(s**2) * np.eye(k) for k, s in sizes_and_scales])


def run_pseudocode1(objective: Objective, config: OptimizerConfig, X0=None) -> RunRecord:
    """Greedy plus coalescence innovation with whole-particle scrambling and selection."""
    cfg = config
    rng = RngStream(cfg.seed).generator()
    objective.evaluations = 0
    track = _Tracker("pc1", objective, cfg)
    policy = SelectionPolicy(cfg.varsigma, cfg.sense)
    n, N = objective.n, cfg.N
    X = _initial_population(objective, N, rng) if X0 is None else np.array(X0, dtype=float)
    costs = evaluate_ensemble(objective, X)
    k = cfg.sense.best_index(costs)
    best_x, best_c = X[k].copy(), float(costs[k])
    if track.observe(0, X, costs, best_x, best_c):
        return track.finish()
    gg = _eye_blocks((1, cfg.r), (n, cfg.r_c))
    for i in range(1, cfg.M + 1):
        sigma1 = sample_derangement(N, rng)
        I = greedy_coalescence_rows(track.extremal, costs, X, sigma1)
        G = track.gain(i, X, I, gg)
        D = gain_mod.apply_corrections(G, I, _beta(cfg, "pc1", N, rng))
        sigma2 = sample_permutation(N, rng)
        cand = objective.clamp(scramble_whole(X, D, sigma2))
        cand_costs = evaluate_ensemble(objective, cand)
        X, costs, _ = select(X, cand, costs, cand_costs, policy, rng)
        k = cfg.sense.best_index(costs)
        if cfg.sense.better(costs[k], best_c):
            best_x, best_c = X[k].copy(), float(costs[k])
        if track.observe(i, X, costs, best_x, best_c):
            break
    return track.finish()


def run_pseudocode2(objective: Objective, config: OptimizerConfig, X0=None) -> RunRecord:
    """Pair-difference (coalescence) innovation with element-wise scrambling, relaxation and selection."""
    cfg = config
    rng = RngStream(cfg.seed).generator()
    objective.evaluations = 0
    track = _Tracker("pc2", objective, cfg)
    policy = SelectionPolicy(cfg.varsigma, cfg.sense)
    n, N = objective.n, cfg.N
    X = _initial_population(objective, N, rng) if X0 is None else np.array(X0, dtype=float)
    costs = evaluate_ensemble(objective, X)
    k = cfg.sense.best_index(costs)
    best_x, best_c = X[k].copy(), float(costs[k])
    if track.observe(0, X, costs, best_x, best_c):
        return track.finish()
    gg = _eye_blocks((n, cfg.r_c))
    for i in range(1, cfg.M + 1):
        sigma1 = sample_derangement(N, rng)
        I = pair_difference_rows(X, sigma1)
        G = track.gain(i, X, I, gg)
        D = gain_mod.apply_corrections(G, I, _beta(cfg, "pc2", N, rng))
        sigma2 = sample_permutation(N, rng)
        cand = objective.clamp(scramble_elementwise(X, D, sigma2, cfg.acceptance_probability, rng))
        cand_costs = evaluate_ensemble(objective, cand)
        X, costs, _ = select(X, cand, costs, cand_costs, policy, rng)
        k = cfg.sense.best_index(costs)
        if cfg.sense.better(costs[k], best_c):
            best_x, best_c = X[k].copy(), float(costs[k])
        if track.observe(i, X, costs, best_x, best_c):
            break
    return track.finish()


def run_pseudocode3(objective: Objective, config: OptimizerConfig, X0=None) -> RunRecord:
    """Personal/global-best innovation with a decaying momentum term; no scrambling, no selection."""
    cfg = config
    rng = RngStream(cfg.seed).generator()
    objective.evaluations = 0
    track = _Tracker("pc3", objective, cfg)
    n, N = objective.n, cfg.N
    X = _initial_population(objective, N, rng) if X0 is None else np.array(X0, dtype=float)
    costs = evaluate_ensemble(objective, X)
    memory = BestMemory.initialize(X, costs, cfg.sense)
    if track.observe(0, X, costs, memory.global_best, memory.global_cost):
        return track.finish()
    gg = _eye_blocks((n, cfg.r_c), (n, cfg.r_c))
    D = np.zeros_like(X)
    for i in range(1, cfg.M + 1):
        theta = theta_schedule(i, cfg.M, cfg.theta_max, cfg.theta_min)
        I = pso_rows(memory, X)
        G = track.gain(i, X, I, gg)
        D = theta * D + gain_mod.apply_corrections(G, I, _beta(cfg, "pc3", N, rng))
        X = objective.clamp(X + D)
        costs = evaluate_ensemble(objective, X)
        memory.update(X, costs)
        if track.observe(i, X, costs, memory.global_best, memory.global_cost):
            break
    return track.finish()


@dataclass
class SplitProblem:
    """A forward model ``x -> prediction`` (batched: (N, n) -> (N, d)) and the observed data."""

    forward: Callable
    observed: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    truth: np.ndarray | None = None
    name: str = "split"
    evaluations: int = field(default=0, init=False)

    def __post_init__(self):
        self.observed = np.asarray(self.observed, dtype=float)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)

    def residuals(self, X) -> np.ndarray:
        pred = np.asarray(self.forward(np.atleast_2d(X)), dtype=float)
        self.evaluations += pred.shape[0]
        R = self.observed[None, :] - pred
        if not np.all(np.isfinite(R)):
            j = int(np.flatnonzero(~np.all(np.isfinite(R), axis=1))[0])
            from .core import NonFiniteObjectiveError

            raise NonFiniteObjectiveError(f"{self.name}: non-finite prediction for particle {j}")
        return R

    def objective(self) -> Objective:
        """Misfit ``||observed - forward(x)||``, sharing this problem's evaluation counter."""
        return Objective(
            fn=lambda X: np.linalg.norm(self.residuals(X), axis=1),
            lower=self.lower,
            upper=self.upper,
            x_opt=self.truth,
            f_opt=0.0,
            name=self.name,
            vectorized=True,
        )


def run_split_greedy(problem: SplitProblem, config: OptimizerConfig, X0=None) -> RunRecord:
    """Greedy variant whose innovation is the vector of per-component residuals.

    Squared residuals are used by default (``config.split_squared``); the
    signed residual is available with ``split_squared=False``. Global search
    relies on whole-particle scrambling only; selection keeps particles whose
    total misfit does not worsen.

    With one residual per unknown (d == n) the gain is localized to its
    diagonal by default (``localization="auto"``). A full gain is a linear map
    of the centered ensemble, so with N - 1 < n every particle would stay in
    the affine hull of the initial ensemble and a generic solution would be
    out of reach.
    """
    cfg = config
    rng = RngStream(cfg.seed).generator()
    problem.evaluations = 0
    objective = problem.objective()
    track = _Tracker("split", objective, cfg)
    policy = SelectionPolicy(cfg.varsigma, cfg.sense)
    N = cfg.N
    X = _initial_population(objective, N, rng) if X0 is None else np.array(X0, dtype=float)
    R = problem.residuals(X)
    costs = np.linalg.norm(R, axis=1)
    objective.evaluations = problem.evaluations

    def observe(i):
        k = cfg.sense.best_index(costs)
        objective.evaluations = problem.evaluations
        return track.observe(i, X, costs, X[k], float(costs[k]))

    if observe(0):
        return track.finish()
    d = problem.observed.shape[0]
    localize = cfg.localization == "diagonal" or (cfg.localization == "auto" and d == objective.n)
    gg = _eye_blocks((d, cfg.r))
    for i in range(1, cfg.M + 1):
        I = build_split_innovation(R, squared=cfg.split_squared)
        G = track.gain(i, X, I, gg, localize=localize)
        D = gain_mod.apply_corrections(G, I, _beta(cfg, "split", N, rng))
        sigma2 = sample_permutation(N, rng)
        cand = objective.clamp(scramble_whole(X, D, sigma2))
        R_cand = problem.residuals(cand)
        cand_costs = np.linalg.norm(R_cand, axis=1)
        X, costs, keep = select(X, cand, costs, cand_costs, policy, rng)
        R = np.where(keep[:, None], R_cand, R)
        if observe(i):
            break
    return track.finish()


DRIVERS = {
    "pc1": run_pseudocode1,
    "pc2": run_pseudocode2,
    "pc3": run_pseudocode3,
}
