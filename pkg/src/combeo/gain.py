"""Gain-like update coefficient matrix and the blended innovation covariance.

Matrices follow the column convention: the ensemble is ``X`` (n x N) and the
innovation/observation matrix is ``F`` (d x N), one column per particle.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

log = logging.getLogger(__name__)


@dataclass
class NoiseIntensity:
    """Innovation noise intensity ``rho`` and coalescence intensity ``rho_c``.

    Either block may be absent (``None``) when the corresponding innovation is
    not part of the stacked vector.
    """

    rho: np.ndarray | None = None
    rho_c: np.ndarray | None = None

    @classmethod
    def diagonal(cls, d_f: int = 0, n_c: int = 0, r: float = 1e-2, r_c: float = 1e-2) -> "NoiseIntensity":
        return cls(
            rho=r * np.eye(d_f) if d_f else None,
            rho_c=r_c * np.eye(n_c) if n_c else None,
        )

    def gamma_gamma_t(self) -> np.ndarray:
        """Block-diagonal ``[[rho rho^T, 0], [0, rho_c rho_c^T]]``."""
        blocks = [b @ b.T for b in (self.rho, self.rho_c) if b is not None]
        if not blocks:
            raise ValueError("noise intensity has no blocks")
        return scipy.linalg.block_diag(*blocks)


@dataclass
class GainState:
    """Previous ensemble mean, previous innovation mean and previous tau."""

    x_mean_prev: np.ndarray
    f_mean_prev: np.ndarray
    tau_prev: float
    df_mean_prev: np.ndarray | None = None

    @classmethod
    def bootstrap(cls, x_mean0, f_mean1, tau0: float) -> "GainState":
        """First-iteration state: previous innovation mean equals the current one, so its increment is zero."""
        return cls(np.array(x_mean0, dtype=float), np.array(f_mean1, dtype=float), tau0)


def innovation_covariance(F, F_hat, alpha: float, gamma_gamma_t) -> np.ndarray:
    """``alpha/(N-1) (F_hat - F)(F_hat - F)^T + (1 - alpha) gamma gamma^T``."""
    F = np.atleast_2d(np.asarray(F, dtype=float))
    N = F.shape[1]
    if N < 2:
        raise ValueError("need at least two particles for a sample covariance")
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha={alpha} outside (0, 1]")
    A = np.asarray(F_hat, dtype=float).reshape(-1, 1) - F
    cov = alpha * (A @ A.T) / (N - 1) + (1.0 - alpha) * np.asarray(gamma_gamma_t, dtype=float)
    return 0.5 * (cov + cov.T)


def gain_numerator(
    X,
    X_hat,
    F,
    F_hat,
    state: GainState,
    tau_i: float,
    form: str = "update",
) -> np.ndarray:
    """Cross term of the gain (n x d), tau-weighted as in the additive update.

    ``form="update"`` uses ``X_hat tau_i - X_hat_prev tau_prev`` for the mean
    drift; ``form="pseudocode"`` uses ``X_hat (tau_i - tau_prev)`` with the
    current mean. ``state.df_mean_prev`` (the mean increment) defaults to
    ``F_hat - state.f_mean_prev``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    F = np.atleast_2d(np.asarray(F, dtype=float))
    x_hat = np.asarray(X_hat, dtype=float).reshape(-1)
    f_hat = np.asarray(F_hat, dtype=float).reshape(-1)
    n, N = X.shape
    d = F.shape[0]
    if F.shape[1] != N or x_hat.shape[0] != n or f_hat.shape[0] != d:
        raise ValueError(f"dimension mismatch: X {X.shape}, F {F.shape}, X_hat {x_hat.shape}, F_hat {f_hat.shape}")
    f_prev = np.asarray(state.f_mean_prev, dtype=float).reshape(-1)
    x_prev = np.asarray(state.x_mean_prev, dtype=float).reshape(-1)
    tau_prev = state.tau_prev
    dF = f_hat - f_prev if state.df_mean_prev is None else np.asarray(state.df_mean_prev).reshape(-1)

    # rows of the N x d factor: F^T tau_i - F_hat_prev^T tau_prev - dF_hat^T tau_i
    right = F.T * tau_i - f_prev[None, :] * tau_prev - dF[None, :] * tau_i
    term1 = (X - x_hat[:, None]) @ right
    if form == "update":
        drift = x_hat * tau_i - x_prev * tau_prev
    elif form == "pseudocode":
        drift = x_hat * (tau_i - tau_prev)
    else:
        raise ValueError(f"unknown numerator form {form!r}")
    term2 = np.outer(drift, (F - f_hat[:, None]).sum(axis=1))
    return (term1 + term2) / N


def spd_solve(A, B, sym_tol: float = 1e-10) -> np.ndarray:
    """Solve ``X A = B`` for symmetric PSD ``A`` (d x d) and ``B`` (n x d).

    Adds jitter ``1e-12 * trace(A) / d`` before a Cholesky solve; falls back
    to the pseudo-inverse if the factorization fails.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    d = A.shape[0]
    scale = np.linalg.norm(A)
    if np.max(np.abs(A - A.T), initial=0.0) > sym_tol * max(scale, 1.0):
        raise ValueError("matrix is not symmetric within tolerance")
    lam = 1e-12 * np.trace(A) / d
    Aj = A + lam * np.eye(d)
    try:
        c = scipy.linalg.cho_factor(Aj, check_finite=False)
        return scipy.linalg.cho_solve(c, B.T, check_finite=False).T
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
        log.warning("covariance not positive definite after jitter; using pseudo-inverse")
        return B @ np.linalg.pinv(Aj, hermitian=True)


def compute_gain(numerator, covariance) -> np.ndarray:
    numerator = np.atleast_2d(np.asarray(numerator, dtype=float))
    if not np.any(numerator):
        return np.zeros_like(numerator)
    return spd_solve(covariance, numerator)


def apply_correction(G, innovation_j, beta_i: float) -> np.ndarray:
    if beta_i < 0:
        raise ValueError("beta must be non-negative")
    return beta_i * (np.asarray(G, dtype=float) @ np.asarray(innovation_j, dtype=float))


def apply_corrections(G, innovations_rows, beta) -> np.ndarray:
    """Corrections for all particles at once: row j is ``beta_j G I_j``.

    ``beta`` is a scalar or a per-particle vector.
    """
    D = np.asarray(innovations_rows, dtype=float) @ np.asarray(G, dtype=float).T
    return np.asarray(beta, dtype=float).reshape(-1, 1) * D if np.ndim(beta) else beta * D
