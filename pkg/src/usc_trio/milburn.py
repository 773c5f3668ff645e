"""Exact Milburn covariance dynamics from the vacuum.

The symplectic image of exp(-i k H / gamma) factors as A D(k) A^-1 with D(k)
diagonal, so every entry of D(k) M D(k)^+ carries the single phase
exp(i k (lam_n - lam_m) / gamma). The Poisson average over k then closes
entry by entry:

    sigma(t) = A Xi(t) A^+,
    Xi_nm = M_nm exp(gamma t (exp(i (lam_n - lam_m) / gamma) - 1)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import expm

from .model import NormalModeData, SystemParams, diagonalize
from .symplectic import compose_A, compose_A_inverse, heisenberg_generator, signed_frequencies


@dataclass(frozen=True)
class CovarianceMatrix:
    """Ladder-basis covariance matrix at time ``t``; vacuum is the identity.

    ``gamma`` is ``math.inf`` for unitary (Schrodinger) evolution.
    """

    entries: np.ndarray
    t: float
    gamma: float

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


@dataclass(frozen=True)
class MilburnPropagator:
    params: SystemParams
    modes: NormalModeData
    A: np.ndarray
    A_inv: np.ndarray
    M: np.ndarray
    lam: np.ndarray

    @property
    def delta(self) -> np.ndarray:
        """Pairwise differences lam_n - lam_m."""
        return self.lam[:, None] - self.lam[None, :]


def build_propagator(params: SystemParams) -> MilburnPropagator:
    modes = diagonalize(params)
    A = compose_A(modes, params)
    A_inv = compose_A_inverse(modes, params)
    M = A_inv @ A_inv.conj().T
    M = 0.5 * (M + M.conj().T)
    return MilburnPropagator(params, modes, A, A_inv, M, signed_frequencies(modes.Omega))


def poisson_kernel(delta: np.ndarray, t: float, gamma: float) -> np.ndarray:
    """exp(gamma t (exp(i delta / gamma) - 1)), computed without cancellation."""
    x = np.asarray(delta, dtype=float) / gamma
    exponent = gamma * t * (-2.0 * np.sin(0.5 * x) ** 2 + 1j * np.sin(x))
    return np.exp(exponent)


def _sandwich(prop: MilburnPropagator, kernel: np.ndarray) -> np.ndarray:
    sigma = prop.A @ (prop.M * kernel) @ prop.A.conj().T
    return 0.5 * (sigma + sigma.conj().T)


def _check_time(t: float) -> None:
    if not (t >= 0 and math.isfinite(t)):
        raise ValueError(f"time must be finite and non-negative, got {t!r}")


def covariance(prop: MilburnPropagator, t: float, gamma: float) -> CovarianceMatrix:
    _check_time(t)
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    return CovarianceMatrix(_sandwich(prop, poisson_kernel(prop.delta, t, gamma)), float(t), float(gamma))


def covariance_schrodinger(prop: MilburnPropagator, t: float) -> CovarianceMatrix:
    """Unitary limit gamma -> infinity: kernel exp(i (lam_n - lam_m) t)."""
    _check_time(t)
    return CovarianceMatrix(_sandwich(prop, np.exp(1j * prop.delta * t)), float(t), math.inf)


def steady_kernel(delta: np.ndarray, gamma: float, tol: float = 1e-14) -> np.ndarray:
    """t -> infinity limit of the Poisson kernel.

    Entries whose phase step delta / gamma is a multiple of 2 pi never decay
    (kernel stays 1); all others vanish.
    """
    x = np.asarray(delta, dtype=float) / gamma
    return (np.sin(0.5 * x) ** 2 <= tol).astype(complex)


def covariance_steady(prop: MilburnPropagator, gamma: float) -> CovarianceMatrix:
    return CovarianceMatrix(_sandwich(prop, steady_kernel(prop.delta, gamma)), math.inf, float(gamma))


def covariance_trajectory(prop: MilburnPropagator, times, gamma: Optional[float]) -> np.ndarray:
    """Covariance matrices at every time in ``times``; ``gamma=None`` is the unitary limit.

    Returns:
        complex array of shape (len(times), 6, 6).
    """
    times = np.asarray(times, dtype=float)
    if np.any(times < 0) or not np.all(np.isfinite(times)):
        raise ValueError("times must be finite and non-negative")
    d = prop.delta[None, :, :]
    tt = times[:, None, None]
    if gamma is None:
        kernel = np.exp(1j * d * tt)
    else:
        x = d / gamma
        kernel = np.exp(gamma * tt * (-2.0 * np.sin(0.5 * x) ** 2 + 1j * np.sin(x)))
    sig = prop.A[None] @ (prop.M[None] * kernel) @ prop.A.conj().T[None]
    return 0.5 * (sig + np.conj(np.swapaxes(sig, 1, 2)))


def poisson_log_weights(mean: float, k_max: int) -> np.ndarray:
    """log P(k) for k = 0..k_max of a Poisson law with the given mean."""
    k = np.arange(k_max + 1)
    if mean == 0:
        out = np.full(k_max + 1, -np.inf)
        out[0] = 0.0
        return out
    lgam = np.array([math.lgamma(i + 1.0) for i in k])
    return -mean + k * math.log(mean) - lgam


def poisson_cutoff(mean: float, epsilon: float) -> int:
    """Smallest K whose Poisson tail mass beyond K is below ``epsilon``.

    The tail is summed explicitly from log-space weights, largest index first.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if mean == 0:
        return 0
    k_max = int(mean + 20.0 * math.sqrt(mean + 1.0) + 50)
    w = np.exp(poisson_log_weights(mean, k_max))
    tail = np.cumsum(w[::-1])[::-1]  # tail[K] = sum_{k >= K} w_k
    above = np.nonzero(tail[1:] < epsilon)[0]
    return int(above[0]) if above.size else k_max


def covariance_series_oracle(
    prop: MilburnPropagator, t: float, gamma: float, epsilon: float = 1e-12
) -> CovarianceMatrix:
    """Truncated Poisson sum over k of H(k) H(k)^+ (vacuum start).

    H(k) is the k-th power of expm(G / gamma), with G taken directly from the
    potential matrix, so this path shares nothing with the factorised
    closed form beyond the parameters.
    """
    _check_time(t)
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    mean = gamma * t
    K = poisson_cutoff(mean, epsilon)
    logw = poisson_log_weights(mean, K)
    step = expm(heisenberg_generator(prop.params) / gamma)
    H = np.eye(6, dtype=complex)
    sigma = np.zeros((6, 6), dtype=complex)
    for k in range(K + 1):
        if k:
            H = step @ H
        sigma += math.exp(logw[k]) * (H @ H.conj().T)
    sigma = 0.5 * (sigma + sigma.conj().T)
    return CovarianceMatrix(sigma, float(t), float(gamma))
