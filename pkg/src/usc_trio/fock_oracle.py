"""Brute-force Milburn dynamics in a truncated three-mode Fock space.

Nothing here relies on Gaussian structure: the Hamiltonian is built from
truncated ladder matrices, diagonalised once, and the Poisson average over
unitary kicks is closed exactly in the energy eigenbasis. The only
approximation is the Fock cutoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .model import SystemParams, coupling_strengths

MAX_DIMENSION = 4096


class FockConvergenceError(RuntimeError):
    """Observables moved by more than the tolerance when the cutoff was raised."""


@dataclass(frozen=True)
class FockConfig:
    cutoff: int = 8
    k_tail_epsilon: float = 1e-12
    convergence_tol: float = 1e-6

    def __post_init__(self):
        if self.cutoff < 2:
            raise ValueError("cutoff must be at least 2")
        if self.cutoff ** 3 > MAX_DIMENSION:
            raise ValueError(f"cutoff {self.cutoff} gives dimension {self.cutoff ** 3} > {MAX_DIMENSION}")
        for name in ("k_tail_epsilon", "convergence_tol"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in (0, 1)")

    @property
    def dim(self) -> int:
        return self.cutoff ** 3


class FockSpace:
    """Truncated ladder operators of three modes, each with ``d`` levels."""

    def __init__(self, d: int):
        self.d = d
        a = sp.diags(np.sqrt(np.arange(1, d, dtype=float)), 1, format="csr")
        eye = sp.identity(d, format="csr")
        factors = [[a, eye, eye], [eye, a, eye], [eye, eye, a]]
        self.a = [sp.kron(sp.kron(f[0], f[1]), f[2], format="csr") for f in factors]
        self.ad = [op.T.tocsr() for op in self.a]

    @property
    def dim(self) -> int:
        return self.d ** 3

    def ladder(self, n: int):
        """n-th entry of (a1, a1+, a2, a2+, a3, a3+)."""
        return self.a[n // 2] if n % 2 == 0 else self.ad[n // 2]

    @cached_property
    def normal_products(self):
        """Normal-ordered :A_n A_m^+: for all n, m (creation operators on the left)."""
        out = {}
        for n in range(6):
            for m in range(6):
                X = self.ladder(n)
                Y = self.ladder(m ^ 1)  # A_m^+ is the partner in the pair
                x_annihilates = n % 2 == 0
                y_creates = (m ^ 1) % 2 == 1
                out[n, m] = (Y @ X) if (x_annihilates and y_creates) else (X @ Y)
        return out


def build_hamiltonian(params: SystemParams, cfg: FockConfig, space: Optional[FockSpace] = None) -> np.ndarray:
    """Dense matrix of sum_j w_j (n_j + 1/2) + sum_{j<k} g_jk (a_j + a_j^+)(a_k + a_k^+)."""
    space = space or FockSpace(cfg.cutoff)
    if space.d != cfg.cutoff:
        raise ValueError("FockSpace cutoff does not match the configuration")
    w = params.omegas
    g12, g13, g23 = coupling_strengths(params)
    x = [space.a[j] + space.ad[j] for j in range(3)]
    H = sp.identity(space.dim, format="csr") * (0.5 * w.sum())
    for j in range(3):
        H = H + w[j] * (space.ad[j] @ space.a[j])
    for (j, k), g in zip(((0, 1), (0, 2), (1, 2)), (g12, g13, g23)):
        if g:
            H = H + g * (x[j] @ x[k])
    H = H.toarray()
    return 0.5 * (H + H.T)


class FockMilburn:
    """Milburn evolution of |000> under a fixed truncated Hamiltonian."""

    def __init__(self, H: np.ndarray, coeff_floor: float = 1e-13):
        self.H = np.asarray(H)
        self.energies, self.vectors = np.linalg.eigh(self.H)
        c = self.vectors[0, :].conj()  # <E_a|000>
        keep = np.abs(c) > coeff_floor * np.abs(c).max()
        self._E = self.energies[keep]
        self._U = self.vectors[:, keep]
        self._c = c[keep]

    def _rho_from_kernel(self, kernel: np.ndarray) -> np.ndarray:
        rho_e = np.outer(self._c, self._c.conj()) * kernel
        rho = self._U @ rho_e @ self._U.conj().T
        return 0.5 * (rho + rho.conj().T)

    def density(self, t: float, gamma: Optional[float]) -> np.ndarray:
        """rho(t); ``gamma=None`` gives unitary evolution."""
        if t < 0:
            raise ValueError("time must be non-negative")
        dE = self._E[:, None] - self._E[None, :]
        if gamma is None:
            return self._rho_from_kernel(np.exp(-1j * dE * t))
        x = dE / gamma
        # exp(gamma t (exp(-i dE / gamma) - 1))
        return self._rho_from_kernel(np.exp(gamma * t * (-2.0 * np.sin(0.5 * x) ** 2 - 1j * np.sin(x))))


def milburn_density(H: np.ndarray, t: float, gamma: Optional[float], cfg: Optional[FockConfig] = None) -> np.ndarray:
    """One-shot Milburn density matrix; use :class:`FockMilburn` for many times."""
    if cfg is not None and H.shape[0] != cfg.dim:
        raise ValueError("Hamiltonian dimension does not match the configuration")
    return FockMilburn(H).density(t, gamma)


def ground_state_energy(H: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(H)[0])


def _expect(rho: np.ndarray, op) -> complex:
    # Tr(rho X) for sparse X
    X = op.tocoo()
    return complex(np.sum(rho[X.col, X.row] * X.data))


def covariance_matrix(rho: np.ndarray, space: FockSpace) -> np.ndarray:
    """sigma_nm = <{A_n, A_m^+}>, using normal ordering so truncation edges do not leak in."""
    sigma = np.empty((6, 6), dtype=complex)
    for (n, m), op in space.normal_products.items():
        sigma[n, m] = 2.0 * _expect(rho, op) + (1.0 if n == m else 0.0)
    return 0.5 * (sigma + sigma.conj().T)


def mean_excitations(rho: np.ndarray, space: FockSpace) -> np.ndarray:
    return np.array([_expect(rho, space.ad[j] @ space.a[j]).real for j in range(3)])


def partial_trace_pair(rho: np.ndarray, d: int, keep) -> np.ndarray:
    """Reduced density matrix of the two kept modes (in increasing mode order)."""
    k, l = sorted(keep)
    drop = ({0, 1, 2} - {k, l}).pop()
    t = rho.reshape((d,) * 6)
    red = np.trace(t, axis1=drop, axis2=drop + 3)
    return red.reshape(d * d, d * d)


def log_negativity_two_mode(rho_pair: np.ndarray, d: int) -> float:
    """ln ||rho^{T_B}||_1 of a two-mode density matrix."""
    t = rho_pair.reshape(d, d, d, d).transpose(0, 3, 2, 1).reshape(d * d, d * d)
    ev = np.linalg.eigvalsh(0.5 * (t + t.conj().T))
    return max(0.0, math.log(np.abs(ev).sum()))


def log_negativity_one_vs_two(rho: np.ndarray, d: int, mode: int) -> float:
    t = rho.reshape((d,) * 6)
    axes = list(range(6))
    axes[mode], axes[mode + 3] = axes[mode + 3], axes[mode]
    pt = t.transpose(axes).reshape(d ** 3, d ** 3)
    ev = np.linalg.eigvalsh(0.5 * (pt + pt.conj().T))
    return max(0.0, math.log(np.abs(ev).sum()))


@dataclass(frozen=True)
class FockObservables:
    N: np.ndarray
    sigma: np.ndarray
    E: np.ndarray  # (ab, ac, bc)


def observables(rho: np.ndarray, cfg: FockConfig, space: Optional[FockSpace] = None) -> FockObservables:
    space = space or FockSpace(cfg.cutoff)
    d = cfg.cutoff
    E = np.array(
        [log_negativity_two_mode(partial_trace_pair(rho, d, pair), d) for pair in ((0, 1), (0, 2), (1, 2))]
    )
    return FockObservables(N=mean_excitations(rho, space), sigma=covariance_matrix(rho, space), E=E)


def wick_residual(rho: np.ndarray, space: FockSpace) -> np.ndarray:
    """<n_j^2> minus its Wick (Gaussian, zero-mean) value, for each mode."""
    out = np.empty(3)
    for j in range(3):
        a, ad = space.a[j], space.ad[j]
        n = _expect(rho, ad @ a).real
        n2 = _expect(rho, ad @ a @ ad @ a).real
        aa = _expect(rho, a @ a)
        out[j] = n2 - (n + 2.0 * n * n + abs(aa) ** 2)
    return out


def vacuum_density(d: int) -> np.ndarray:
    rho = np.zeros((d ** 3, d ** 3), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def two_mode_squeezed_density(s: float, d: int) -> np.ndarray:
    """Modes a, b in a two-mode squeezed vacuum (truncated and renormalised), c in vacuum."""
    psi = np.zeros((d, d, d), dtype=complex)
    lam = -math.tanh(s)
    for n in range(d):
        psi[n, n, 0] = lam ** n / math.cosh(s)
    psi = psi.ravel()
    psi /= np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def converged_observables(
    params: SystemParams, t: float, gamma: Optional[float], cfg: FockConfig
) -> FockObservables:
    """Observables at ``cfg.cutoff``, checked against cutoff + 2.

    Raises:
        FockConvergenceError: if N or E move by more than ``convergence_tol``.
    """
    results = []
    for d in (cfg.cutoff, cfg.cutoff + 2):
        c = FockConfig(d, cfg.k_tail_epsilon, cfg.convergence_tol)
        space = FockSpace(d)
        rho = FockMilburn(build_hamiltonian(params, c, space)).density(t, gamma)
        results.append(observables(rho, c, space))
    lo, hi = results
    change = max(np.abs(lo.N - hi.N).max(), np.abs(lo.E - hi.E).max())
    if change > cfg.convergence_tol:
        raise FockConvergenceError(
            f"observables changed by {change:.3e} between cutoffs {cfg.cutoff} and {cfg.cutoff + 2}"
        )
    return lo


def quadratic_unitary(generator_xp: np.ndarray, omegas, space: FockSpace) -> np.ndarray:
    """Truncated exp(-i h) for the quadratic h whose flow on (x1, p1, ..., p3) is ``generator_xp``.

    With U this unitary, U^+ A U reproduces the ladder image of
    ``expm(generator_xp)`` away from the truncation edge.
    """
    K = np.asarray(generator_xp, dtype=float)
    omega_form = np.kron(np.eye(3), np.array([[0.0, 1.0], [-1.0, 0.0]]))
    Hm = -omega_form @ K
    if np.abs(Hm - Hm.T).max() > 1e-12 * max(1.0, np.abs(Hm).max()):
        raise ValueError("generator is not Hamiltonian (its quadratic form is not symmetric)")
    quads = []
    for j, w in enumerate(omegas):
        a, ad = space.a[j], space.ad[j]
        quads.append(((a + ad) / math.sqrt(2.0 * w)).toarray())
        quads.append((1j * math.sqrt(0.5 * w) * (ad - a)).toarray())
    h = np.zeros((space.dim, space.dim), dtype=complex)
    for i in range(6):
        for k in range(6):
            if Hm[i, k]:
                h += 0.5 * Hm[i, k] * (quads[i] @ quads[k])
    h = 0.5 * (h + h.conj().T)
    E, V = np.linalg.eigh(h)
    return (V * np.exp(-1j * E)) @ V.conj().T


def conjugation_residual(U: np.ndarray, S: np.ndarray, space: FockSpace, max_total: int = 2) -> float:
    """max |<i| U^+ A_n U - sum_m S_nm A_m |j>| over basis states with at most ``max_total`` quanta."""
    d = space.d
    n = np.indices((d, d, d)).reshape(3, -1).sum(axis=0)
    low = np.nonzero(n <= max_total)[0]
    ladders = [space.ladder(m).toarray() for m in range(6)]
    worst = 0.0
    for row in range(6):
        lhs = U.conj().T @ ladders[row] @ U
        rhs = sum(S[row, m] * ladders[m] for m in range(6))
        worst = max(worst, float(np.abs((lhs - rhs)[np.ix_(low, low)]).max()))
    return worst
