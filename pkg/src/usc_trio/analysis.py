"""Physical quantities extracted from a ladder-basis covariance matrix.

Mode labels are ``a, b, c`` (indices 0, 1, 2); mode j occupies rows and
columns ``2j`` (a_j) and ``2j + 1`` (a_j^+).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np

MODES = ("a", "b", "c")
PAIRS = ("ab", "ac", "bc")
ONE_VS_TWO = ("a|bc", "b|ac", "c|ab")

#: Quantities that are non-negative in exact arithmetic are clamped to zero
#: when they come out at or above minus this value.
CLAMP_TOL = 1e-9

#: Mean excitations below minus this value mean the covariance is broken.
EXCITATION_TOL = 1e-6

#: Partially transposed symplectic eigenvalues this close to 1 are read as 1.
NU_SNAP = 1e-12

#: Seralian discriminants below this fraction of Delta^2 switch the minimal
#: eigenvalue to the Hermitian eigensolver.
DEGENERATE_DISC = 1e-6


class NonPhysicalError(ValueError):
    """The covariance matrix violates a physicality constraint beyond tolerance."""


def _matrix(sigma) -> np.ndarray:
    return np.asarray(getattr(sigma, "entries", sigma), dtype=complex)


def _mode_index(label: Union[str, int]) -> int:
    if isinstance(label, (int, np.integer)) and 0 <= label < 3:
        return int(label)
    if isinstance(label, str) and label in MODES:
        return MODES.index(label)
    raise ValueError(f"invalid mode label {label!r}; expected one of {MODES} or 0..2")


def _pair_indices(pair) -> Tuple[int, int]:
    if isinstance(pair, str):
        key = pair.replace("|", "")
        if len(key) != 2:
            raise ValueError(f"invalid mode pair {pair!r}")
        k, l = (_mode_index(ch) for ch in key)
    else:
        try:
            k, l = (_mode_index(x) for x in pair)
        except (TypeError, ValueError):
            raise ValueError(f"invalid mode pair {pair!r}") from None
    if k == l:
        raise ValueError(f"mode pair {pair!r} repeats a mode")
    return k, l


def _clamp(x: float, what: str) -> float:
    if x >= 0:
        return x
    if x >= -CLAMP_TOL:
        return 0.0
    raise NonPhysicalError(f"{what} = {x:.3e} is negative beyond tolerance")


def mean_excitations(sigma) -> np.ndarray:
    """<N_j> = (sigma[2j, 2j] - 1) / 2 for the three modes.

    Raises:
        NonPhysicalError: if any value is below -1e-6.
    """
    s = _matrix(sigma)
    N = 0.5 * (np.real(np.diag(s)[0::2]) - 1.0)
    if np.any(N < -EXCITATION_TOL):
        raise NonPhysicalError(f"negative mean excitation {N.min():.3e}")
    return np.where(N < 0, 0.0, N)


def mode_block(sigma, mode) -> np.ndarray:
    j = _mode_index(mode)
    s = _matrix(sigma)
    return s[2 * j : 2 * j + 2, 2 * j : 2 * j + 2]


def correlation_block(sigma, pair) -> np.ndarray:
    k, l = _pair_indices(pair)
    s = _matrix(sigma)
    return s[2 * k : 2 * k + 2, 2 * l : 2 * l + 2]


def reduce_two_mode(sigma, pair) -> np.ndarray:
    """4x4 covariance of the two-mode state left after tracing out the third mode."""
    k, l = _pair_indices(pair)
    idx = [2 * k, 2 * k + 1, 2 * l, 2 * l + 1]
    return _matrix(sigma)[np.ix_(idx, idx)]


def _pair_form(n_modes: int) -> np.ndarray:
    return np.kron(np.eye(n_modes), np.diag([1.0, -1.0]))


def symplectic_spectrum(sigma, hermitian_tol: float = 1e-8) -> np.ndarray:
    """Symplectic eigenvalues of a ladder-basis covariance matrix, descending.

    They are the moduli of the eigenvalues of diag(1, -1, 1, -1, ...) @ sigma,
    obtained here from the Hermitian matrix L^+ diag(1, -1, ...) L with
    sigma = L L^+.

    Raises:
        ValueError: for a non-square, odd-sized or non-Hermitian input.
        NonPhysicalError: if sigma is not positive definite.
    """
    s = _matrix(sigma)
    n2 = s.shape[0]
    if s.shape != (n2, n2) or n2 % 2:
        raise ValueError(f"expected an even square matrix, got shape {s.shape}")
    scale = max(float(np.abs(s).max()), 1.0)
    if np.abs(s - s.conj().T).max() > hermitian_tol * scale:
        raise ValueError("covariance matrix is not Hermitian")
    s = 0.5 * (s + s.conj().T)
    try:
        L = np.linalg.cholesky(s)
    except np.linalg.LinAlgError:
        raise NonPhysicalError("covariance matrix is not positive definite") from None
    ev = np.linalg.eigvalsh(L.conj().T @ _pair_form(n2 // 2) @ L)
    return np.sort(ev[ev.size // 2 :])[::-1]


def partial_transpose(sigma, mode) -> np.ndarray:
    """Transpose one mode: swap its a and a^+ rows and columns."""
    j = _mode_index(mode)
    s = _matrix(sigma).copy()
    n = s.shape[0] // 2
    if j >= n:
        raise ValueError(f"mode {mode!r} not present in a {n}-mode covariance")
    perm = np.arange(2 * n)
    perm[[2 * j, 2 * j + 1]] = perm[[2 * j + 1, 2 * j]]
    return s[np.ix_(perm, perm)]


def seralian(sigma, pair) -> float:
    """det sigma_k + det sigma_l - 2 det sigma_kl (partially transposed form)."""
    k, l = _pair_indices(pair)

    def det(m):
        return float(np.real(np.linalg.det(m)))

    return det(mode_block(sigma, k)) + det(mode_block(sigma, l)) - 2.0 * det(correlation_block(sigma, (k, l)))


def _snap(nu: float) -> float:
    return 1.0 if abs(nu - 1.0) <= NU_SNAP else nu


def log_negativity_pair(sigma, pair) -> Tuple[float, float]:
    """Logarithmic negativity of a mode pair and its minimal transposed eigenvalue.

    Returns:
        (E_kl, nu_min) with E_kl = max(0, -ln nu_min).

    Raises:
        NonPhysicalError: when Delta^2 - 4 det sigma^{kl} < -1e-9 or nu_min^2 <= 0.
    """
    k, l = _pair_indices(pair)
    delta = seralian(sigma, (k, l))
    det_full = float(np.real(np.linalg.det(reduce_two_mode(sigma, (k, l)))))
    disc = _clamp(delta * delta - 4.0 * det_full, "seralian discriminant")
    nu2 = 0.5 * (delta - math.sqrt(disc))
    if nu2 <= 0:
        raise NonPhysicalError(f"minimal transposed symplectic eigenvalue squared is {nu2:.3e}")
    if disc <= DEGENERATE_DISC * delta * delta:
        # near-equal roots: the square root amplifies rounding to ~sqrt(eps)
        nu = float(symplectic_spectrum(partial_transpose(reduce_two_mode(sigma, (k, l)), 0)).min())
    else:
        nu = math.sqrt(nu2)
    nu = _snap(nu)
    return max(0.0, -math.log(nu)), nu


def log_negativity_one_vs_two(sigma, mode) -> float:
    """Logarithmic negativity across the cut (mode | other two)."""
    nus = symplectic_spectrum(partial_transpose(sigma, mode))
    total = -sum(math.log(min(_snap(float(nu)), 1.0)) for nu in nus)
    return max(0.0, total)


@dataclass(frozen=True)
class ExcitationReport:
    """Mean excitations and their bipartite / tripartite geometric means.

    ``Nbi`` is ordered (a|b, a|c, b|c); ``Ntri`` and ``delta`` are ordered
    (a|bc, b|ac, c|ab).
    """

    N: np.ndarray
    Nbi: np.ndarray
    Ntri: np.ndarray
    delta: np.ndarray


@dataclass(frozen=True)
class EntanglementReport:
    """Pairwise and one-vs-two logarithmic negativities.

    ``E`` and ``nu_tilde`` are ordered (ab, ac, bc); ``E_one_two`` and
    ``monogamy_residual`` are ordered (a|bc, b|ac, c|ab).
    """

    E: np.ndarray
    nu_tilde: np.ndarray
    E_one_two: np.ndarray
    monogamy_residual: np.ndarray

    def pair(self, label: str) -> float:
        k, l = sorted(_pair_indices(label))
        return float(self.E[PAIRS.index(MODES[k] + MODES[l])])


def excitation_measures(N: Sequence[float]) -> ExcitationReport:
    Na, Nb, Nc = (float(x) for x in N)
    if min(Na, Nb, Nc) < 0:
        raise ValueError("mean excitations must be non-negative")
    ab, ac, bc = math.sqrt(Na * Nb), math.sqrt(Na * Nc), math.sqrt(Nb * Nc)
    a_bc, b_ac, c_ab = math.sqrt(Na * bc), math.sqrt(Nb * ac), math.sqrt(Nc * ab)
    return ExcitationReport(
        N=np.array([Na, Nb, Nc]),
        Nbi=np.array([ab, ac, bc]),
        Ntri=np.array([a_bc, b_ac, c_ab]),
        delta=np.array([ab + ac - a_bc, ab + bc - b_ac, ac + bc - c_ab]),
    )


def polygamy_check(report: ExcitationReport, tol: float = CLAMP_TOL) -> Tuple[bool, np.ndarray]:
    """True iff every trade-off N_k|l + N_k|m - N_k|lm is >= -tol."""
    return bool(np.all(report.delta >= -tol)), report.delta.copy()


def entanglement_report(sigma) -> EntanglementReport:
    E = np.empty(3)
    nu = np.empty(3)
    for i, pair in enumerate(PAIRS):
        E[i], nu[i] = log_negativity_pair(sigma, pair)
    E12 = np.array([log_negativity_one_vs_two(sigma, m) for m in MODES])
    Eab, Eac, Ebc = E
    residual = E12 - np.array([Eab + Eac, Eab + Ebc, Eac + Ebc])
    return EntanglementReport(E=E, nu_tilde=nu, E_one_two=E12, monogamy_residual=residual)


def permute_modes(sigma, perm: Sequence[int]) -> np.ndarray:
    """Covariance with mode ``perm[i]`` moved to slot ``i``."""
    idx = np.array([[2 * p, 2 * p + 1] for p in perm]).ravel()
    return _matrix(sigma)[np.ix_(idx, idx)]
