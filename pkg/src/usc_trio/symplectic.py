"""6x6 symplectic matrices in the ladder basis (a1, a1+, a2, a2+, a3, a3+).

A unitary U is represented by the matrix S with U^+ A U = S A, where A is
the column of ladder operators (Heisenberg picture). Under rho -> U rho U^+
the covariance matrix maps as sigma -> S sigma S^+. Every matrix built here
satisfies

* det S = 1,
* S^+ J S = J with i J = (+) [[0, 1], [-1, 0]],
* the reality pattern S[2j+1, 2k+1] = conj(S[2j, 2k]) and
  S[2j+1, 2k] = conj(S[2j, 2k+1]) (0-based).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import expm

from .model import NormalModeData, SystemParams

_K2 = np.array([[0.0, 1.0], [-1.0, 0.0]])

#: Symplectic form J of the ladder basis: i J is the direct sum of [[0, 1], [-1, 0]].
SYMPLECTIC_FORM = -1j * np.kron(np.eye(3), _K2)

#: Swap of a_j and a_j^+ inside every mode pair.
PAIR_SWAP = np.kron(np.eye(3), np.array([[0.0, 1.0], [1.0, 0.0]]))


class SymplecticError(ValueError):
    """A matrix failed one of the symplectic invariants."""


def _rotation_block(c: float, s: float, ratio: float) -> np.ndarray:
    """4x4 ladder block for x_k -> c x_k + s x_l, x_l -> -s x_k + c x_l.

    ``ratio`` is sqrt(w_k / w_l).
    """
    P = 0.5 * (ratio + 1.0 / ratio) * s
    Q = 0.5 * (ratio - 1.0 / ratio) * s
    return np.array(
        [
            [c, 0.0, P, Q],
            [0.0, c, Q, P],
            [-P, Q, c, 0.0],
            [Q, -P, 0.0, c],
        ],
        dtype=complex,
    )


def rotation_12(z: float, Rratio: float) -> np.ndarray:
    """Ladder form of exp(i z J3), mixing modes 1 and 2.

    Args:
        z: rotation angle.
        Rratio: sqrt(w1 / w2).
    """
    if Rratio <= 0:
        raise ValueError("Rratio must be positive")
    S = np.eye(6, dtype=complex)
    S[:4, :4] = _rotation_block(math.cos(z), math.sin(z), Rratio)
    return S


def _ladder_transform(omegas) -> np.ndarray:
    """T with A = T X, X = (x1, p1, x2, p2, x3, p3)."""
    T = np.zeros((6, 6), dtype=complex)
    for j, w in enumerate(omegas):
        n = 1.0 / math.sqrt(2.0 * w)
        T[2 * j, 2 * j : 2 * j + 2] = (w * n, 1j * n)
        T[2 * j + 1, 2 * j : 2 * j + 2] = (w * n, -1j * n)
    return T


def ladder_image(linear_xp: np.ndarray, omegas) -> np.ndarray:
    """Ladder-basis matrix of a linear map acting on (x1, p1, x2, p2, x3, p3)."""
    T = _ladder_transform(omegas)
    return T @ linear_xp @ np.linalg.inv(T)


def point_rotation(O: np.ndarray, omegas) -> np.ndarray:
    """Ladder-basis image of x -> O x, p -> O p for a 3x3 orthogonal O."""
    return ladder_image(np.kron(O, np.eye(2)), omegas)


def rotation_13_generator(Rtilde: float) -> np.ndarray:
    """Ladder-basis generator G with rotation_13(beta) = expm(beta G)."""
    if Rtilde <= 0:
        raise ValueError("Rtilde must be positive")
    dO = np.array([[0.0, 0.0, -1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    # only the ratio w3 / w1 enters
    return point_rotation(dO, (1.0, 1.0, Rtilde ** 2))


def rotation_13(beta: float, Rtilde: float) -> np.ndarray:
    """Ladder form of exp(i beta J2), mixing modes 1 and 3.

    Args:
        beta: rotation angle.
        Rtilde: sqrt(w3 / w1).
    """
    S = expm(beta * rotation_13_generator(Rtilde))
    return _enforce_reality(S)


def rotation_13_as_printed(beta: float, Rtilde: float) -> np.ndarray:
    """Entry-by-entry transcription of the published 1-3 rotation matrix.

    The published matrix carries a stray 1 at row 6, column 5 (1-based). It is
    kept here only as a negative control for the invariant checks.
    """
    c, s = math.cos(beta), math.sin(beta)
    P = 0.5 * (Rtilde + 1.0 / Rtilde) * s
    Q = 0.5 * (Rtilde - 1.0 / Rtilde) * s
    return np.array(
        [
            [c, 0, 0, 0, -P, Q],
            [0, c, 0, 0, Q, -P],
            [0, 0, 1, 0, 0, 0],
            [0, 0, 0, 1, 0, 0],
            [P, Q, 0, 0, c, 0],
            [Q, P, 0, 0, 1, c],
        ],
        dtype=complex,
    )


def squeeze_123(r1: float, r2: float, r3: float) -> np.ndarray:
    S = np.zeros((6, 6), dtype=complex)
    for j, r in enumerate((r1, r2, r3)):
        c, s = math.cosh(r), math.sinh(r)
        S[2 * j : 2 * j + 2, 2 * j : 2 * j + 2] = ((c, s), (s, c))
    return S


def mode_phase_diag(lam, theta: float) -> np.ndarray:
    """diag(exp(i lambda_n theta)); with theta = k / gamma this is the free-evolution factor."""
    return np.diag(np.exp(1j * np.asarray(lam, dtype=float) * theta))


def signed_frequencies(Omega) -> np.ndarray:
    """(-O1, +O1, -O2, +O2, -O3, +O3)."""
    Omega = np.asarray(Omega, dtype=float)
    return np.column_stack([-Omega, Omega]).ravel()


def _enforce_reality(S: np.ndarray) -> np.ndarray:
    """Average S with its reality-mirrored copy to remove expm round-off asymmetry."""
    mirrored = PAIR_SWAP @ S.conj() @ PAIR_SWAP
    return 0.5 * (S + mirrored)


def frequency_ratios(params: SystemParams):
    """(sqrt(w1/w2), sqrt(w3/w1))."""
    return math.sqrt(params.omega1 / params.omega2), math.sqrt(params.omega3 / params.omega1)


def compose_A(mode_data: NormalModeData, params: SystemParams) -> np.ndarray:
    """Left factor A = S12(gamma) S13(beta) S12(alpha) S123(-r) of the evolution.

    The symplectic image of exp(-i k H / gamma) is A D(k) A^-1.
    """
    alpha, beta, gamma = mode_data.euler
    R, Rt = frequency_ratios(params)
    r = mode_data.r
    return rotation_12(gamma, R) @ rotation_13(beta, Rt) @ rotation_12(alpha, R) @ squeeze_123(-r[0], -r[1], -r[2])


def compose_A_inverse(mode_data: NormalModeData, params: SystemParams) -> np.ndarray:
    """S123(r) S12(-alpha) S13(-beta) S12(-gamma)."""
    alpha, beta, gamma = mode_data.euler
    R, Rt = frequency_ratios(params)
    r = mode_data.r
    return squeeze_123(*r) @ rotation_12(-alpha, R) @ rotation_13(-beta, Rt) @ rotation_12(-gamma, R)


def heisenberg_generator(params: SystemParams) -> np.ndarray:
    """Ladder-basis generator G of the free dynamics, built straight from V.

    The symplectic image of exp(-i theta H) is expm(theta G). It does not use
    the normal-mode factorisation and serves as an independent route.
    """
    V = params.potential_matrix()
    K = np.zeros((6, 6))
    for i in range(3):
        K[2 * i, 2 * i + 1] = 1.0  # dx/dt = p
        for j in range(3):
            K[2 * i + 1, 2 * j] = -V[i, j]  # dp/dt = -V x
    return ladder_image(K, params.omegas)


def residuals(S: np.ndarray) -> dict:
    """Max-norm residuals of the three invariants.

    The symplectic-condition residual is relative to ``||S||_max^2``.
    """
    scale = max(float(np.abs(S).max()) ** 2, 1.0)
    mirrored = PAIR_SWAP @ S.conj() @ PAIR_SWAP
    return {
        "det": abs(np.linalg.det(S) - 1.0),
        "form": float(np.abs(S.conj().T @ SYMPLECTIC_FORM @ S - SYMPLECTIC_FORM).max()) / scale,
        "reality": float(np.abs(S - mirrored).max()),
    }


def commutator_residual(S: np.ndarray) -> float:
    """Max-norm of S J S^T - J, relative to ``||S||_max^2``.

    This is the condition that S A keeps the canonical commutators of A. It
    coincides with S^+ J S = J for real S and also covers complex factors
    such as the free-evolution phases ``mode_phase_diag``.
    """
    scale = max(float(np.abs(S).max()) ** 2, 1.0)
    return float(np.abs(S @ SYMPLECTIC_FORM @ S.T - SYMPLECTIC_FORM).max()) / scale


def is_symplectic(S: np.ndarray, tol: float = 1e-10) -> bool:
    return all(v <= tol for v in residuals(S).values())


def check_symplectic(S: np.ndarray, tol: float = 1e-10) -> None:
    res = residuals(S)
    bad = {k: v for k, v in res.items() if v > tol}
    if bad:
        raise SymplecticError(f"symplectic invariants violated: {bad}")
