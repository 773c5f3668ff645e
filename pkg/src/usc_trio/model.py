"""Three bilinearly coupled oscillators: parameters and normal-mode data.

Units are hbar = 1 and unit masses. The potential matrix is

    V = [[w1^2, J12, J13],
         [J12, w2^2, J23],
         [J13, J23, w3^2]]

and the Hamiltonian is H = P.P/2 + X^T V X / 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

Triple = Tuple[float, float, float]

#: Two squared normal frequencies closer than this (relative to ||V||_max)
#: are treated as degenerate.
DEGENERACY_TOL = 1e-12

#: Slack allowed on p^3 - q^2 before the cubic is declared to have complex roots.
_DISCRIMINANT_TOL = 1e-9


class ModelError(ValueError):
    """Raised for parameter sets outside the bound-state manifold."""


class NumericDomainError(ArithmeticError):
    """Raised when the trigonometric cubic solution leaves its real domain."""


@dataclass(frozen=True)
class SystemParams:
    """Physical parameters of the three-oscillator system.

    ``gamma`` is the Milburn parameter; ``1/gamma`` is the decoherence rate.
    With ``schrodinger_limit`` set, ``gamma`` is ignored and the dynamics is
    the unitary gamma -> infinity limit.
    """

    omega1: float
    omega2: float
    omega3: float
    J12: float = 0.0
    J13: float = 0.0
    J23: float = 0.0
    gamma: float = 1.0
    schrodinger_limit: bool = False

    def __post_init__(self):
        for name in ("omega1", "omega2", "omega3"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ModelError(f"{name} must be a positive finite number, got {value!r}")
        for name in ("J12", "J13", "J23"):
            if not math.isfinite(getattr(self, name)):
                raise ModelError(f"{name} must be finite")
        if not self.schrodinger_limit and not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ModelError(f"gamma must be positive unless schrodinger_limit is set, got {self.gamma!r}")

    @property
    def omegas(self) -> np.ndarray:
        return np.array([self.omega1, self.omega2, self.omega3])

    @property
    def couplings(self) -> np.ndarray:
        """Couplings in the order (J12, J13, J23)."""
        return np.array([self.J12, self.J13, self.J23])

    def potential_matrix(self) -> np.ndarray:
        w2 = self.omegas ** 2
        return np.array(
            [
                [w2[0], self.J12, self.J13],
                [self.J12, w2[1], self.J23],
                [self.J13, self.J23, w2[2]],
            ]
        )

    @classmethod
    def isotropic(cls, omega_r: float, J: float, gamma: float = 1.0, **kwargs) -> "SystemParams":
        return cls(omega_r, omega_r, omega_r, J, J, J, gamma=gamma, **kwargs)


@dataclass(frozen=True)
class NormalModeData:
    """Everything the symplectic factorisation needs about the normal modes.

    Attributes:
        Omega: normal frequencies in the labelling of the trigonometric cubic
            (``Omega[0]`` is the largest, ``Omega[1]`` the smallest).
        euler: z-y-z angles ``(alpha, beta, gamma)`` with
            ``mode_matrix.T == Rz(alpha) @ Ry(beta) @ Rz(gamma)``.
        mode_matrix: proper rotation whose k-th column is the normal-mode
            direction of ``Omega[k]``.
        r: squeeze parameters ``0.5 * ln(Omega_j / omega_j)``.
        g: ladder-form couplings ``(g12, g13, g23)``.
        omega_tilde, g_frak: diagonal and pair-creation coefficients of the
            rotated Hamiltonian written in the bare ladder operators.
        degenerate: True when two normal frequencies coincide, in which case
            the angles are one deterministic choice among many.
    """

    Omega: np.ndarray
    euler: Triple
    mode_matrix: np.ndarray
    r: np.ndarray
    g: np.ndarray
    omega_tilde: np.ndarray
    g_frak: np.ndarray
    degenerate: bool = field(default=False)


def leading_minors(params: SystemParams) -> Triple:
    V = params.potential_matrix()
    return (V[0, 0], V[0, 0] * V[1, 1] - V[0, 1] ** 2, float(np.linalg.det(V)))


def validate_bound_state(params: SystemParams) -> bool:
    """Sylvester's criterion: all leading principal minors of V strictly positive."""
    return all(m > 0 for m in leading_minors(params))


def require_bound_state(params: SystemParams) -> None:
    if not validate_bound_state(params):
        m = leading_minors(params)
        raise ModelError(
            "parameters lie outside the bound-state manifold "
            f"(leading minors {m[0]:.6g}, {m[1]:.6g}, {m[2]:.6g})"
        )


def cubic_coefficients(params: SystemParams) -> Tuple[float, float, float, float, float]:
    """Return ``(varpi, c1, c0, p, q)`` of the characteristic cubic of V.

    ``c0`` equals ``-det V``; the eigenvalues are
    ``(varpi + 2 sqrt(p) cos(Phi + shift)) / 3``.
    """
    w2 = params.omegas ** 2
    J12, J13, J23 = params.J12, params.J13, params.J23
    varpi = float(w2.sum())
    c1 = float(w2[0] * w2[1] + w2[0] * w2[2] + w2[1] * w2[2] - (J12 ** 2 + J13 ** 2 + J23 ** 2))
    # c0 = -det V; note the minus sign on the triple-coupling product
    c0 = float(
        w2[0] * J23 ** 2 + w2[1] * J13 ** 2 + w2[2] * J12 ** 2
        - w2[0] * w2[1] * w2[2]
        - 2.0 * J12 * J13 * J23
    )
    p = varpi ** 2 - 3.0 * c1
    q = -13.5 * c0 + varpi ** 3 - 4.5 * c1 * varpi
    return varpi, c1, c0, p, q


def normal_frequencies(params: SystemParams) -> np.ndarray:
    """Normal frequencies from the closed trigonometric solution of the cubic.

    The labelling is the one produced by the three cosine branches, so
    ``Omega[0] >= Omega[2] >= Omega[1]``.

    Raises:
        NumericDomainError: if the cubic has complex roots or a root is not
            positive.
    """
    varpi, _, _, p, q = cubic_coefficients(params)
    scale = max(abs(varpi), 1.0)
    disc = p ** 3 - q ** 2
    if disc < -_DISCRIMINANT_TOL * scale ** 6:
        raise NumericDomainError(f"p^3 - q^2 = {disc:.3e} < 0: complex normal frequencies")
    p = max(p, 0.0)
    phi = math.atan2(math.sqrt(max(disc, 0.0)), q) / 3.0
    sp = math.sqrt(p)
    third = 2.0 * math.pi / 3.0
    sq = np.array(
        [
            (varpi + 2.0 * sp * math.cos(phi)) / 3.0,
            (varpi + 2.0 * sp * math.cos(phi + third)) / 3.0,
            (varpi + 2.0 * sp * math.cos(phi - third)) / 3.0,
        ]
    )
    sq = _deflate_pair(params.potential_matrix(), sq)
    if np.any(sq <= 0):
        raise NumericDomainError(f"non-positive squared normal frequency {sq.min():.3e}")
    return np.sqrt(sq)


def _deflate_pair(V: np.ndarray, sq: np.ndarray) -> np.ndarray:
    """Sharpen the two closest cubic roots, keeping their labels.

    Near a double root the cubic only fixes the roots to about sqrt(eps).
    The best separated root is accurate, so its eigenvector is formed from
    a cross product, V is projected on the orthogonal plane and the pair is
    read from the 2x2 closed form ``mean -+ hypot``.
    """
    gaps = [min(abs(sq[k] - sq[j]) for j in range(3) if j != k) for k in range(3)]
    k = int(np.argmax(gaps))
    M = V - sq[k] * np.eye(3)
    crosses = [np.cross(M[0], M[1]), np.cross(M[0], M[2]), np.cross(M[1], M[2])]
    v = max(crosses, key=np.linalg.norm)
    norm = np.linalg.norm(v)
    if norm <= 1e-300 or gaps[k] <= 1e-14 * max(abs(sq).max(), 1.0):
        return sq  # all three coincide
    v = v / norm
    e = np.zeros(3)
    e[int(np.argmin(np.abs(v)))] = 1.0
    u1 = e - (e @ v) * v
    u1 /= np.linalg.norm(u1)
    Q = np.column_stack([u1, np.cross(v, u1)])
    W = Q.T @ V @ Q
    mean = 0.5 * (W[0, 0] + W[1, 1])
    half = math.hypot(0.5 * (W[0, 0] - W[1, 1]), W[0, 1])
    out = sq.copy()
    out[k] = float(v @ V @ v)
    lo, hi = sorted(j for j in range(3) if j != k)
    if sq[lo] <= sq[hi]:
        out[lo], out[hi] = mean - half, mean + half
    else:
        out[lo], out[hi] = mean + half, mean - half
    return out


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    return v if v[k] > 0 else -v


def _subspace_basis(P: np.ndarray, size: int) -> np.ndarray:
    """Deterministic orthonormal basis of the range of projector ``P``.

    Seeds are the columns of ``P`` taken in order of decreasing norm
    (largest-component pivot), then Gram-Schmidt orthogonalised.
    """
    order = sorted(range(3), key=lambda i: (-round(float(np.linalg.norm(P[:, i])), 12), i))
    basis = []
    for i in order:
        v = P[:, i].copy()
        for b in basis:
            v -= (b @ v) * b
        n = np.linalg.norm(v)
        if n > 1e-6:
            basis.append(_canonical_sign(v / n))
        if len(basis) == size:
            break
    return np.column_stack(basis)


def mode_matrix(params: SystemParams, Omega: np.ndarray) -> Tuple[np.ndarray, bool]:
    """Orthonormal eigenvectors of V, columns ordered to match ``Omega``.

    Returns the proper rotation and a flag telling whether a degenerate
    eigenspace had to be given an arbitrary (but deterministic) basis.
    """
    V = params.potential_matrix()
    evals, evecs = np.linalg.eigh(V)
    scale = max(float(np.abs(V).max()), 1.0)
    target = Omega ** 2

    # group the eigh output into clusters of (numerically) equal eigenvalues
    clusters = [[0]]
    for i in range(1, 3):
        if abs(evals[i] - evals[clusters[-1][-1]]) <= DEGENERACY_TOL * scale:
            clusters[-1].append(i)
        else:
            clusters.append([i])
    degenerate = len(clusters) < 3

    columns = np.empty((3, 3))
    used = set()
    for cl in clusters:
        center = evals[cl].mean()
        labels = sorted(
            (k for k in range(3) if k not in used),
            key=lambda k: abs(target[k] - center),
        )[: len(cl)]
        labels.sort()
        used.update(labels)
        if len(cl) == 1:
            columns[:, labels[0]] = _canonical_sign(evecs[:, cl[0]])
        else:
            block = evecs[:, cl]
            basis = _subspace_basis(block @ block.T, len(cl))
            for j, k in enumerate(labels):
                columns[:, k] = basis[:, j]

    if np.linalg.det(columns) < 0:
        columns[:, 2] = -columns[:, 2]
    return columns, degenerate


def rot_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rot_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def zyz_angles(rot: np.ndarray, gimbal_tol: float = 1e-12) -> Triple:
    """Angles with ``rot == rot_z(alpha) @ rot_y(beta) @ rot_z(gamma)``, beta in [0, pi].

    At the gimbal points (sin beta ~ 0) gamma is set to zero and the whole
    z rotation is carried by alpha.
    """
    cb = float(np.clip(rot[2, 2], -1.0, 1.0))
    sb = math.hypot(rot[0, 2], rot[1, 2])
    beta = math.atan2(sb, cb)
    if sb > gimbal_tol:
        alpha = math.atan2(rot[1, 2], rot[0, 2])
        gamma = math.atan2(rot[2, 1], -rot[2, 0])
    elif cb > 0:
        alpha, gamma = math.atan2(rot[1, 0], rot[0, 0]), 0.0
    else:
        alpha, gamma = math.atan2(-rot[1, 0], -rot[0, 0]), 0.0
    return alpha, beta, gamma


def euler_to_mode_matrix(alpha: float, beta: float, gamma: float) -> np.ndarray:
    return (rot_z(alpha) @ rot_y(beta) @ rot_z(gamma)).T


def euler_angles(params: SystemParams, Omega: np.ndarray) -> Tuple[Triple, np.ndarray, bool]:
    """Euler angles, mode matrix and degeneracy flag for the given labelling.

    The rows of ``mode_matrix.T`` are the normal-mode directions; that
    transposed matrix is the one decomposed as z-y-z. With this choice the
    composite ``S12(gamma) S13(beta) S12(alpha)`` is the ladder-basis image of
    ``mode_matrix``.
    """
    R, degenerate = mode_matrix(params, Omega)
    return zyz_angles(R.T), R, degenerate


def euler_cos2_closed_forms(params: SystemParams, Omega: np.ndarray):
    """cos(2 alpha), cos(2 beta), cos(2 gamma) from the closed rational forms.

    Each entry is ``None`` when its denominator is below 1e-8 in magnitude.
    """
    w2 = params.omegas ** 2
    L = Omega ** 2
    J12, J13, J23 = params.J12, params.J13, params.J23

    def m12(x):
        return x * x - (w2[0] + w2[1]) * x + w2[0] * w2[1] - J12 ** 2

    def m13(x):
        return x * x - (w2[0] + w2[2]) * x + w2[0] * w2[2] - J13 ** 2

    def m23(x):
        return x * x - (w2[1] + w2[2]) * x + w2[1] * w2[2] - J23 ** 2

    def guarded(num, den):
        return None if abs(den) < 1e-8 else num / den

    cos2a = None
    d_a = m12(L[0]) * (L[2] - L[1])
    inner = guarded(m12(L[1]) * (L[0] - L[2]), d_a)
    if inner is not None and abs(inner + 1.0) >= 1e-8:
        cos2a = 2.0 / (inner + 1.0) - 1.0

    cos2b = guarded(m12(L[2]), (L[2] - L[0]) * (L[2] - L[1]))
    if cos2b is not None:
        cos2b = 2.0 * cos2b - 1.0

    cos2g = None
    inner = guarded(m13(L[2]), m23(L[2]))
    if inner is not None and abs(inner + 1.0) >= 1e-8:
        cos2g = 2.0 / (inner + 1.0) - 1.0
    return cos2a, cos2b, cos2g


def squeeze_parameters(params: SystemParams, Omega: np.ndarray) -> np.ndarray:
    return 0.5 * np.log(np.asarray(Omega) / params.omegas)


def coupling_strengths(params: SystemParams) -> np.ndarray:
    """Ladder-form couplings ``g_jk = J_jk / (2 sqrt(w_j w_k))`` as (g12, g13, g23)."""
    w = params.omegas
    return np.array(
        [
            params.J12 / (2.0 * math.sqrt(w[0] * w[1])),
            params.J13 / (2.0 * math.sqrt(w[0] * w[2])),
            params.J23 / (2.0 * math.sqrt(w[1] * w[2])),
        ]
    )


def quadrature_coefficients(params: SystemParams, Omega: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    w = params.omegas
    ratio = np.asarray(Omega) ** 2 / w
    return 0.5 * (ratio + w), 0.25 * (ratio - w)


def diagonalize(params: SystemParams) -> NormalModeData:
    """Full normal-mode analysis of a bound-state parameter set.

    Raises:
        ModelError: if the parameters are outside the bound-state manifold.
    """
    require_bound_state(params)
    Omega = normal_frequencies(params)
    euler, R, degenerate = euler_angles(params, Omega)
    omega_tilde, g_frak = quadrature_coefficients(params, Omega)
    return NormalModeData(
        Omega=Omega,
        euler=euler,
        mode_matrix=R,
        r=squeeze_parameters(params, Omega),
        g=coupling_strengths(params),
        omega_tilde=omega_tilde,
        g_frak=g_frak,
        degenerate=degenerate,
    )
