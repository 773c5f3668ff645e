"""Closed forms for the resonant, uniformly coupled trio (w1 = w2 = w3, J12 = J13 = J23).

Two sets of closed forms live here:

* the rational steady values and the weighted time traces built on
  ``ASYMMETRIC_WEIGHTS``, kept as regression fixtures;
* the permutation-symmetric forms (``SYMMETRIC_WEIGHTS``,
  :func:`iso_steady_symmetric`), which agree with the generic covariance
  pipeline and the Fock oracle. Because the Hamiltonian and the initial
  vacuum are invariant under any relabelling of the oscillators, all three
  populations coincide at every time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

from .model import SystemParams

#: (weight on the Omega_1 term, weight on the Omega_2 term) for modes 1, 2, 3.
ASYMMETRIC_WEIGHTS = ((24 / 50, 76 / 50), (1 / 50, 99 / 50), (3 / 2, 1 / 2))
SYMMETRIC_WEIGHTS = ((2 / 3, 4 / 3),) * 3


@dataclass(frozen=True)
class IsotropicParams:
    omega_r: float
    J: float
    gamma: float

    def __post_init__(self):
        if not self.omega_r > 0:
            raise ValueError("omega_r must be positive")
        if not (-0.5 * self.omega_r ** 2 < self.J < self.omega_r ** 2):
            raise ValueError(
                f"J = {self.J} outside the bound-state range (-omega_r^2/2, omega_r^2)"
            )
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")

    def system(self) -> SystemParams:
        return SystemParams.isotropic(self.omega_r, self.J, self.gamma)


def iso_frequencies(p: IsotropicParams) -> Tuple[float, float]:
    """(Omega_1, Omega_2) = (sqrt(w^2 + 2J), sqrt(w^2 - J)); Omega_3 = Omega_2."""
    w2 = p.omega_r ** 2
    return math.sqrt(w2 + 2.0 * p.J), math.sqrt(w2 - p.J)


def iso_squeeze(p: IsotropicParams) -> Tuple[float, float]:
    O1, O2 = iso_frequencies(p)
    return 0.5 * math.log(O1 / p.omega_r), 0.5 * math.log(O2 / p.omega_r)


def _relaxation(Omega: float, gamma: float, t: float) -> float:
    """1 - exp(-gamma t (1 - cos(2 Omega / gamma))) cos(gamma t sin(2 Omega / gamma))."""
    x = 2.0 * Omega / gamma
    damping = 2.0 * math.sin(0.5 * x) ** 2
    return 1.0 - math.exp(-gamma * t * damping) * math.cos(gamma * t * math.sin(x))


def _amplitude(s: float) -> float:
    return (math.cosh(s) * math.sinh(s)) ** 2


def iso_excitations(
    p: IsotropicParams, t: float, weights: Sequence[Tuple[float, float]] = ASYMMETRIC_WEIGHTS
) -> Tuple[float, float, float]:
    """Mean excitations at time t as weighted sums of two relaxing terms.

    Each population is ``w1 * cosh^2 s1 sinh^2 s1 * X(Omega_1) +
    w2 * cosh^2 s2 sinh^2 s2 * X(Omega_2)`` with ``X`` the Poisson relaxation
    factor. Pass ``SYMMETRIC_WEIGHTS`` for the values the covariance pipeline
    produces.
    """
    if t < 0:
        raise ValueError("time must be non-negative")
    O1, O2 = iso_frequencies(p)
    s1, s2 = iso_squeeze(p)
    x1 = _amplitude(s1) * _relaxation(O1, p.gamma, t)
    x2 = _amplitude(s2) * _relaxation(O2, p.gamma, t)
    return tuple(w1 * x1 + w2 * x2 for w1, w2 in weights)


def iso_steady(p: IsotropicParams) -> Tuple[float, float, float]:
    """Rational steady-state populations (independent of gamma)."""
    w2 = p.omega_r ** 2
    J = p.J
    den = w2 * (w2 + 2.0 * J) * (w2 - J)
    return (
        J * J * (43.0 * w2 + 14.0 * J) / (200.0 * den),
        J * J * (103.0 * w2 + 149.0 * J) / (800.0 * den),
        J * J * (13.0 * w2 - 10.0 * J) / (32.0 * den),
    )


def iso_steady_symmetric(p: IsotropicParams) -> float:
    """Common steady population of all three modes: J^2 / (4 (w^2 + 2J)(w^2 - J))."""
    w2 = p.omega_r ** 2
    return p.J ** 2 / (4.0 * (w2 + 2.0 * p.J) * (w2 - p.J))


def iso_t_steady(p: IsotropicParams, tol: float = 1e-15) -> float:
    """Relaxation time max_i 1 / (gamma (1 - cos(2 Omega_i / gamma))).

    Returns ``math.inf`` when a phase step 2 Omega_i / gamma is a multiple of
    2 pi, in which case that component never damps.
    """
    out = 0.0
    for Omega in iso_frequencies(p):
        rate = p.gamma * 2.0 * math.sin(Omega / p.gamma) ** 2
        if rate <= tol * p.gamma:
            return math.inf
        out = max(out, 1.0 / rate)
    return out
