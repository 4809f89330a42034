"""Facet-wise stabilizability checks ``L_j A_i R_j <= 0`` with ``L_j R_j > 0``.

For each controlled coordinate ``j`` the row vector ``L_j`` selects ``k_j y_j``
and ``R_j`` is a hand-built direction; the pair certifies that both modes can
push the trajectory back across facet ``j``.  Only the explicit pairs for the
Ćuk CCM model are constructed, no search is attempted.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .controller import PolytopeSpec
from .converter import SubsystemModel

# Relative slack for the non-strict inequality (marginally stable directions).
REL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class CertificatePair:
    j: int
    L: np.ndarray
    R: np.ndarray
    r: float

    @property
    def LR(self):
        return float(self.L @ self.R)


@dataclass(frozen=True)
class CertificateReport:
    j: int
    LR: float
    LA1R: float
    LA2R: float
    passed: bool

    def to_dict(self):
        return {
            "j": self.j,
            "LR": self.LR,
            "LA1R": self.LA1R,
            "LA2R": self.LA2R,
            "pass": self.passed,
        }


def certificate_pair(j, k_j):
    """The explicit ``(L_j, R_j)`` for coordinate ``j`` with coefficient ``k_j``."""
    L = np.zeros(4)
    if j == 1:
        r = 1.0
        R = np.array([r / k_j, 0.0, r, 0.0])
    elif j == 2:
        r = float(np.sign(k_j))
        R = np.array([0.0, r, -r, -r])
    elif j == 3:
        r = 1.0
        R = np.array([r, -r, r / k_j, 0.0])
    elif j == 4:
        r = float(np.sign(k_j))
        R = np.array([0.0, r, 0.0, r])
    else:
        raise ValueError(f"no certificate construction for index {j!r}")
    L[j - 1] = k_j
    return CertificatePair(j=j, L=L, R=R, r=r)


def explicit_certificates(spec: PolytopeSpec):
    """Closed-form ``(L_j, R_j)`` pairs, one per controlled index, in index order."""
    return [certificate_pair(j, kj) for j, kj in zip(spec.J, spec.k)]


def verify_certificate(pair: CertificatePair, sub1: SubsystemModel, sub2: SubsystemModel):
    scale = max(np.abs(sub1.A).max(), np.abs(sub2.A).max())
    tol = REL_TOL * scale
    LR = pair.LR
    LA1R = float(pair.L @ sub1.A @ pair.R)
    LA2R = float(pair.L @ sub2.A @ pair.R)
    passed = LR > 0 and LA1R <= tol and LA2R <= tol
    return CertificateReport(j=pair.j, LR=LR, LA1R=LA1R, LA2R=LA2R, passed=bool(passed))


def verify_all(spec: PolytopeSpec, sub1: SubsystemModel, sub2: SubsystemModel):
    return [verify_certificate(pair, sub1, sub2) for pair in explicit_certificates(spec)]
