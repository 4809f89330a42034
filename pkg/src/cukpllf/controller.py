"""Piecewise linear Lyapunov switching law.

``V(y) = max_{j in J} |k_j y_j|`` has the box ``|k_j y_j| <= 1`` as its unit
level set.  The transistor is turned off (``q = 0``) when a coordinate hits
its ``+1`` facet and turned on (``q = 1``) at a ``-1`` facet.  Inside the box
the switch position is held.

Indices ``j`` are 1-based throughout, matching the state names
``i_L1, i_L2, v_C1, v_C2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .converter import ConverterParams, OperatingSpec
from .errors import ParameterError

Q_ON = 1
Q_OFF = 0


@dataclass(frozen=True)
class PolytopeSpec:
    """Controlled indices ``J`` with coefficients ``k`` (same order) and ``rho``.

    Only structural properties are enforced here; sign and magnitude bounds of
    the coefficients are guaranteed by :func:`coefficients_from_spec`, while a
    hand-built spec may deliberately violate them (e.g. to exercise the
    certificate check).
    """

    J: tuple
    k: tuple
    rho: float

    def __post_init__(self):
        J = tuple(int(j) for j in self.J)
        k = tuple(float(v) for v in self.k)
        if len(J) != len(k):
            raise ValueError("J and k must have the same length")
        if not J or any(j not in (1, 2, 3, 4) for j in J) or len(set(J)) != len(J):
            raise ParameterError("J", f"must hold distinct indices from {{1,2,3,4}}, got {J}")
        if 1 not in J:
            raise ParameterError("J", "must contain index 1 (i_L1)")
        if any(not math.isfinite(v) or v == 0.0 for v in k):
            raise ParameterError("k", f"must be finite and nonzero, got {k}")
        if not math.isfinite(self.rho) or self.rho <= 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        order = sorted(range(len(J)), key=J.__getitem__)
        object.__setattr__(self, "J", tuple(J[i] for i in order))
        object.__setattr__(self, "k", tuple(k[i] for i in order))
        object.__setattr__(self, "rho", float(self.rho))

    @property
    def columns(self):
        """Zero-based state columns for ``J``."""
        return np.array(self.J) - 1

    @property
    def coeffs(self):
        return np.array(self.k)

    def coefficient(self, j):
        return self.k[self.J.index(j)]

    def as_dict(self):
        return {str(j): kj for j, kj in zip(self.J, self.k)}


def design_rho(p: ConverterParams, op: OperatingSpec):
    return op.d * p.v_in * op.T_s / 2.0


def coefficients_from_spec(
    p: ConverterParams,
    op: OperatingSpec,
    J,
    k2_fraction=0.0,
    k4_fraction=0.0,
) -> PolytopeSpec:
    """Build the polytope from the desired operating point.

    ``k1`` and ``k3`` follow directly from the ripple design; ``k2`` and
    ``k4`` only have strict upper bounds on their magnitude, so they are given
    as signed fractions of those bounds.
    """
    J = tuple(sorted(int(j) for j in J))
    if 1 not in J:
        raise ParameterError("J", "must contain index 1 (i_L1)")
    rho = design_rho(p, op)
    k = []
    for j in J:
        if j == 1:
            k.append(p.L1 / rho)
        elif j == 2:
            if not (abs(k2_fraction) < 1.0) or k2_fraction == 0.0:
                raise ParameterError("k2_fraction", f"must satisfy 0 < |f| < 1, got {k2_fraction}")
            k.append(k2_fraction * p.L2 / rho)
        elif j == 3:
            k.append(-(1.0 - op.d) * p.R * p.C1 / (op.d * rho))
        elif j == 4:
            if not (abs(k4_fraction) < 1.0) or k4_fraction == 0.0:
                raise ParameterError("k4_fraction", f"must satisfy 0 < |f| < 1, got {k4_fraction}")
            k.append(k4_fraction * 8.0 * p.L2 * p.C2 / (rho * op.T_s))
        else:
            raise ParameterError("J", f"contains unknown state index {j}")
    return PolytopeSpec(J=J, k=tuple(k), rho=rho)


def scaled_coordinates(spec: PolytopeSpec, y):
    """``k_j y_j`` for ``j in J``; works on a single state or a stack of states."""
    y = np.asarray(y, dtype=float)
    return y[..., spec.columns] * spec.coeffs


def lyapunov_value(spec: PolytopeSpec, y):
    return float(np.max(np.abs(scaled_coordinates(spec, y))))


def in_polytope(spec: PolytopeSpec, y):
    return lyapunov_value(spec, y) <= 1.0


def decide_scaled(kv, q):
    """Switching decision from precomputed ``k_j y_j`` values.

    Returns ``(q_new, position)`` where ``position`` indexes the dominant
    coordinate in ``kv`` (``None`` when nothing is violated).
    """
    mags = np.abs(kv)
    pos = int(np.argmax(mags))  # first maximum -> smallest index wins ties
    if mags[pos] < 1.0:
        return q, None
    return (Q_OFF if kv[pos] >= 1.0 else Q_ON), pos


def decide_many(kv, q):
    """Vectorised :func:`decide_scaled` over the leading axis of ``kv``."""
    kv = np.asarray(kv)
    mags = np.abs(kv)
    pos = np.argmax(mags, axis=-1)
    dom = np.take_along_axis(kv, pos[..., None], axis=-1)[..., 0]
    out = np.full(dom.shape, q, dtype=int)
    out[dom >= 1.0] = Q_OFF
    out[dom <= -1.0] = Q_ON
    return out


def switch_decide(spec: PolytopeSpec, q, y):
    """Apply the facet-triggered rule to switch position ``q`` at state ``y``.

    On ``q = 1`` a coordinate with ``k_j y_j >= 1`` turns the transistor off;
    on ``q = 0`` a coordinate with ``k_j y_j <= -1`` turns it on.  Outside the
    box both kinds of violation may coexist; the coordinate with the largest
    ``|k_j y_j|`` then decides (lowest index on ties).
    """
    if q not in (Q_OFF, Q_ON):
        raise ValueError(f"switch state must be 0 or 1, got {q!r}")
    q_new, _ = decide_scaled(scaled_coordinates(spec, y), q)
    return q_new


def dominant_violation(spec: PolytopeSpec, y):
    """``(j, k_j y_j)`` of the largest violation, or ``None`` inside the box."""
    kv = scaled_coordinates(spec, y)
    _, pos = decide_scaled(kv, Q_ON)
    if pos is None:
        return None
    return spec.J[pos], float(kv[pos])


def initial_switch_state(spec: PolytopeSpec, y0):
    """Start with the transistor on unless the dominant violation is on a +1 facet."""
    dom = dominant_violation(spec, y0)
    if dom is None:
        return Q_ON
    return Q_ON if dom[1] <= -1.0 else Q_OFF
