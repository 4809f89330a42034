"""Ćuk converter in continuous conduction mode.

State ordering is fixed everywhere as ``x = [i_L1, i_L2, v_C1, v_C2]``.
Subsystem 1 is the transistor-on mode, subsystem 2 the diode-conducting mode.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

STATE_NAMES = ("i_L1", "i_L2", "v_C1", "v_C2")


def _positive(name, value):
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise ParameterError(name, f"must be positive and finite, got {value!r}")
    return value


@dataclass(frozen=True)
class ConverterParams:
    """Circuit constants in SI units (H, F, ohm, V)."""

    L1: float
    L2: float
    C1: float
    C2: float
    R: float
    v_in: float

    def __post_init__(self):
        for name in ("L1", "L2", "C1", "C2", "R", "v_in"):
            object.__setattr__(self, name, _positive(name, getattr(self, name)))


@dataclass(frozen=True)
class OperatingSpec:
    """Desired duty ratio ``d`` (open interval (0, 1)) and switching period ``T_s``."""

    d: float
    T_s: float

    def __post_init__(self):
        d = float(self.d)
        if not (0.0 < d < 1.0):
            raise ParameterError("d", f"must lie strictly inside (0, 1), got {d!r}")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "T_s", _positive("T_s", self.T_s))

    @property
    def offset_ratio(self):
        """``B_shift2 / B_shift1`` = -d / (1 - d)."""
        return -self.d / (1.0 - self.d)


@dataclass(frozen=True, eq=False)
class SubsystemModel:
    """One affine CCM mode.

    ``A`` and ``B`` describe ``dx/dt = A x + B``; ``B_shift`` is the constant
    term in equilibrium-relative coordinates, ``dy/dt = A y + B_shift``.
    """

    index: int
    A: np.ndarray
    B: np.ndarray
    B_shift: np.ndarray = field(repr=False)

    def generator(self):
        """5x5 matrix ``[[A, B_shift], [0, 0]]`` driving ``(y, 1)``."""
        from .smallmat import augment

        return augment(self.A, self.B_shift)


@dataclass(frozen=True, eq=False)
class EquilibriumPoint:
    x_bar: np.ndarray
    ripple: np.ndarray


def system_matrices(p: ConverterParams):
    """Return ``(A1, A2, B)``; the input vector is shared by both modes."""
    A1 = np.array(
        [
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 1.0 / p.L2, 1.0 / p.L2],
            [0.0, -1.0 / p.C1, 0.0, 0.0],
            [0.0, -1.0 / p.C2, 0.0, -1.0 / (p.R * p.C2)],
        ]
    )
    A2 = np.array(
        [
            [0.0, 0.0, -1.0 / p.L1, 0.0],
            [0.0, 0.0, 0.0, 1.0 / p.L2],
            [1.0 / p.C1, 0.0, 0.0, 0.0],
            [0.0, -1.0 / p.C2, 0.0, -1.0 / (p.R * p.C2)],
        ]
    )
    B = np.array([p.v_in / p.L1, 0.0, 0.0, 0.0])
    return A1, A2, B


def equilibrium(p: ConverterParams, spec: OperatingSpec) -> EquilibriumPoint:
    """Steady-state averages and peak-to-peak ripple for the requested duty ratio."""
    d, v, R, T = spec.d, p.v_in, p.R, spec.T_s
    x_bar = np.array(
        [
            d * d * v / ((1.0 - d) ** 2 * R),
            d * v / ((1.0 - d) * R),
            v / (1.0 - d),
            -d * v / (1.0 - d),
        ]
    )
    ripple = np.array(
        [
            v * d * T / p.L1,
            v * d * T / p.L2,
            v * d * d * T / ((1.0 - d) * R * p.C1),
            d * v * T * T / (8.0 * p.L2 * p.C2),
        ]
    )
    return EquilibriumPoint(x_bar=x_bar, ripple=ripple)


def build_subsystems(p: ConverterParams, spec: OperatingSpec):
    A1, A2, B = system_matrices(p)
    x_bar = equilibrium(p, spec).x_bar
    sub1 = SubsystemModel(1, A1, B, A1 @ x_bar + B)
    sub2 = SubsystemModel(2, A2, B.copy(), A2 @ x_bar + B)
    return sub1, sub2


def shifted_offset(p: ConverterParams, spec: OperatingSpec):
    """Closed-form ``B_shift`` of subsystem 1 (subsystem 2 is ``offset_ratio`` times it)."""
    d, v = spec.d, p.v_in
    return np.array([v / p.L1, v / p.L2, -d * v / ((1.0 - d) * p.R * p.C1), 0.0])


def averaged_balance_residual(p: ConverterParams, spec: OperatingSpec):
    """Duty-weighted vector field at the equilibrium; zero when the model is consistent."""
    A1, A2, B = system_matrices(p)
    x_bar = equilibrium(p, spec).x_bar
    d = spec.d
    return d * (A1 @ x_bar + B) + (1.0 - d) * (A2 @ x_bar + B)


def row_scales(p: ConverterParams, spec: OperatingSpec):
    """Magnitude of the largest term entering each row of the averaged balance."""
    A1, A2, B = system_matrices(p)
    x_bar = equilibrium(p, spec).x_bar
    terms = np.concatenate(
        [np.abs(A1 * x_bar), np.abs(A2 * x_bar), np.abs(B)[:, None]], axis=1
    )
    return terms.max(axis=1)
