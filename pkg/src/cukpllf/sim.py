"""Event-driven simulation of the switched converter.

Between switching instants the active subsystem is affine LTI, so the state is
advanced with the exact flow ``exp([[A, b], [0, 0]] dt) @ (y, 1)``.  Switching
instants are bracketed on a sub-step grid (``max_step / 32``), bisected down
to ``event_tol`` and then polished with a secant step on the trigger function,
which makes event times reproducible well below ``event_tol``.

Crossings of a facet on which the switching law prescribes no action (``q=1``
reaching a ``-1`` facet, ``q=0`` reaching a ``+1`` facet) are recorded as
events with ``q_before == q_after``.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .controller import PolytopeSpec, decide_many, initial_switch_state, scaled_coordinates
from .converter import ConverterParams, OperatingSpec, SubsystemModel, build_subsystems, equilibrium
from .errors import ChatterError, ParameterError
from .smallmat import eval_basis, mat_exp, mat_exp_many, taylor_basis

SUBSTEPS = 32
CHATTER_TOGGLES = 10


@dataclass(frozen=True)
class SimConfig:
    duration: float
    max_step: float
    sample_stride: float
    min_dwell: float = 0.0
    event_tol: float = 1e-12
    x0: tuple = (0.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        x0 = tuple(float(v) for v in self.x0)
        if len(x0) != 4 or not all(math.isfinite(v) for v in x0):
            raise ParameterError("x0", f"must be 4 finite numbers, got {self.x0!r}")
        object.__setattr__(self, "x0", x0)
        for name in ("duration", "max_step", "sample_stride", "min_dwell", "event_tol"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ParameterError(name, "must be finite")
            object.__setattr__(self, name, value)
        if self.duration <= 0:
            raise ParameterError("duration", "must be positive")
        if not (0 < self.event_tol < self.max_step):
            raise ParameterError("event_tol", "must satisfy 0 < event_tol < max_step")
        if self.max_step > self.duration:
            raise ParameterError("max_step", "must not exceed duration")
        if self.min_dwell < 0:
            raise ParameterError("min_dwell", "must be non-negative")
        if self.sample_stride <= 0:
            raise ParameterError("sample_stride", "must be positive")

    @classmethod
    def defaults(cls, T_s, duration=5e-3, x0=(0.0, 0.0, 0.0, 0.0), **overrides):
        """Settings scaled to the switching period ``T_s``."""
        values = dict(
            duration=duration,
            x0=x0,
            max_step=T_s / 50,
            event_tol=1e-12,
            min_dwell=T_s / 1000,
            sample_stride=T_s / 100,
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


class TraceSample(NamedTuple):
    t: float
    x: np.ndarray
    q: int
    V: float


@dataclass(frozen=True)
class SwitchEvent:
    t: float
    j: int
    facet: int
    q_before: int
    q_after: int

    @property
    def toggles(self):
        return self.q_before != self.q_after


@dataclass(eq=False)
class Trace:
    """Column storage for trace samples; iterating yields :class:`TraceSample`."""

    t: np.ndarray
    x: np.ndarray
    q: np.ndarray
    V: np.ndarray

    def __len__(self):
        return len(self.t)

    def __iter__(self):
        for i in range(len(self.t)):
            yield TraceSample(float(self.t[i]), self.x[i], int(self.q[i]), float(self.V[i]))

    def __getitem__(self, i):
        return TraceSample(float(self.t[i]), self.x[i], int(self.q[i]), float(self.V[i]))

    def window(self, t0, t1):
        m = (self.t >= t0) & (self.t <= t1)
        return Trace(self.t[m], self.x[m], self.q[m], self.V[m])


class Crossing(NamedTuple):
    t: float
    j: int
    facet: int
    switching: bool
    z: np.ndarray  # augmented state (y, 1) at t


def propagate_exact(model: SubsystemModel, y, dt):
    """Exact flow of ``dy/dt = A y + B_shift`` over ``dt``."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    z = np.append(np.asarray(y, dtype=float), 1.0)
    return (mat_exp(model.generator(), dt) @ z)[:4]


class _Flow:
    """Precomputed sub-step propagators for one subsystem and window length."""

    def __init__(self, model, window, substeps=SUBSTEPS, dwell=0.0):
        self.M = model.generator()
        self.window = window
        self.h = window / substeps
        self.stack = mat_exp_many(self.M, self.h * np.arange(1, substeps + 1))
        self.dwell = mat_exp(self.M, dwell)

    def at(self, z, dt):
        basis = taylor_basis(self.M, z, dt)
        if basis is None:
            return mat_exp(self.M, dt) @ z
        return eval_basis(basis, dt)

    def many(self, z, dts):
        return mat_exp_many(self.M, dts) @ z

    def rate(self, z):
        return self.M @ z


def _wrong_side(kv, q):
    # Facet on which the current switch position has no prescribed action.
    return kv <= -1.0 if q == 1 else kv >= 1.0


def _decide(kv, q):
    """Plain-float twin of :func:`controller.decide_scaled` for the hot loop."""
    pos, best = 0, -1.0
    for i, v in enumerate(kv):
        a = abs(v)
        if a > best:
            pos, best = i, a
    if best < 1.0:
        return q, pos
    return (0 if kv[pos] >= 1.0 else 1), pos


def _trigger_margin(kv, q):
    """Continuous function that is >= 0 exactly where the decision leaves ``q``."""
    pos = max(kv)
    neg = -min(kv)
    if q == 1:
        return min(pos - 1.0, pos - neg)
    return min(neg - 1.0, neg - pos)


class _Scanner:
    def __init__(self, spec: PolytopeSpec, event_tol):
        self.spec = spec
        self.cols = spec.columns
        self.k = spec.coeffs
        self.event_tol = event_tol

    def kv(self, z):
        return z[..., self.cols] * self.k

    def scan(self, flow: _Flow, z, q, track_wrong_side=True) -> Optional[Crossing]:
        Z = flow.stack @ z
        kv_all = self.kv(Z)
        if np.abs(kv_all).max() < 1.0:
            # Box never touched on the sub-step grid.
            return None
        kv0 = self.kv(z)
        hit = decide_many(kv_all, q) != q
        if track_wrong_side:
            wrong = _wrong_side(np.vstack([kv0, kv_all]), q)
            hit = hit | np.any(wrong[1:] & ~wrong[:-1], axis=1)
        for m in np.flatnonzero(hit).tolist():
            lo = m * flow.h
            hi = (m + 1) * flow.h
            z_lo = z if m == 0 else Z[m - 1]
            base = _wrong_side(self.kv(z_lo), q).tolist() if track_wrong_side else None
            found = self._locate(flow, q, lo, hi, z_lo, base)
            if found is not None:
                return found
        return None

    def _local(self, flow, z_lo, width):
        """Evaluators ``tau -> [k_j y_j]`` and ``tau -> z`` over the bracket."""
        basis = taylor_basis(flow.M, z_lo, width)
        if basis is None:
            def state(tau):
                return flow.at(z_lo, tau)

            return (lambda tau: self.kv(state(tau)).tolist()), state
        proj = basis[:, self.cols] * self.k
        orders = np.arange(len(proj))
        return (lambda tau: (tau**orders @ proj).tolist()), (lambda tau: tau**orders @ basis)

    @staticmethod
    def _classify(kv, q, base):
        """``(switching, position)`` if the trigger holds for ``kv`` else ``None``."""
        q_new, pos = _decide(kv, q)
        if q_new != q:
            return True, pos
        if base is not None:
            for i, v in enumerate(kv):
                if not base[i] and (v <= -1.0 if q == 1 else v >= 1.0):
                    return False, i
        return None

    def _locate(self, flow, q, lo, hi, z_lo, base):
        # Offsets below are relative to lo; the bracket is at most one sub-step.
        width = hi - lo
        kv_at, state_at = self._local(flow, z_lo, 2.0 * width)
        a, b = 0.0, width
        if self._classify(kv_at(b), q, base) is None:
            # Grid sample and local series disagree at rounding level: a
            # tangential touch of the facet, not a crossing.
            return None
        while b - a > self.event_tol:
            mid = 0.5 * (a + b)
            if self._classify(kv_at(mid), q, base) is not None:
                b = mid
            else:
                a = mid
        tau = self._polish(kv_at, q, a, b, base)
        kv = kv_at(tau)
        switching, pos = self._classify(kv, q, base)
        if switching and max(abs(v) for v in self.kv(z_lo)) < 1.0:
            # Entering from inside the box: facets reached within event_tol of
            # each other resolve to the smallest index.
            sign = 1.0 if q == 1 else -1.0
            ahead = kv_at(min(tau + self.event_tol, 2.0 * width))
            cands = [i for i, v in enumerate(ahead) if sign * v >= 1.0]
            if cands:
                pos = cands[0]
        facet = 1 if kv[pos] > 0 else -1
        return Crossing(lo + tau, self.spec.J[pos], facet, switching, state_at(tau))

    def _polish(self, kv_at, q, lo, hi, base):
        """Secant refinement inside ``[lo, hi]``; falls back to ``hi``."""
        kv_lo = kv_at(lo)
        kv_hi = kv_at(hi)
        cls = self._classify(kv_hi, q, base)
        if cls is None:
            return hi
        switching, pos = cls
        if switching:
            g_lo, g_hi = _trigger_margin(kv_lo, q), _trigger_margin(kv_hi, q)
        else:
            sign = -1.0 if q == 1 else 1.0
            g_lo, g_hi = sign * kv_lo[pos] - 1.0, sign * kv_hi[pos] - 1.0
        if not (g_lo < 0.0 <= g_hi) or g_hi == g_lo:
            return hi
        t = lo + (hi - lo) * (-g_lo) / (g_hi - g_lo)
        # Nudge forward until the trigger really holds (rounding in the root).
        step = (hi - lo) * 1e-9
        while t < hi:
            if self._classify(kv_at(t), q, base) is not None:
                return t
            t += step
            step *= 4.0
        return hi


def find_crossing(model: SubsystemModel, y, spec: PolytopeSpec, q, window, event_tol, track_wrong_side=False):
    """Earliest trigger of the switching law within ``(0, window]`` of flowing ``model`` from ``y``.

    Returns a :class:`Crossing` or ``None``.  With ``track_wrong_side`` the
    search also stops where a coordinate enters a facet that prescribes no
    switching for ``q`` (``Crossing.switching`` is then ``False``).
    """
    z = np.append(np.asarray(y, dtype=float), 1.0)
    flow = _Flow(model, window)
    return _Scanner(spec, event_tol).scan(flow, z, q, track_wrong_side)


class _Recorder:
    def __init__(self, spec, x_bar, stride, duration):
        self.spec = spec
        self.x_bar = x_bar
        grid = np.arange(int(math.floor(duration / stride + 1e-9)) + 1) * stride
        grid = grid[grid <= duration]
        if duration - grid[-1] > 1e-9 * stride:
            grid = np.append(grid, duration)
        self.grid = grid
        self.n_next = 0
        self.t, self.x, self.q = [], [], []

    def segment(self, flow, z, t0, t1, q):
        """Record grid samples in ``[t0, t1]`` along the flow that starts at ``t0``."""
        n1 = int(np.searchsorted(self.grid, t1, side="right"))
        if n1 <= self.n_next:
            return
        times = self.grid[self.n_next:n1]
        states = flow.many(z, np.maximum(times - t0, 0.0))[:, :4]
        self.t.extend(times)
        self.x.extend(states + self.x_bar)
        self.q.extend([q] * len(times))
        self.n_next = n1

    def point(self, t, y, q):
        self.t.append(t)
        self.x.append(y + self.x_bar)
        self.q.append(q)

    def finish(self):
        x = np.array(self.x).reshape(-1, 4)
        V = np.max(np.abs(scaled_coordinates(self.spec, x - self.x_bar)), axis=1)
        return Trace(np.array(self.t), x, np.array(self.q, dtype=int), V)


def run_simulation(p: ConverterParams, op: OperatingSpec, poly: PolytopeSpec, cfg: SimConfig):
    """Simulate the closed loop from ``cfg.x0`` over ``[0, cfg.duration]``.

    Returns ``(trace, events)``.  Raises :class:`ChatterError` if more than ten
    toggles fall inside one dwell window (``max(min_dwell, event_tol)``).
    """
    x_bar = equilibrium(p, op).x_bar
    subs = build_subsystems(p, op)
    flows = {
        1: _Flow(subs[0], cfg.max_step, dwell=cfg.min_dwell),
        0: _Flow(subs[1], cfg.max_step, dwell=cfg.min_dwell),
    }
    scanner = _Scanner(poly, cfg.event_tol)
    rec = _Recorder(poly, x_bar, cfg.sample_stride, cfg.duration)

    y0 = np.array(cfg.x0) - x_bar
    z = np.append(y0, 1.0)
    q = initial_switch_state(poly, y0)
    t = 0.0
    events = []
    toggles = deque()
    chatter_window = max(cfg.min_dwell, cfg.event_tol)
    last_toggle = -math.inf

    def toggle(t_ev, z_ev, q_old, q_new, j, facet):
        events.append(SwitchEvent(t_ev, j, facet, q_old, q_new))
        rec.point(t_ev, z_ev[:4], q_new)
        toggles.append(t_ev)
        while toggles and toggles[0] < t_ev - chatter_window:
            toggles.popleft()
        if len(toggles) > CHATTER_TOGGLES:
            raise ChatterError(t_ev, j, len(toggles), chatter_window)

    # Samples are filled in per inter-event segment, from the segment's start.
    seg_t, seg_z = 0.0, z
    while t < cfg.duration:
        flow = flows[q]
        dwell_end = last_toggle + cfg.min_dwell
        if t < dwell_end:
            if dwell_end < cfg.duration:
                z = flow.dwell @ z
                t = dwell_end
            else:
                z = flow.at(z, cfg.duration - t)
                t = cfg.duration
                break
            kv = scanner.kv(z).tolist()
            q_new, pos = _decide(kv, q)
            if q_new != q:
                rec.segment(flow, seg_z, seg_t, t, q)
                toggle(t, z, q, q_new, poly.J[pos], 1 if kv[pos] > 0 else -1)
                q, last_toggle = q_new, t
                seg_t, seg_z = t, z
            continue

        window = min(cfg.max_step, cfg.duration - t)
        if window < cfg.max_step:
            flow = _Flow(subs[0] if q == 1 else subs[1], window)
        hit = scanner.scan(flow, z, q)
        if hit is None:
            z = flow.stack[-1] @ z
            t = t + window if window == cfg.max_step else cfg.duration
            continue

        t = t + hit.t
        z = hit.z
        rec.segment(flows[q], seg_z, seg_t, t, q)
        if hit.switching:
            q_new = 1 - q
            toggle(t, z, q, q_new, hit.j, hit.facet)
            q, last_toggle = q_new, t
        else:
            events.append(SwitchEvent(t, hit.j, hit.facet, q, q))
            rec.point(t, z[:4], q)
        seg_t, seg_z = t, z

    rec.segment(flows[q], seg_z, seg_t, cfg.duration, q)
    return rec.finish(), events
