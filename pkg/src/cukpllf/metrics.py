"""Steady-state and transient figures of merit for a simulated trace."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .controller import PolytopeSpec, scaled_coordinates
from .converter import EquilibriumPoint
from .errors import InsufficientDataError

MIN_CYCLES = 3
DEFAULT_PERIODS = 10
V_TOL = 1e-6


@dataclass(frozen=True)
class Metrics:
    mean: list
    ripple_measured: list
    overshoot: list
    settle_time: float
    period_measured: float
    duty_measured: float
    switch_count: int
    nonswitching_crossings: int
    max_V_steady: float

    def to_dict(self):
        out = asdict(self)
        if not math.isfinite(out["settle_time"]):
            out["settle_time"] = None
        return out


def rising_edges(events):
    return np.array([e.t for e in events if e.q_before == 0 and e.q_after == 1])


def default_steady_window(trace, events, periods=DEFAULT_PERIODS):
    """Span from the ``periods``-th last rising edge of ``q`` to the end of the trace."""
    rises = rising_edges(events)
    if len(rises) < periods + 1:
        raise InsufficientDataError(
            f"need {periods + 1} rising edges for the default steady window, found {len(rises)}"
        )
    return float(trace.t[-1] - rises[-(periods + 1)])


def _duty(trace, events, t0, t1):
    q = int(trace.q[0])
    t_prev = t0
    on = 0.0
    for e in events:
        if not e.toggles:
            continue
        if e.t <= t0:
            q = e.q_after
            continue
        if e.t >= t1:
            break
        if q == 1:
            on += e.t - t_prev
        q, t_prev = e.q_after, e.t
    if q == 1:
        on += t1 - t_prev
    return on / (t1 - t0)


def _time_mean(t, x):
    span = t[-1] - t[0]
    if span <= 0:
        return x.mean(axis=0)
    seg = np.diff(t)[:, None]
    return ((x[1:] + x[:-1]) * 0.5 * seg).sum(axis=0) / span


def compute_metrics(
    trace,
    events,
    poly: PolytopeSpec,
    equil: EquilibriumPoint,
    steady_window=None,
    v_tol=V_TOL,
) -> Metrics:
    """Summarise a run.

    Steady-state quantities use the final ``steady_window`` seconds (default:
    the last ten switching periods); mean, duty and period are taken over the
    whole cycles between the first and last rising edge of ``q`` inside it.  Overshoot is the largest excursion past
    the measured steady-state band, on the side of ``x_bar`` away from the
    initial state.  ``settle_time`` is the first sample time after the last
    sample with ``V > 1 + v_tol`` (``inf`` if the run ends outside the box).
    """
    if len(trace) == 0:
        raise InsufficientDataError("empty trace")
    if steady_window is None:
        steady_window = default_steady_window(trace, events)
    t_end = float(trace.t[-1])
    t0 = t_end - steady_window
    if t0 < trace.t[0] - 1e-15:
        raise InsufficientDataError("steady window is longer than the trace")

    rises = rising_edges(events)
    rises = rises[rises >= t0]
    if len(rises) - 1 < MIN_CYCLES:
        raise InsufficientDataError(
            f"steady window holds {max(len(rises) - 1, 0)} full switching cycles, need {MIN_CYCLES}"
        )
    period = float(np.mean(np.diff(rises)))

    x_bar = equil.x_bar
    dev = trace.x - x_bar
    V = np.abs(scaled_coordinates(poly, dev)).max(axis=1)

    m = trace.t >= t0
    x_w = trace.x[m]
    ripple = x_w.max(axis=0) - x_w.min(axis=0)
    max_v = float(V[m].max())
    # Averages over whole cycles only, so a trailing partial cycle adds no bias.
    c0, c1 = rises[0], rises[-1]
    mc = (trace.t >= c0) & (trace.t <= c1)
    mean = _time_mean(trace.t[mc], trace.x[mc])

    direction = np.sign(x_bar - trace.x[0])
    excursion = np.where(direction != 0, (dev * direction).max(axis=0), np.abs(dev).max(axis=0))
    overshoot = np.maximum(excursion - ripple / 2.0, 0.0)

    bad = np.flatnonzero(V > 1.0 + v_tol)
    if bad.size == 0:
        settle = float(trace.t[0])
    elif bad[-1] + 1 < len(trace):
        settle = float(trace.t[bad[-1] + 1])
    else:
        settle = math.inf

    toggles = sum(1 for e in events if e.toggles)
    return Metrics(
        mean=mean.tolist(),
        ripple_measured=ripple.tolist(),
        overshoot=overshoot.tolist(),
        settle_time=settle,
        period_measured=period,
        duty_measured=float(_duty(trace, events, c0, c1)),
        switch_count=toggles,
        nonswitching_crossings=len(events) - toggles,
        max_V_steady=max_v,
    )
