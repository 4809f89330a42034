"""Dense helpers for the fixed 4x4 / 5x5 matrices used by the converter model.

The subsystems are affine LTI, so the flow between two switching instants is
``exp([[A, b], [0, 0]] * t)`` applied to ``(y, 1)``.  Only dimensions 4 and 5
occur; anything else is rejected.
"""
from __future__ import annotations

import math

import numpy as np

SIZES = (4, 5)

# Taylor order for the scaled kernel; with ||M t / 2^s|| <= 0.5 the remainder
# is below 0.5**19 / 19! ~ 1.6e-23.
_TAYLOR_ORDER = 18
_SCALED_NORM = 0.5


def _check_square(M):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] not in SIZES:
        raise ValueError(f"expected a 4x4 or 5x5 matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def augment(A, b):
    """Stack an affine field ``A y + b`` into the 5x5 generator ``[[A, b], [0, 0]]``."""
    A = _check_square(A)
    b = np.asarray(b, dtype=float)
    if A.shape != (4, 4) or b.shape != (4,):
        raise ValueError("augment expects a 4x4 matrix and a length-4 vector")
    if not np.all(np.isfinite(b)):
        raise ValueError("offset vector has non-finite entries")
    M = np.zeros((5, 5))
    M[:4, :4] = A
    M[:4, 4] = b
    return M


def _scaling_power(norm):
    if norm <= _SCALED_NORM:
        return 0
    return max(0, int(math.ceil(math.log2(norm / _SCALED_NORM))))


def _taylor_squared(X, s):
    # X has shape (..., n, n) and is already divided by 2**s.
    n = X.shape[-1]
    result = np.zeros(X.shape)
    result[...] = np.eye(n)
    term = X
    result += term
    for k in range(2, _TAYLOR_ORDER + 1):
        term = term @ X / k
        result += term
        if np.abs(term).max() <= 1e-18 * np.abs(result).max():
            break
    for _ in range(s):
        result = result @ result
    return result


def taylor_basis(M, v, tau_max, tol=1e-20):
    """Vectors ``M^k v / k!`` needed to evaluate ``exp(M tau) v`` for ``tau <= tau_max``.

    Returns ``None`` when ``tau_max`` is too long for an unscaled series
    (``||M|| tau_max > 0.5``); callers then fall back to :func:`mat_exp`.
    """
    norm = np.abs(M).sum(axis=1).max() * tau_max
    if norm > _SCALED_NORM:
        return None
    basis = [np.asarray(v, dtype=float)]
    bound = 1.0
    k = 0
    while bound > tol:
        k += 1
        basis.append(M @ basis[-1] / k)
        bound *= norm / k
    return np.array(basis)


def eval_basis(basis, tau):
    """``sum_k tau^k (M^k v / k!)`` for a basis from :func:`taylor_basis`."""
    powers = tau ** np.arange(len(basis))
    return powers @ basis


def mat_exp(M, t=1.0):
    """Return ``exp(M * t)`` by scaling and squaring.

    ``M * t`` is scaled by ``2**-s`` until its infinity norm is at most 0.5,
    expanded as a truncated Taylor series and squared back ``s`` times.
    """
    M = _check_square(M)
    t = float(t)
    if not math.isfinite(t) or t < 0:
        raise ValueError(f"t must be finite and non-negative, got {t}")
    X = M * t
    s = _scaling_power(np.abs(X).sum(axis=1).max())
    return _taylor_squared(X / 2.0**s, s)


def mat_exp_many(M, ts):
    """Evaluate ``exp(M * t)`` for every ``t`` in ``ts``; shape ``(len(ts), n, n)``.

    One scaling power is shared across the batch (taken from the largest t),
    which keeps the whole evaluation vectorised.
    """
    M = _check_square(M)
    ts = np.asarray(ts, dtype=float).reshape(-1)
    if ts.size == 0:
        return np.empty((0,) + M.shape)
    if not np.all(np.isfinite(ts)) or np.any(ts < 0):
        raise ValueError("times must be finite and non-negative")
    X = ts[:, None, None] * M
    s = _scaling_power(np.abs(M).sum(axis=1).max() * ts.max())
    return _taylor_squared(X / 2.0**s, s)


def mat_vec(M, v):
    M = _check_square(M)
    v = np.asarray(v, dtype=float)
    if v.shape != (M.shape[0],):
        raise ValueError(f"dimension mismatch: {M.shape} @ {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return M @ v
