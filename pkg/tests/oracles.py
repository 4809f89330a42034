"""Reference computations that share no code with the package under test."""
import mpmath as mp
import numpy as np


def taylor_expm(M, t=1.0, terms=200, dps=60):
    """Truncated Taylor series of ``exp(M t)`` summed in high precision."""
    with mp.workdps(dps):
        A = mp.matrix(np.asarray(M, dtype=float).tolist()) * mp.mpf(t)
        n = A.rows
        total = mp.eye(n)
        term = mp.eye(n)
        for k in range(1, terms + 1):
            term = term * A / k
            total += term
        return np.array(total.tolist(), dtype=float)


def rk4(A, b, y0, horizon, step):
    """Fixed-step classical Runge-Kutta for ``dy/dt = A y + b``."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    y = np.array(y0, dtype=float)
    n = int(round(horizon / step))
    h = horizon / n
    for _ in range(n):
        k1 = A @ y + b
        k2 = A @ (y + 0.5 * h * k1) + b
        k3 = A @ (y + 0.5 * h * k2) + b
        k4 = A @ (y + h * k3) + b
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y
