"""Error-controlled piecewise ODE integration.

Shared by the mean-field and density-matrix solvers so that any
discrepancy between the two isolates a model difference, not a solver
difference.  The right-hand side may be discontinuous at known times
(kick edges, ramp corners); integration restarts at each breakpoint so
the adaptive stepper never straddles a jump.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp

DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-9


class IntegrationError(RuntimeError):
    """Adaptive stepping failed; ``t_fail`` is where it gave up."""

    def __init__(self, message: str, t_fail: float):
        super().__init__(message)
        self.t_fail = t_fail


def solve_piecewise(
    f,
    y0,
    t_span,
    sample_times,
    breakpoints=(),
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    method: str = "RK45",
) -> np.ndarray:
    """Integrate ``y' = f(t, y)`` over ``t_span`` and sample densely.

    Returns an array of shape ``(dim, len(sample_times))``.  Sample times
    must be ascending and lie within ``t_span`` (a float-rounding overshoot
    of the final time is tolerated and clamped).
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValueError("t_span must satisfy t1 > t0")
    ts = np.asarray(sample_times, dtype=float)
    if ts.size == 0:
        raise ValueError("sample_times must be non-empty")
    if np.any(np.diff(ts) <= 0):
        raise ValueError("sample_times must be strictly increasing")
    slack = 1e-9 * (t1 - t0)
    if ts[0] < t0 - slack or ts[-1] > t1 + slack:
        raise ValueError("sample_times must lie within t_span")
    ts = np.clip(ts, t0, t1)

    y = np.asarray(y0, dtype=float).copy()
    out = np.empty((y.size, ts.size))

    # Samples at exactly t0 come straight from the initial condition.
    n_at_start = int(np.searchsorted(ts, t0, side="right"))
    for i in range(n_at_start):
        out[:, i] = y

    edges = [t0]
    for b in sorted(float(b) for b in breakpoints):
        if b > edges[-1] + slack and b < t1 - slack:
            edges.append(b)
    edges.append(t1)

    lo = n_at_start
    for a, b in zip(edges[:-1], edges[1:]):
        sol = solve_ivp(f, (a, b), y, method=method, rtol=rtol, atol=atol,
                        dense_output=True)
        if not sol.success:
            t_fail = float(sol.t[-1])
            raise IntegrationError(
                f"integration failed at t={t_fail:.9g}: {sol.message}", t_fail
            )
        hi = int(np.searchsorted(ts, b, side="right"))
        if hi > lo:
            out[:, lo:hi] = sol.sol(ts[lo:hi])
            lo = hi
        y = sol.y[:, -1].copy()
    return out


def uniform_samples(t0: float, t1: float, dt_out: float) -> np.ndarray:
    """Sample grid t0 + k*dt_out covering [t0, t1]."""
    if not dt_out > 0:
        raise ValueError("dt_out must be positive")
    n = int(np.floor((t1 - t0) / dt_out * (1.0 + 1e-12))) + 1
    return t0 + dt_out * np.arange(n)
