"""Mean-field Bloch dynamics of the driven-dissipative Rydberg gas.

The closed three-variable system evolved here is

    d(sigma_x)/dt = (Delta(t) + vbar*n_r) * sigma_y - (gamma/2) * sigma_x
    d(sigma_y)/dt = 2*omega*(2*n_r - 1) - (Delta(t) + vbar*n_r) * sigma_x
                    - (gamma/2) * sigma_y
    d(n_r)/dt     = -omega * sigma_y - gamma * n_r

with Delta(t) = delta0 + delta_c(t).  The interaction enters only through
the population-dependent detuning shift ``vbar * n_r``, which is what
makes the steady state multivalued (optical bistability) at strong
interaction.

This module provides the right-hand side, error-controlled time
integration under an optional periodic kick drive, the steady-state cubic
and its roots, Jacobian-based stability classification, and
basin-of-attraction maps of the undriven flow.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

from ._ode import (
    DEFAULT_ATOL,
    DEFAULT_RTOL,
    IntegrationError,
    solve_piecewise,
    uniform_samples,
)
from .core import BlochState, SystemParams, TimeSeries, validate_params

if TYPE_CHECKING:  # pragma: no cover
    from .drive import DriveWaveform

__all__ = [
    "FixedPoint",
    "BasinMap",
    "IntegrationError",
    "rhs",
    "jacobian",
    "integrate",
    "steady_state_cubic",
    "fixed_points",
    "is_bistable",
    "basin_map",
]

STABLE = "stable"
UNSTABLE = "unstable"
MARGINAL = "marginal"

# Residual tolerance for accepting a reconstructed steady state.
TOL_FIXED_POINT = 1e-9
# Eigenvalue real parts within this of zero are classified "marginal",
# never silently stable.
STABILITY_TOL = 1e-8
# Cubic roots: imaginary parts below this count as real; roots this far
# outside [0, 1] are clamped in.
ROOT_IMAG_TOL = 1e-8
# Basin mapping defaults: convergence radius and integration horizon.
TOL_ATTRACT = 1e-4
BASIN_T_MAX = 200.0


def _state_array(s) -> np.ndarray:
    if isinstance(s, BlochState):
        return s.as_array()
    return np.asarray(s, dtype=float)


def rhs(s, p: SystemParams, delta_c: float = 0.0) -> np.ndarray:
    """Time derivative (d sigma_x, d sigma_y, d n_r) at state ``s``.

    Accepts a BlochState or any length-3 array-like; broadcasts over a
    (3, N) stack of states.
    """
    y = _state_array(s)
    sx, sy, nr = y[0], y[1], y[2]
    det = p.delta0 + delta_c + p.vbar * nr
    half_g = 0.5 * p.gamma
    return np.array(
        [
            det * sy - half_g * sx,
            2.0 * p.omega * (2.0 * nr - 1.0) - det * sx - half_g * sy,
            -p.omega * sy - p.gamma * nr,
        ]
    )


def jacobian(s, p: SystemParams) -> np.ndarray:
    """Derivative of the undriven flow (delta_c = 0) at state ``s``.

    The interaction contributes off-diagonal terms through the products
    of the shifted detuning with each coherence.
    """
    sx, sy, nr = _state_array(s)
    det = p.delta0 + p.vbar * nr
    half_g = 0.5 * p.gamma
    return np.array(
        [
            [-half_g, det, p.vbar * sy],
            [-det, -half_g, 4.0 * p.omega - p.vbar * sx],
            [0.0, -p.omega, -p.gamma],
        ]
    )


def _make_rhs(p: SystemParams, delta_c):
    """Bind the equations of motion to a detuning modulation.

    ``delta_c`` may be None (undriven), a number (constant within the
    integration segment), or a callable of time.
    """
    omega, delta0, vbar, gamma = p.omega, p.delta0, p.vbar, p.gamma
    half_g = 0.5 * gamma
    two_om = 2.0 * omega

    if delta_c is None or (not callable(delta_c) and delta_c == 0.0):
        def f(t, y):
            sx, sy, nr = y
            det = delta0 + vbar * nr
            return (
                det * sy - half_g * sx,
                two_om * (2.0 * nr - 1.0) - det * sx - half_g * sy,
                -omega * sy - gamma * nr,
            )
    elif callable(delta_c):
        def f(t, y):
            sx, sy, nr = y
            det = delta0 + delta_c(t) + vbar * nr
            return (
                det * sy - half_g * sx,
                two_om * (2.0 * nr - 1.0) - det * sx - half_g * sy,
                -omega * sy - gamma * nr,
            )
    else:
        base = delta0 + float(delta_c)

        def f(t, y):
            sx, sy, nr = y
            det = base + vbar * nr
            return (
                det * sy - half_g * sx,
                two_om * (2.0 * nr - 1.0) - det * sx - half_g * sy,
                -omega * sy - gamma * nr,
            )

    return f


def integrate(
    s0,
    p: SystemParams,
    drive: Optional["DriveWaveform"] = None,
    t_span=(0.0, 100.0),
    dt_out: float = 0.1,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> TimeSeries:
    """Evolve the mean-field equations and sample uniformly at ``dt_out``.

    Internal stepping is adaptive and independent of the output grid.
    ``drive=None`` means delta_c = 0.  Channels: sigma_x, sigma_y, n_r,
    and delta_c when driven.
    """
    validate_params(p)
    t0, t1 = float(t_span[0]), float(t_span[1])
    ts = uniform_samples(t0, t1, dt_out)
    y0 = _state_array(s0)

    if drive is None:
        f = _make_rhs(p, None)
        breaks = ()
    else:
        f = _make_rhs(p, drive.eval_scalar)
        breaks = drive.breakpoints(t0, t1)

    ys = solve_piecewise(f, y0, (t0, t1), ts, breaks, rtol=rtol, atol=atol)
    channels = {"sigma_x": ys[0], "sigma_y": ys[1], "n_r": ys[2]}
    if drive is not None:
        channels["delta_c"] = drive.eval(ts)
    return TimeSeries(t0, dt_out, channels)


def steady_state_cubic(p: SystemParams):
    """Coefficients (c3, c2, c1, c0) of the steady-state polynomial in n_r.

    Setting the three time derivatives to zero (delta_c = 0) and writing
    D = delta0 + vbar*n for the shifted detuning:

        n' = 0      =>  sigma_y = -gamma*n/omega            (needs omega > 0)
        sigma_x' = 0 => sigma_x = (2D/gamma)*sigma_y = -2*n*D/omega
        sigma_y' = 0 => 2*omega*(2n - 1) - D*sigma_x - (gamma/2)*sigma_y = 0

    Substituting the first two into the third and multiplying by omega/2:

        omega^2*(2n - 1) + n*D^2 + (gamma^2/4)*n = 0

    which expands in powers of n to

        vbar^2 * n^3 + 2*delta0*vbar * n^2
          + (delta0^2 + gamma^2/4 + 2*omega^2) * n - omega^2 = 0.
    """
    validate_params(p)
    if p.omega == 0.0:
        raise ValueError("degenerate: cubic collapses (omega = 0)")
    c3 = p.vbar**2
    c2 = 2.0 * p.delta0 * p.vbar
    c1 = p.delta0**2 + 0.25 * p.gamma**2 + 2.0 * p.omega**2
    c0 = -(p.omega**2)
    return (c3, c2, c1, c0)


def _real_roots_unit_interval(coeffs) -> np.ndarray:
    """Real roots of the cubic inside [0, 1], ascending.

    numpy.roots solves via companion-matrix eigenvalues, which stays
    well-behaved near double roots (fold points).  Roots within
    ROOT_IMAG_TOL outside [0, 1] are clamped in.
    """
    roots = np.roots(coeffs)
    real = roots[np.abs(roots.imag) < ROOT_IMAG_TOL].real
    kept = []
    for r in np.sort(real):
        if -ROOT_IMAG_TOL <= r <= 1.0 + ROOT_IMAG_TOL:
            kept.append(min(max(r, 0.0), 1.0))
    return np.asarray(kept)


@dataclass(frozen=True)
class FixedPoint:
    """A steady state with its Jacobian spectrum and stability class."""

    state: BlochState
    eigenvalues: tuple
    stability: str

    @property
    def n_r(self) -> float:
        return self.state.n_r


def _classify(eigenvalues) -> str:
    re = np.real(np.asarray(eigenvalues))
    if np.any(re > STABILITY_TOL):
        return UNSTABLE
    if np.all(re < -STABILITY_TOL):
        return STABLE
    return MARGINAL


def fixed_points(p: SystemParams, tol_fp: float = TOL_FIXED_POINT):
    """All steady states of the undriven flow, sorted by ascending n_r.

    Each population root of the steady-state cubic is completed with the
    coherences sigma_y = -gamma*n/omega and
    sigma_x = -(2n/omega)*(delta0 + vbar*n), then classified by the
    Jacobian spectrum.
    """
    coeffs = steady_state_cubic(p)
    points = []
    for n in _real_roots_unit_interval(coeffs):
        det = p.delta0 + p.vbar * n
        sy = -p.gamma * n / p.omega
        sx = -2.0 * n * det / p.omega
        state = BlochState(float(sx), float(sy), float(n))
        residual = float(np.linalg.norm(rhs(state, p)))
        if residual > tol_fp:
            raise RuntimeError(
                f"steady-state residual {residual:.3e} exceeds {tol_fp:.1e} "
                f"at n_r={n:.6g}"
            )
        eig = np.linalg.eigvals(jacobian(state, p))
        order = np.argsort(eig.real)
        eig = eig[order]
        points.append(FixedPoint(state, tuple(eig), _classify(eig)))
    return points


def is_bistable(p: SystemParams) -> bool:
    """True iff the undriven flow has at least two stable steady states."""
    return sum(fp.stability == STABLE for fp in fixed_points(p)) >= 2


_COORDS = ("sigma_x", "sigma_y", "n_r")


@dataclass
class BasinMap:
    """Grid labelling of a 2D slice of state space by attracting steady state.

    ``labels[i, j]`` is the index into ``attractors`` reached from the
    grid cell (x_values[j], y_values[i]), or -1 if no attractor was
    reached within the time horizon.
    """

    x_name: str
    y_name: str
    x_values: np.ndarray
    y_values: np.ndarray
    labels: np.ndarray
    attractors: list
    fixed_name: str
    fixed_value: float

    def __post_init__(self):
        if self.labels.shape != (self.y_values.size, self.x_values.size):
            raise ValueError("label grid does not match axes")
        if self.labels.max(initial=-1) >= len(self.attractors):
            raise ValueError("label references a missing attractor")


def basin_map(
    p: SystemParams,
    x_name: str = "sigma_x",
    y_name: str = "n_r",
    x_range=(-1.0, 1.0),
    y_range=(0.0, 1.0),
    resolution=41,
    fixed_value: Optional[float] = None,
    t_max: float = BASIN_T_MAX,
    tol_attract: float = TOL_ATTRACT,
    chunk: float = 5.0,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> BasinMap:
    """Label a plane of initial conditions by the stable state they reach.

    The plane is spanned by two state coordinates; the third is held at
    ``fixed_value``, defaulting to the unstable steady state's value of
    that coordinate (the separatrix passes through it, so both basins
    intersect the plane).  All grid cells are integrated together in
    chunks of ``chunk`` time units; a cell is labelled once it comes
    within ``tol_attract`` of a stable steady state.
    """
    if x_name not in _COORDS or y_name not in _COORDS or x_name == y_name:
        raise ValueError(f"plane axes must be two distinct of {_COORDS}")
    fixed_name = next(c for c in _COORDS if c not in (x_name, y_name))

    fps = fixed_points(p)
    attractors = [fp for fp in fps if fp.stability == STABLE]
    if len(attractors) < 2:
        raise ValueError("basin_map requires bistable parameters "
                         f"(found {len(attractors)} stable steady states)")
    if fixed_value is None:
        unstable = [fp for fp in fps if fp.stability == UNSTABLE]
        if not unstable:
            raise ValueError("no unstable steady state; pass fixed_value explicitly")
        fixed_value = getattr(unstable[0].state, fixed_name)

    if isinstance(resolution, int):
        nx = ny = resolution
    else:
        nx, ny = resolution
    xs = np.linspace(x_range[0], x_range[1], nx)
    ys = np.linspace(y_range[0], y_range[1], ny)

    # Flattened batch of initial states, one column per grid cell.
    xg, yg = np.meshgrid(xs, ys)
    n_cells = xg.size
    states = np.empty((3, n_cells))
    idx = {name: i for i, name in enumerate(_COORDS)}
    states[idx[x_name]] = xg.ravel()
    states[idx[y_name]] = yg.ravel()
    states[idx[fixed_name]] = fixed_value

    targets = np.stack([fp.state.as_array() for fp in attractors], axis=1)

    omega, delta0, vbar, gamma = p.omega, p.delta0, p.vbar, p.gamma
    half_g = 0.5 * gamma

    def f(t, y):
        s = y.reshape(3, n_cells)
        det = delta0 + vbar * s[2]
        out = np.empty_like(s)
        out[0] = det * s[1] - half_g * s[0]
        out[1] = 2.0 * omega * (2.0 * s[2] - 1.0) - det * s[0] - half_g * s[1]
        out[2] = -omega * s[1] - gamma * s[2]
        return out.ravel()

    labels = np.full(n_cells, -1, dtype=int)

    def mark(current):
        unresolved = labels < 0
        if not np.any(unresolved):
            return
        # distance of each unresolved cell to each attractor
        diff = current[:, unresolved, None] - targets[:, None, :]
        d2 = np.einsum("kca,kca->ca", diff, diff)
        hit = d2.min(axis=1) < tol_attract**2
        which = d2.argmin(axis=1)
        ids = np.flatnonzero(unresolved)
        labels[ids[hit]] = which[hit]

    mark(states)
    t = 0.0
    y = states.ravel()
    while t < t_max and np.any(labels < 0):
        t_next = min(t + chunk, t_max)
        y = solve_piecewise(f, y, (t, t_next), [t_next], rtol=rtol, atol=atol)[:, 0]
        mark(y.reshape(3, n_cells))
        t = t_next

    return BasinMap(
        x_name=x_name,
        y_name=y_name,
        x_values=xs,
        y_values=ys,
        labels=labels.reshape(ny, nx),
        attractors=attractors,
        fixed_name=fixed_name,
        fixed_value=float(fixed_value),
    )
