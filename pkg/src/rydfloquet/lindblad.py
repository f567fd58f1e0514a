"""Exact single-atom master-equation evolution, the oracle for vbar = 0.

At vbar = 0 the mean-field equations reduce to the optical Bloch
equations of one two-level atom, which this module evolves exactly from
the density-matrix generator

    d(rho)/dt = -i [H, rho] + gamma * (J rho J+ - {J+ J, rho} / 2)

with H = -(delta0 + delta_c) |r><r| + omega (|r><g| + |g><r|) and
J = |g><r|.  Density matrices are plain 2x2 complex arrays in the basis
(|g>, |r>).

Channel convention: the Bloch variables that reproduce the mean-field
trajectories with this Hamiltonian sign convention are

    n_r = rho_rr,  sigma_x = -2 Re rho_rg,  sigma_y = +2 Im rho_rg

(pinned by the vbar = 0 agreement test, not assumed).
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from ._ode import DEFAULT_ATOL, DEFAULT_RTOL, solve_piecewise, uniform_samples
from .core import BlochState, SystemParams, TimeSeries, validate_params

__all__ = [
    "lindblad_rhs",
    "evolve_exact",
    "validate_density_matrix",
    "rho_from_bloch",
    "bloch_from_rho",
    "ground_state_rho",
]

DM_TOL = 1e-10

_JUMP = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # |g><r|
_JDAG_J = _JUMP.conj().T @ _JUMP  # |r><r|


def validate_density_matrix(rho, tol: float = DM_TOL) -> np.ndarray:
    """Check a 2x2 density matrix: trace 1, Hermitian, positive."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError("density matrix must be 2x2")
    if abs(np.trace(rho) - 1.0) > tol:
        raise ValueError("density matrix trace must be 1")
    if np.abs(rho - rho.conj().T).max() > tol:
        raise ValueError("density matrix must be Hermitian")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < -tol:
        raise ValueError("density matrix must be positive semidefinite")
    return rho


def ground_state_rho() -> np.ndarray:
    return np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)


def rho_from_bloch(s: BlochState) -> np.ndarray:
    """Density matrix whose channels equal the given Bloch variables."""
    rho_rg = 0.5 * (-s.sigma_x + 1j * s.sigma_y)
    return np.array(
        [[1.0 - s.n_r, np.conj(rho_rg)], [rho_rg, s.n_r]], dtype=complex
    )


def bloch_from_rho(rho) -> BlochState:
    rho = np.asarray(rho, dtype=complex)
    return BlochState(
        sigma_x=float(-2.0 * rho[1, 0].real),
        sigma_y=float(2.0 * rho[1, 0].imag),
        n_r=float(rho[1, 1].real),
    )


def _hamiltonian(p: SystemParams, delta_c: float) -> np.ndarray:
    det = p.delta0 + delta_c
    return np.array([[0.0, p.omega], [p.omega, -det]], dtype=complex)


def lindblad_rhs(rho, p: SystemParams, delta_c: float = 0.0) -> np.ndarray:
    """Master-equation derivative of a 2x2 density matrix.

    Requires vbar = 0: the single-atom generator has no interaction term.
    """
    validate_params(p)
    if p.vbar != 0.0:
        raise ValueError("vbar must be 0 for the single-atom oracle")
    rho = np.asarray(rho, dtype=complex)
    h = _hamiltonian(p, delta_c)
    drho = -1j * (h @ rho - rho @ h)
    drho += p.gamma * (
        _JUMP @ rho @ _JUMP.conj().T
        - 0.5 * (_JDAG_J @ rho + rho @ _JDAG_J)
    )
    return drho


def _rho_to_vec(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    return np.array([rho[0, 0].real, rho[1, 1].real,
                     rho[1, 0].real, rho[1, 0].imag])


def _vec_to_rho(y) -> np.ndarray:
    gg, rr, u, v = y
    return np.array([[gg, u - 1j * v], [u + 1j * v, rr]], dtype=complex)


def evolve_exact(
    rho0,
    p: SystemParams,
    drive=None,
    t_span=(0.0, 100.0),
    dt_out: float = 0.1,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> TimeSeries:
    """Evolve the density matrix and return Bloch-convention channels.

    Hermiticity reduces the state to four real components, which are
    integrated with the same error-controlled stepper and tolerances as
    the mean-field solver.  Trace preservation is left to the generator
    (and is one of the things the test suite checks).
    """
    validate_params(p)
    rho0 = validate_density_matrix(rho0)
    t0, t1 = float(t_span[0]), float(t_span[1])
    ts = uniform_samples(t0, t1, dt_out)

    if drive is None:
        def f(t, y):
            return _rho_to_vec(lindblad_rhs(_vec_to_rho(y), p, 0.0))
        breaks = ()
    else:
        dc = drive.eval_scalar

        def f(t, y):
            return _rho_to_vec(lindblad_rhs(_vec_to_rho(y), p, dc(t)))
        breaks = drive.breakpoints(t0, t1)

    ys = solve_piecewise(f, _rho_to_vec(rho0), (t0, t1), ts, breaks,
                         rtol=rtol, atol=atol)
    channels = {
        "rho_gg": ys[0],
        "n_r": ys[1],
        "sigma_x": -2.0 * ys[2],
        "sigma_y": 2.0 * ys[3],
    }
    if drive is not None:
        channels["delta_c"] = drive.eval(ts)
    return TimeSeries(t0, dt_out, channels)
