"""Periodic kick drive and the magnetic-field-to-frequency map.

The internally generated charge fields act on the atoms as a periodic
modulation of the two-photon detuning.  We model that as an imposed
T-periodic waveform delta_c(t): a short kick of amplitude A and duration
tau, either flat (square) or decaying (exponential), repeated every T.
The timescale ordering the mechanism relies on is tau << relaxation time
<< T - tau; with gamma = 1 the defaults T = 50, tau = 2 respect it.

The observed oscillation frequency scales linearly with the applied
magnetic field through the origin; ``FieldToFrequencyMap`` carries that
one calibration slope in physical units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ._ode import DEFAULT_ATOL, DEFAULT_RTOL, IntegrationError
from .core import SystemParams
from .dynamics import STABLE, fixed_points, integrate

__all__ = [
    "DriveWaveform",
    "FieldToFrequencyMap",
    "waveform_eval",
    "period_from_bfield",
    "fit_field_map",
    "calibrate_kick",
]

SHAPES = ("square", "exponential")

DEFAULT_PERIOD = 50.0
DEFAULT_KICK_DURATION = 2.0


@dataclass(frozen=True)
class DriveWaveform:
    """T-periodic detuning kick.

    shape "square": delta_c = kick_amplitude while the phase
    (t - t_offset) mod period is below kick_duration, else 0.
    shape "exponential": kick_amplitude * exp(-phase / kick_duration)
    over the whole period, restarting at each period boundary.
    """

    period: float = DEFAULT_PERIOD
    kick_amplitude: float = 0.0
    kick_duration: float = DEFAULT_KICK_DURATION
    shape: str = "square"
    t_offset: float = 0.0

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"shape must be one of {SHAPES}")
        if not (math.isfinite(self.period) and self.period > 0):
            raise ValueError("period must be positive and finite")
        if not (0.0 < self.kick_duration < self.period):
            raise ValueError("kick_duration must lie in (0, period)")
        for name in ("kick_amplitude", "t_offset"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def eval(self, t):
        """Waveform value; vectorized over array input."""
        phase = np.mod(np.asarray(t, dtype=float) - self.t_offset, self.period)
        if self.shape == "square":
            out = np.where(phase < self.kick_duration, self.kick_amplitude, 0.0)
        else:
            out = self.kick_amplitude * np.exp(-phase / self.kick_duration)
        if out.ndim == 0:
            return float(out)
        return out

    def eval_scalar(self, t: float) -> float:
        """Scalar fast path used inside integrator inner loops."""
        phase = (t - self.t_offset) % self.period
        if self.shape == "square":
            return self.kick_amplitude if phase < self.kick_duration else 0.0
        return self.kick_amplitude * math.exp(-phase / self.kick_duration)

    def breakpoints(self, t0: float, t1: float):
        """Discontinuity times strictly inside (t0, t1).

        Square kicks jump at both edges; the exponential shape is smooth
        within a period and jumps only at period boundaries.
        """
        k_lo = math.floor((t0 - self.t_offset) / self.period) - 1
        k_hi = math.ceil((t1 - self.t_offset) / self.period) + 1
        pts = []
        for k in range(k_lo, k_hi + 1):
            start = self.t_offset + k * self.period
            if t0 < start < t1:
                pts.append(start)
            if self.shape == "square":
                edge = start + self.kick_duration
                if t0 < edge < t1:
                    pts.append(edge)
        return sorted(pts)

    def with_amplitude(self, amplitude: float) -> "DriveWaveform":
        return replace(self, kick_amplitude=float(amplitude))


def waveform_eval(d: DriveWaveform, t):
    """Functional alias for ``d.eval(t)``."""
    return d.eval(t)


@dataclass(frozen=True)
class FieldToFrequencyMap:
    """Linear oscillation-frequency map f = kappa * B, zero intercept."""

    kappa: float  # Hz per Gauss

    def __post_init__(self):
        if not (math.isfinite(self.kappa) and self.kappa > 0):
            raise ValueError("kappa must be positive and finite")

    def frequency(self, b_field: float) -> float:
        return self.kappa * b_field


def period_from_bfield(b_field: float, m: FieldToFrequencyMap):
    """Drive period [s] and frequency [Hz] for a magnetic field [G].

    Physical output only; converting the period into simulation units
    requires the user's own decay rate in Hz.
    """
    if not b_field > 0:
        raise ValueError("B must be positive")
    f = m.frequency(b_field)
    return 1.0 / f, f


def fit_field_map(b_values, f_values) -> FieldToFrequencyMap:
    """Least-squares slope through the origin for (B, f) data."""
    b = np.asarray(b_values, dtype=float)
    f = np.asarray(f_values, dtype=float)
    if b.size != f.size or b.size == 0:
        raise ValueError("b_values and f_values must be non-empty and equal length")
    kappa = float(np.dot(f, b) / np.dot(b, b))
    return FieldToFrequencyMap(kappa)


def _start_state(p: SystemParams, which: str):
    stable = [fp for fp in fixed_points(p) if fp.stability == STABLE]
    if not stable:
        raise ValueError("no stable steady state to start from")
    return (stable[0] if which == "low" else stable[-1]).state


def calibrate_kick(
    p: SystemParams,
    template: DriveWaveform,
    amp_range=(-10.0, -1.0),
    n_steps: int = 19,
    periods: int = 42,
    discard: int = 10,
    samples_per_period: int = 64,
    initial: str = "low",
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
):
    """Scan kick amplitudes and score the subharmonic response of each.

    For every amplitude the system is evolved from the low-population
    steady state (or "high") for ``periods`` drive periods; the first
    ``discard`` periods are dropped as transient and the rest are scored
    by the subharmonic weight P(f/2) / (P(f/2) + P(f)).  Returns a list
    of (amplitude, score); amplitudes whose integration fails score NaN
    instead of aborting the scan.
    """
    from .spectral import dtc_order_of  # local import to avoid a cycle

    if periods - discard < 2:
        raise ValueError("need at least 2 analysed periods")
    x0 = _start_state(p, initial)
    T = template.period
    dt_out = T / samples_per_period
    amps = np.linspace(amp_range[0], amp_range[1], n_steps)
    scan = []
    for a in amps:
        drv = template.with_amplitude(a)
        try:
            ts = integrate(x0, p, drv, (0.0, periods * T), dt_out,
                           rtol=rtol, atol=atol)
            window = ts.slice(discard * samples_per_period,
                              periods * samples_per_period)
            score = dtc_order_of(window, f_drive=1.0 / T)
        except IntegrationError:
            score = float("nan")
        scan.append((float(a), float(score)))
    return scan
