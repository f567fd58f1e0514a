"""Shared types and units convention.

All frequencies (Rabi frequency, detunings, interaction shift) are measured
in units of the Rydberg decay rate ``gamma``, and times in ``1/gamma``.
``gamma`` is kept as an explicit field so that converting a result to
physical units is a single multiplication by a measured decay rate.

Everything here is an immutable value type and safe to share between
threads or processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Slack allowed on the Bloch-ball constraint.  Integrator error, not
# physics, is the only legitimate source of violation.
BLOCH_BALL_EPS = 1e-6

_PARAM_FIELDS = ("omega", "delta0", "vbar", "gamma")


@dataclass(frozen=True)
class SystemParams:
    """Static mean-field parameters in units of the decay rate.

    omega
        Rabi frequency of the ground-Rydberg coupling.
    delta0
        Static two-photon detuning.
    vbar
        Mean-field interaction shift: the detuning seen by one atom is
        shifted by ``vbar * n_r``.
    gamma
        Rydberg decay rate; fixed to 1 by the units convention but kept
        explicit.
    """

    omega: float
    delta0: float
    vbar: float
    gamma: float = 1.0


def validate_params(p: SystemParams) -> SystemParams:
    """Return ``p`` unchanged if valid, else raise naming the first bad field."""
    for name in _PARAM_FIELDS:
        if not math.isfinite(getattr(p, name)):
            raise ValueError(f"{name} must be finite")
    if p.omega < 0:
        raise ValueError("omega must be non-negative")
    if p.gamma <= 0:
        raise ValueError("gamma must be positive")
    return p


@dataclass(frozen=True)
class BlochState:
    """Dynamical state: the two coherences and the Rydberg population."""

    sigma_x: float
    sigma_y: float
    n_r: float

    def as_array(self) -> np.ndarray:
        return np.array([self.sigma_x, self.sigma_y, self.n_r])

    @classmethod
    def from_array(cls, y) -> "BlochState":
        sx, sy, nr = np.asarray(y, dtype=float)
        return cls(float(sx), float(sy), float(nr))

    def bloch_radius_sq(self) -> float:
        """Squared Bloch-vector length, with sigma_z = 2 n_r - 1."""
        return self.sigma_x**2 + self.sigma_y**2 + (2.0 * self.n_r - 1.0) ** 2


def validate_state(s: BlochState, eps: float = BLOCH_BALL_EPS) -> BlochState:
    """Check population range and the Bloch-ball constraint."""
    if not (-eps <= s.n_r <= 1.0 + eps):
        raise ValueError("n_r must lie in [0, 1]")
    if s.bloch_radius_sq() > 1.0 + eps:
        raise ValueError("state lies outside the Bloch ball")
    return s


class TimeSeries:
    """Uniformly sampled, named channels sharing one time axis.

    Channels always include ``n_r``; integrators add ``sigma_x``,
    ``sigma_y`` and, when driven, ``delta_c``.
    """

    def __init__(self, t0: float, dt: float, channels: dict):
        if not dt > 0:
            raise ValueError("dt must be positive")
        self.t0 = float(t0)
        self.dt = float(dt)
        self.channels = {k: np.asarray(v, dtype=float) for k, v in channels.items()}
        lengths = {v.size for v in self.channels.values()}
        if not self.channels or lengths == {0} or min(lengths) < 2:
            raise ValueError("channels must have equal length >= 2")
        if len(lengths) != 1:
            raise ValueError("channels must have equal length >= 2")

    @property
    def n_samples(self) -> int:
        return next(iter(self.channels.values())).size

    @property
    def t(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_samples)

    def channel(self, name: str) -> np.ndarray:
        try:
            return self.channels[name]
        except KeyError:
            have = ", ".join(sorted(self.channels))
            raise KeyError(f"channel '{name}' not present (have: {have})") from None

    def slice(self, i0: int, i1: int) -> "TimeSeries":
        """Sample-index window [i0, i1)."""
        return TimeSeries(
            self.t0 + i0 * self.dt,
            self.dt,
            {k: v[i0:i1] for k, v in self.channels.items()},
        )


def transmission(n_r, scale=(1.0, 0.0)):
    """Affine readout of the Rydberg population, ``a * n_r + b``.

    The probe transmission tracks the Rydberg population; the affine pair
    is a free output calibration and defaults to the identity.
    """
    a, b = scale
    return a * n_r + b
