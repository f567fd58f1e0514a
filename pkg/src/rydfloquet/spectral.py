"""Spectral analysis of transmission time series.

Detects the drive-frequency component and the half-frequency subharmonic
that signals a period-doubled response.  The subharmonic weight

    dtc_order = P(f/2) / (P(f/2) + P(f))

uses band-integrated power (not single bins) so that leakage from a drive
period incommensurate with the FFT grid cannot flip the classification,
and is invariant under affine rescaling of the input channel, so the
transmission calibration cannot change the verdict.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .core import TimeSeries

__all__ = [
    "SpectralReport",
    "StroboscopicSeries",
    "fft_spectrum",
    "mark_drive",
    "dtc_order_of",
    "stroboscopic",
]

WINDOWS = ("rectangular", "hann")
MIN_SAMPLES = 64
DEFAULT_BAND_FRACTION = 0.1
# Added to power-ratio denominators, relative to the spectral peak, so a
# silent signal scores 0 instead of 0/0.
POWER_FLOOR_REL = 1e-12


@dataclass(frozen=True)
class SpectralReport:
    """One-sided spectrum with optional drive/subharmonic band powers.

    ``power`` is normalized so its sum equals the mean square of the
    mean-subtracted input (exactly so for the rectangular window);
    ``amplitude`` is the equivalent sinusoid amplitude per bin.
    """

    frequencies: np.ndarray
    amplitude: np.ndarray
    power: np.ndarray
    df: float
    window: str
    f_drive: Optional[float] = None
    band_halfwidth: Optional[float] = None
    p_drive: Optional[float] = None
    p_half: Optional[float] = None
    dtc_order: Optional[float] = None


def fft_spectrum(ts: TimeSeries, channel: str = "n_r",
                 window: str = "hann") -> SpectralReport:
    """Mean-subtracted, windowed, one-sided magnitude spectrum."""
    if window not in WINDOWS:
        raise ValueError(f"window must be one of {WINDOWS}")
    x = ts.channel(channel)
    n = x.size
    if n < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {n}")
    x = x - x.mean()
    if window == "hann":
        # periodic Hann, standard for FFT analysis
        w = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)
    else:
        w = np.ones(n)
    spec = np.fft.rfft(x * w)
    freqs = np.fft.rfftfreq(n, d=ts.dt)

    # One-sided power calibrated so sum(power) == mean(x^2) for the
    # rectangular window (discrete Parseval).
    scale = np.full(freqs.size, 2.0)
    scale[0] = 1.0
    if n % 2 == 0:
        scale[-1] = 1.0
    power = scale * np.abs(spec) ** 2 / (n * np.sum(w**2))
    amplitude = np.sqrt(2.0 * power)
    return SpectralReport(
        frequencies=freqs,
        amplitude=amplitude,
        power=power,
        df=1.0 / (n * ts.dt),
        window=window,
    )


def _band_power(report: SpectralReport, f_center: float, halfwidth: float) -> float:
    mask = np.abs(report.frequencies - f_center) <= halfwidth
    return float(report.power[mask].sum())


def mark_drive(report: SpectralReport, f_drive: float,
               band: float = DEFAULT_BAND_FRACTION) -> SpectralReport:
    """Fill drive and subharmonic band powers and the subharmonic weight.

    ``band`` is the half-width of each integration band as a fraction of
    f_drive/2, so the two bands can never overlap.
    """
    nyquist = float(report.frequencies[-1])
    if f_drive >= nyquist:
        raise ValueError(
            f"f_drive={f_drive:.6g} is at or above the Nyquist frequency "
            f"{nyquist:.6g}"
        )
    if f_drive <= 0:
        raise ValueError("f_drive must be positive")
    halfwidth = band * (0.5 * f_drive)
    p_drive = _band_power(report, f_drive, halfwidth)
    p_half = _band_power(report, 0.5 * f_drive, halfwidth)
    peak = float(report.power.max(initial=0.0))
    denom = p_half + p_drive + POWER_FLOOR_REL * peak
    order = p_half / denom if denom > 0.0 else 0.0
    return replace(
        report,
        f_drive=float(f_drive),
        band_halfwidth=float(halfwidth),
        p_drive=p_drive,
        p_half=p_half,
        dtc_order=float(order),
    )


def dtc_order_of(ts: TimeSeries, f_drive: float, channel: str = "n_r",
                 window: str = "hann",
                 band: float = DEFAULT_BAND_FRACTION) -> float:
    """Subharmonic weight of one channel in a single call."""
    return mark_drive(fft_spectrum(ts, channel, window), f_drive, band).dtc_order


@dataclass(frozen=True)
class StroboscopicSeries:
    """Once-per-period samples and their period-2 alternation score.

    The score compares consecutive strobe differences against
    next-nearest ones: ~0 for a period-T response, >> 1 when samples
    alternate between two values (period 2T).
    """

    times: np.ndarray
    samples: np.ndarray
    alternation_score: float


def stroboscopic(ts: TimeSeries, period: float, t0: Optional[float] = None,
                 channel: str = "n_r") -> StroboscopicSeries:
    """Sample one channel at t0 + k*period (linear interpolation)."""
    if not period > 0:
        raise ValueError("period must be positive")
    x = ts.channel(channel)
    t = ts.t
    span = t[-1] - t[0]
    if span < 10.0 * period:
        raise ValueError(
            f"series spans {span / period:.2f} periods; need at least 10"
        )
    if t0 is None:
        t0 = ts.t0
    if not (t[0] <= t0 <= t[-1]):
        raise ValueError("t0 must lie inside the sampled interval")
    k_max = int(np.floor((t[-1] - t0) / period * (1.0 + 1e-12)))
    times = t0 + period * np.arange(k_max + 1)
    times = times[times <= t[-1] + 1e-9 * span]
    samples = np.interp(times, t, x)

    d1 = np.abs(np.diff(samples)).mean() if samples.size >= 2 else 0.0
    d2 = np.abs(samples[2:] - samples[:-2]).mean() if samples.size >= 3 else 0.0
    # Floor tied to the full-series amplitude: strobe samples of a clean
    # period-T orbit agree to integrator precision, which must score ~0,
    # not noise/noise ~ 1.
    floor = 1e-6 * (float(x.max()) - float(x.min())) + 1e-15
    score = float(d1 / (d2 + floor))
    return StroboscopicSeries(times=times, samples=samples,
                              alternation_score=score)
