"""Temporal metrics for symbol streams: windowed energy and its dispersion
index, the sliding-window phase of transmit/receive correlations and its
autocorrelation, plus plain energy moments.

Window conventions (stated because definitions differ across tools):

* the energy window of size W (even) holds W + 1 symbols, indices
  k - W/2 .. k + W/2;
* the angle window of size w (odd) is centered on k (not trailing);
* only complete windows are evaluated (no padding);
* the lagged autocorrelation uses the biased covariance estimator on the
  mean-subtracted series, then renormalizes so the zero-lag value is
  exactly 1 (positive-semidefinite; the 1/(n-tau) variant differs only in
  lag weighting, which the renormalization makes negligible at the stream
  lengths used here).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .mapping import ComplexSymbolFrame


@dataclass
class EdiReport:
    """Energy dispersion index at one window size.

    psi >= 0, and 0 exactly when every windowed energy within every frame
    is equal. per_frame holds each frame's windowed-energy series when
    requested.
    """

    window: int
    psi: float
    per_frame: Optional[list[np.ndarray]] = None


@dataclass
class AcfReport:
    """Normalized autocorrelation of the windowed-angle series."""

    window_w: Optional[int]
    lags: np.ndarray
    values: np.ndarray
    theta: np.ndarray = field(repr=False, default=None)


@dataclass
class MomentReport:
    """Ensemble symbol-energy moments plus per-frame fourth-power sums."""

    mean_energy: float
    energy_variance: float
    kurtosis_ratio: float
    mean_fourth_sum: float


def _energy(x: np.ndarray) -> np.ndarray:
    # re^2+im^2, not abs()**2: the sqrt/square roundtrip is inexact even
    # for integer-valued symbols and breaks the psi==0 constant-envelope case
    x = np.asarray(x)
    return x.real ** 2 + x.imag ** 2


def windowed_energy(frame: ComplexSymbolFrame, window: int) -> np.ndarray:
    """Sliding sums of |x|^2 over W+1 symbols, complete windows only."""
    if window % 2 or window < 0:
        raise ValueError("window must be a non-negative even integer")
    e = _energy(frame.symbols)
    if window + 1 > e.size:
        raise ValueError(f"window {window} too large for frame of {e.size} symbols")
    return np.convolve(e, np.ones(window + 1), mode="valid")


def edi(frames: Sequence[ComplexSymbolFrame], window: int,
        keep_series: bool = False) -> EdiReport:
    """Dispersion index: frame-averaged variance of windowed energy over
    its frame-averaged mean. Feed power-normalized symbols for values
    comparable across schemes."""
    if len(frames) == 0:
        raise ValueError("need at least one frame")
    series = []
    variances = []
    means = []
    for f in frames:
        g = windowed_energy(f, window)
        variances.append(np.var(g))
        means.append(np.mean(g))
        if keep_series:
            series.append(g)
    psi = float(np.mean(variances)) / float(np.mean(means))
    return EdiReport(window, psi, series if keep_series else None)


def moving_window_angle(tx: ComplexSymbolFrame, rx: ComplexSymbolFrame,
                        window_w: int) -> np.ndarray:
    """Phase of the tx*-rx correlation summed over a centered w-symbol
    window, for every position with a complete window."""
    if window_w % 2 == 0 or window_w < 1:
        raise ValueError("window_w must be a positive odd integer")
    t = np.asarray(tx.symbols)
    r = np.asarray(rx.symbols)
    if t.shape != r.shape:
        raise ValueError("tx/rx length mismatch")
    if t.size < window_w:
        raise ValueError("stream shorter than the window")
    z = np.conj(t) * r
    acc = np.convolve(z, np.ones(window_w), mode="valid")
    return np.angle(acc)


def acf(theta: np.ndarray, tau_max: int, window_w: Optional[int] = None) -> AcfReport:
    """Autocorrelation of the angle series over lags 0..tau_max, with the
    zero-lag value normalized to exactly 1."""
    theta = np.asarray(theta, dtype=np.float64)
    n = theta.size
    if n <= tau_max + (window_w or 0):
        raise ValueError("series too short for the requested lags")
    centered = theta - theta.mean()
    c0 = float(np.dot(centered, centered)) / n
    if c0 <= 0:
        raise ValueError("constant angle series; autocorrelation undefined")
    lags = np.arange(tau_max + 1)
    values = np.empty(tau_max + 1)
    values[0] = 1.0
    for tau in range(1, tau_max + 1):
        values[tau] = (np.dot(centered[tau:], centered[:-tau]) / n) / c0
    return AcfReport(window_w, lags, values, theta)


def moments(frames: Sequence[ComplexSymbolFrame] | Sequence[np.ndarray]) -> MomentReport:
    """Energy moments of complex frames, or of raw amplitude sequences.

    For complex frames the per-frame fourth-power sum is over the I/Q
    amplitude magnitudes (|Re|^4 + |Im|^4); for amplitude sequences it is
    the plain sum of a^4.
    """
    if len(frames) == 0:
        raise ValueError("need at least one frame")
    energies = []
    fourth_sums = []
    for f in frames:
        x = np.asarray(f.symbols if isinstance(f, ComplexSymbolFrame) else f)
        if np.iscomplexobj(x):
            energies.append(_energy(x))
            fourth_sums.append(float(np.sum(x.real ** 4 + x.imag ** 4)))
        else:
            xf = x.astype(np.float64)
            energies.append(xf ** 2)
            fourth_sums.append(float(np.sum(xf ** 4)))
    e = np.concatenate(energies)
    mean_e = float(e.mean())
    return MomentReport(
        mean_energy=mean_e,
        energy_variance=float(e.var()),
        kurtosis_ratio=float(np.mean(e ** 2)) / mean_e ** 2,
        mean_fourth_sum=float(np.mean(fourth_sums)),
    )
