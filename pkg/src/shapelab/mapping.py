"""Amplitude sequences + random signs -> normalized QAM symbol frames.

Consecutive amplitudes pair into one complex symbol (even positions to I,
odd to Q), preserving temporal adjacency for the windowed-energy metrics.
Power normalization is ensemble-level: one scale per scheme, estimated
over a large symbol sample, never per frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

GENERATOR_ID = "numpy-pcg64"  # recorded in run manifests for reproducibility


@dataclass
class ComplexSymbolFrame:
    """Complex baseband symbols with their normalization scale and origin.

    scale is the divisor already applied to the raw integer-level symbols
    (1.0 means unnormalized); scheme tags the generating ensemble
    (uniform | ess | kess | bess).
    """

    symbols: np.ndarray
    scale: float = 1.0
    scheme: str = ""

    def __len__(self) -> int:
        return len(self.symbols)


@dataclass
class SignSource:
    """Seeded +/-1 generator (PCG64, 128-bit state)."""

    seed: object
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self.rng = np.random.default_rng(self.seed)

    def draw(self, count: int) -> np.ndarray:
        return self.rng.integers(0, 2, size=count, dtype=np.int64) * 2 - 1


def map_to_qam(amplitudes: np.ndarray, signs: np.ndarray, scheme: str = "") -> ComplexSymbolFrame:
    """Pair signed amplitudes into complex symbols: (a0, a1) -> s0*a0 + i*s1*a1.

    Lengths must match and be even; n amplitudes give n/2 symbols. The frame
    is unnormalized (scale 1.0) and its total symbol energy equals the
    amplitude energy sum exactly (signs cancel).
    """
    amplitudes = np.asarray(amplitudes)
    signs = np.asarray(signs)
    if amplitudes.shape != signs.shape:
        raise ValueError("amplitudes and signs must have equal length")
    if amplitudes.size % 2:
        raise ValueError("amplitude count must be even to form complex symbols")
    signed = (amplitudes * signs).astype(np.float64)
    return ComplexSymbolFrame(signed[0::2] + 1j * signed[1::2], 1.0, scheme)


def generate_uniform_frame(n_symbols: int, rng: np.random.Generator) -> ComplexSymbolFrame:
    """i.i.d. 64-QAM: I and Q drawn uniformly from {+-1, +-3, +-5, +-7}."""
    if n_symbols < 1:
        raise ValueError("n_symbols must be >= 1")
    levels = np.arange(-7, 8, 2, dtype=np.float64)
    i = rng.choice(levels, size=n_symbols)
    q = rng.choice(levels, size=n_symbols)
    return ComplexSymbolFrame(i + 1j * q, 1.0, "uniform")


def normalize_power(frames: list[ComplexSymbolFrame], mean_energy: float) -> list[ComplexSymbolFrame]:
    """Divide all frames by sqrt(mean_energy), recording the scale.

    mean_energy is the generating ensemble's per-symbol energy (analytic,
    or empirical over a large sample); per-frame normalization would erase
    the energy variations the windowed metrics measure.
    """
    if not mean_energy > 0:
        raise ValueError("ensemble mean energy must be positive")
    scale = float(np.sqrt(mean_energy))
    return [
        ComplexSymbolFrame(f.symbols / scale, f.scale * scale, f.scheme)
        for f in frames
    ]
