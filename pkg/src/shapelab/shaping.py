"""Constrained amplitude-sequence trellises and enumerative (un)ranking.

Three constraint families over length-N sequences of positive odd
amplitudes a_k:

* energy-bounded:            sum a_k^2 < e_max                     ("ess")
* + fourth-power-bounded:    sum a_k^4 < k_max                     ("kess")
* + cumulative-energy band:  |C_k - k*slope| <= halfwidth, k=1..N  ("bess")

where C_k is the running energy sum. The band is enforced at every
position including k=N, on top of the final e_max bound. Energy and
fourth-power bounds are strict; the band bound is inclusive.

The trellis stores, per position, the reachable accumulated states and
the exact number of admissible completions from each state. Counts are
arbitrary-precision integers. Sequences are ranked lexicographically
with amplitudes compared in ascending value order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

# Packed state key: energy << KEY_SHIFT | fourth-power sum. Fourth-power
# sums stay far below 2**KEY_SHIFT because k_max prunes them at build time.
_KEY_SHIFT = 32
_KEY_MASK = (1 << _KEY_SHIFT) - 1


class ShapingError(ValueError):
    """Base error for constraint/trellis misuse."""


class EmptyTrellisError(ShapingError):
    """No admissible sequence exists; `position` is the first layer with no state."""

    def __init__(self, position: int):
        self.position = position
        super().__init__(f"no reachable state at position {position}; constraints admit no sequence")


class InadmissibleSequenceError(ShapingError):
    """A sequence violates a constraint; carries the first violation."""

    def __init__(self, constraint: str, position: int):
        self.constraint = constraint
        self.position = position
        super().__init__(f"sequence violates {constraint} constraint first at position {position}")


@dataclass(frozen=True)
class AmplitudeAlphabet:
    """Ascending positive odd amplitude levels, e.g. (1, 3, 5, 7) for 8-ASK."""

    values: tuple[int, ...]

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if len(vals) < 2:
            raise ShapingError("alphabet needs at least 2 values")
        if any(v <= 0 or v % 2 == 0 for v in vals):
            raise ShapingError("alphabet values must be positive odd integers")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ShapingError("alphabet values must be strictly ascending")

    @property
    def energies(self) -> tuple[int, ...]:
        return tuple(v * v for v in self.values)

    @property
    def fourth_powers(self) -> tuple[int, ...]:
        return tuple(v ** 4 for v in self.values)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class ShapingConstraints:
    """Sequence length plus the active bounds.

    `band_slope` is exact (a Fraction); band admissibility at position k is
    |C_k * q - k * p| <= halfwidth * q with slope = p/q, so no floating
    point enters the trellis. `input_bits`, when set (by calibrate_emax),
    is the number of index bits the mapper feeds this trellis.
    """

    n: int
    e_max: int
    k_max: Optional[int] = None
    band_slope: Optional[Fraction] = None
    band_halfwidth: Optional[int] = None
    input_bits: Optional[int] = None

    def __post_init__(self):
        if self.n < 1:
            raise ShapingError("sequence length must be >= 1")
        if self.e_max < 1:
            raise ShapingError("e_max must be a positive integer")
        if self.k_max is not None and self.k_max < 1:
            raise ShapingError("k_max must be a positive integer when set")
        if (self.band_slope is None) != (self.band_halfwidth is None):
            raise ShapingError("band slope and halfwidth must be set together")
        if self.band_slope is not None:
            if self.band_slope <= 0:
                raise ShapingError("band slope must be > 0")
            if self.band_halfwidth < 0:
                raise ShapingError("band halfwidth must be >= 0")
        if self.k_max is not None and self.band_slope is not None:
            raise ShapingError("fourth-power bound and band cannot be combined")

    @property
    def family(self) -> str:
        if self.k_max is not None:
            return "kess"
        if self.band_slope is not None:
            return "bess"
        return "ess"


@dataclass
class ShapingTrellis:
    """Layered reachable-state graph with exact completion counts.

    layers[k] is a sorted int64 array of packed states at position k
    (k = 0..n); counts[k][i] is the number of admissible completions of
    layers[k][i]. total_count = counts[0][0]. Immutable after build; safe
    to share across threads.
    """

    alphabet: AmplitudeAlphabet
    constraints: ShapingConstraints
    layers: list[np.ndarray] = field(repr=False)
    counts: list[list[int]] = field(repr=False)

    @property
    def total_count(self) -> int:
        return self.counts[0][0]

    @property
    def bit_capacity(self) -> int:
        """floor(log2(total_count)): widest index bit-string always in range."""
        return self.total_count.bit_length() - 1

    @property
    def input_bits(self) -> int:
        """Index width used by the mapper: calibrated width if recorded."""
        if self.constraints.input_bits is not None:
            return self.constraints.input_bits
        return self.bit_capacity


def _step_deltas(alphabet: AmplitudeAlphabet, with_k: bool) -> list[int]:
    if with_k:
        return [(e << _KEY_SHIFT) + f for e, f in zip(alphabet.energies, alphabet.fourth_powers)]
    return list(alphabet.energies)


def _band_energy_window(constraints: ShapingConstraints, k: int) -> tuple[int, int]:
    """Inclusive [lo, hi] admissible cumulative energy at position k."""
    p = constraints.band_slope.numerator
    q = constraints.band_slope.denominator
    b = constraints.band_halfwidth
    lo = -(-(k * p - b * q) // q)  # ceil
    hi = (k * p + b * q) // q
    return lo, hi


def build_trellis(alphabet: AmplitudeAlphabet, constraints: ShapingConstraints) -> ShapingTrellis:
    """Build the layered trellis for the given constraint family.

    Forward pass keeps every accumulated state that can still be completed
    within the bounds (the all-minimum completion is the witness for the
    energy/fourth-power bounds); the band can create dead ends, which get
    completion count 0 in the backward pass and are then dropped.

    Raises EmptyTrellisError when some position has no reachable state.
    """
    n = constraints.n
    with_k = constraints.k_max is not None
    banded = constraints.band_slope is not None
    if with_k and n * max(alphabet.fourth_powers) >= (1 << _KEY_SHIFT):
        raise ShapingError("fourth-power sums exceed the packed state-key capacity")
    if n * max(alphabet.energies) >= (1 << (62 - _KEY_SHIFT if with_k else 62)):
        raise ShapingError("energy sums exceed the packed state-key capacity")
    deltas = np.array(_step_deltas(alphabet, with_k), dtype=np.int64)
    e_min = min(alphabet.energies)
    f_min = min(alphabet.fourth_powers)

    layers: list[np.ndarray] = [np.zeros(1, dtype=np.int64)]
    for k in range(n):
        rem = n - k - 1  # amplitudes still to place after this one
        cur = layers[-1]
        cands = []
        for d in deltas:
            nxt = cur + d
            e = (nxt >> _KEY_SHIFT) if with_k else nxt
            keep = e + rem * e_min <= constraints.e_max - 1
            if with_k:
                kap = nxt & _KEY_MASK
                keep &= kap + rem * f_min <= constraints.k_max - 1
            if banded:
                lo, hi = _band_energy_window(constraints, k + 1)
                keep &= (e >= lo) & (e <= hi)
            cands.append(nxt[keep])
        merged = np.unique(np.concatenate(cands))
        if merged.size == 0:
            raise EmptyTrellisError(k + 1)
        layers.append(merged)

    # Backward completion counts (exact integers).
    counts: list[list[int]] = [[]] * (n + 1)
    counts[n] = [1] * layers[n].size
    for k in range(n - 1, -1, -1):
        keys = layers[k]
        nxt = layers[k + 1]
        branch = []
        for d in deltas:
            t = keys + d
            j = np.searchsorted(nxt, t)
            j_clipped = np.minimum(j, nxt.size - 1)
            branch.append((j_clipped, nxt[j_clipped] == t))
        nxt_counts = counts[k + 1]
        counts[k] = [
            sum(nxt_counts[jj[i]] for jj, ok in branch if ok[i])
            for i in range(keys.size)
        ]

    # Drop band dead ends. Positions 0..n stay nonempty: every final state
    # is forward-reachable, so some path from the root carries count >= 1.
    if banded:
        for k in range(n + 1):
            alive = np.array([c > 0 for c in counts[k]], dtype=bool)
            if not alive.all():
                layers[k] = layers[k][alive]
                counts[k] = [c for c, a in zip(counts[k], alive) if a]

    return ShapingTrellis(alphabet, constraints, layers, counts)


def count_sequences(trellis: ShapingTrellis) -> int:
    """Number of admissible sequences (exact)."""
    return trellis.total_count


def encode_index(trellis: ShapingTrellis, index: int) -> np.ndarray:
    """Return the amplitude sequence of lexicographic rank `index`.

    Standard unranking: at each position scan amplitudes in ascending
    order, skipping the completion count of each earlier branch.
    """
    index = int(index)
    if not 0 <= index < trellis.total_count:
        raise ShapingError(
            f"index {index} out of range [0, {trellis.total_count})")
    cons = trellis.constraints
    deltas = _step_deltas(trellis.alphabet, cons.k_max is not None)
    values = trellis.alphabet.values
    out = np.empty(cons.n, dtype=np.int64)
    key = 0
    residual = index
    for k in range(cons.n):
        nxt = trellis.layers[k + 1]
        nxt_counts = trellis.counts[k + 1]
        for v, d in zip(values, deltas):
            t = key + d
            j = int(np.searchsorted(nxt, t))
            if j >= nxt.size or nxt[j] != t:
                continue
            c = nxt_counts[j]
            if residual < c:
                out[k] = v
                key = t
                break
            residual -= c
        else:  # pragma: no cover - impossible once index < total_count
            raise AssertionError("unranking exhausted branches")
    return out


def decode_sequence(trellis: ShapingTrellis, seq: Sequence[int]) -> int:
    """Lexicographic rank of an admissible sequence (inverse of encode_index)."""
    cons = trellis.constraints
    seq = [int(a) for a in seq]
    if len(seq) != cons.n:
        raise ShapingError(f"sequence length {len(seq)} != {cons.n}")
    value_pos = {v: i for i, v in enumerate(trellis.alphabet.values)}
    for k, a in enumerate(seq):
        if a not in value_pos:
            raise ShapingError(f"amplitude {a} at position {k + 1} not in alphabet")
    _check_admissible(cons, trellis.alphabet, seq)

    deltas = _step_deltas(trellis.alphabet, cons.k_max is not None)
    rank = 0
    key = 0
    for k, a in enumerate(seq):
        nxt = trellis.layers[k + 1]
        nxt_counts = trellis.counts[k + 1]
        stop = value_pos[a]
        for i, d in enumerate(deltas):
            t = key + d
            j = int(np.searchsorted(nxt, t))
            present = j < nxt.size and nxt[j] == t
            if i == stop:
                key = t
                break
            if present:
                rank += nxt_counts[j]
    return rank


def _check_admissible(cons: ShapingConstraints, alphabet: AmplitudeAlphabet, seq: list[int]) -> None:
    """Raise InadmissibleSequenceError at the first violated constraint.

    Running sums are monotone, so a violated end-of-sequence bound has a
    well-defined first position where the partial sum already exceeds it.
    """
    c_e = 0
    c_f = 0
    for k, a in enumerate(seq, start=1):
        c_e += a * a
        c_f += a ** 4
        if c_e >= cons.e_max:
            raise InadmissibleSequenceError("e_max", k)
        if cons.k_max is not None and c_f >= cons.k_max:
            raise InadmissibleSequenceError("k_max", k)
        if cons.band_slope is not None:
            lo, hi = _band_energy_window(cons, k)
            if not lo <= c_e <= hi:
                raise InadmissibleSequenceError("band", k)


def achievable_energies(alphabet: AmplitudeAlphabet, n: int) -> list[int]:
    """Sorted total energies realizable by some length-n sequence."""
    sums = {0}
    for _ in range(n):
        sums = {s + e for s in sums for e in alphabet.energies}
    return sorted(sums)


def constraints_from_rules(alphabet: AmplitudeAlphabet, n: int, e_max: int,
                     k_max_ratio: Optional[float],
                     band_slope: Optional[Fraction],
                     band_halfwidth: Optional[float],
                     input_bits: Optional[int] = None) -> ShapingConstraints:
    """Materialize constraints from an e_max and the relative rules."""
    k_max = None
    slope = None
    halfwidth = None
    if k_max_ratio is not None:
        # Fraction(str(...)) keeps decimal config values exact (2.2 -> 11/5).
        k_max = int(Fraction(str(k_max_ratio)) * e_max * e_max / n)
    if band_halfwidth is not None:
        slope = band_slope if band_slope is not None else Fraction(e_max - 1, n)
        halfwidth = int(Fraction(str(band_halfwidth)) * max(alphabet.energies))
    return ShapingConstraints(n=n, e_max=e_max, k_max=k_max,
                              band_slope=slope, band_halfwidth=halfwidth,
                              input_bits=input_bits)


def calibrate_emax(alphabet: AmplitudeAlphabet, n: int, target_rate: float,
                   k_max_ratio: Optional[float] = None,
                   band_slope: Optional[Fraction] = None,
                   band_halfwidth: Optional[float] = None) -> ShapingConstraints:
    """Smallest e_max at which the trellis carries ceil(n*target_rate) bits.

    target_rate is in bits per amplitude. The companion bounds are derived
    from each candidate e_max: k_max = k_max_ratio*e_max^2/n, and the band
    gets halfwidth band_halfwidth*max(step energy) around slope
    (e_max-1)/n unless an explicit slope is given. Candidates are the
    achievable total energies + 1. The returned constraints record
    input_bits = ceil(n*target_rate).
    """
    if target_rate > math.log2(len(alphabet)) + 1e-12:
        raise ShapingError("target rate exceeds log2(alphabet size)")
    want_bits = math.ceil(n * target_rate)
    cands = [e + 1 for e in achievable_energies(alphabet, n)]

    def bits_at(e_max: int) -> int:
        try:
            t = build_trellis(alphabet, constraints_from_rules(
                alphabet, n, e_max, k_max_ratio, band_slope, band_halfwidth))
        except EmptyTrellisError:
            return -1
        return t.bit_capacity

    if band_halfwidth is not None and band_slope is None:
        # Band center moves with e_max; the count need not be monotone.
        for e_max in cands:
            if bits_at(e_max) >= want_bits:
                return constraints_from_rules(alphabet, n, e_max, k_max_ratio,
                                        band_slope, band_halfwidth, want_bits)
        raise ShapingError(f"rate {target_rate} bit/amplitude unreachable for n={n}")
    # Energy/fourth-power bounds only loosen with e_max: bisect, then
    # confirm minimality against the previous candidate.
    lo, hi = 0, len(cands) - 1
    if bits_at(cands[hi]) < want_bits:
        raise ShapingError(f"rate {target_rate} bit/amplitude unreachable for n={n}")
    while lo < hi:
        mid = (lo + hi) // 2
        if bits_at(cands[mid]) >= want_bits:
            hi = mid
        else:
            lo = mid + 1
    if lo > 0 and bits_at(cands[lo - 1]) >= want_bits:  # pragma: no cover
        raise AssertionError("count not monotone in e_max")
    return constraints_from_rules(alphabet, n, cands[lo], k_max_ratio,
                            band_slope, band_halfwidth, want_bits)
