"""Fixed-point number handling for the datapath model.

The hardware datapath carries signed Q(word-frac).(frac) words and accumulates
products in a wider register. We model that exactly on top of int64: words and
accumulators are plain integers, so every arithmetic result is bit-reproducible
across platforms. Floats only appear at the quantize/dequantize boundary.

Rounding is half-away-from-zero everywhere (matching a DSP-style round unit),
and saturation clamps to the symmetric-ish two's complement range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class FxFormat:
    """Signed fixed-point format: ``word_bits`` total, ``frac_bits`` fractional.

    ``accumulator_bits`` is the width of the MAC accumulation register.
    Products of two words are Q(2*frac_bits); the accumulator keeps that
    scale until :func:`requantize_accumulator` folds it back to word scale.
    """

    word_bits: int = 16
    frac_bits: int = 8
    accumulator_bits: int = 48

    def __post_init__(self):
        if not (2 <= self.word_bits <= 32):
            raise ConfigError(f"word_bits out of range: {self.word_bits}")
        if not (0 <= self.frac_bits < self.word_bits):
            raise ConfigError(f"frac_bits out of range: {self.frac_bits}")
        if not (self.word_bits * 2 <= self.accumulator_bits <= 63):
            # needs headroom for at least one product, and must fit int64
            raise ConfigError(
                f"accumulator_bits out of range: {self.accumulator_bits}"
            )

    @property
    def scale(self) -> int:
        return 1 << self.frac_bits

    @property
    def word_min(self) -> int:
        return -(1 << (self.word_bits - 1))

    @property
    def word_max(self) -> int:
        return (1 << (self.word_bits - 1)) - 1

    @property
    def accumulator_min(self) -> int:
        return -(1 << (self.accumulator_bits - 1))

    @property
    def accumulator_max(self) -> int:
        return (1 << (self.accumulator_bits - 1)) - 1


def quantize(values, fmt: FxFormat) -> np.ndarray:
    """Convert floats to raw fixed-point words (int64 array).

    Half-away-from-zero rounding, then saturation to the word range.
    ``quantize(1.0)`` with frac_bits=8 is 256.
    """
    return quantize_with_count(values, fmt)[0]


def quantize_with_count(values, fmt: FxFormat) -> tuple[np.ndarray, int]:
    """Like :func:`quantize` but also reports how many elements saturated."""
    v = np.asarray(values, dtype=np.float64)
    scaled = np.abs(v) * fmt.scale + 0.5
    raw = (np.sign(v) * np.floor(scaled)).astype(np.int64)
    clipped = np.clip(raw, fmt.word_min, fmt.word_max)
    return clipped, int(np.count_nonzero(clipped != raw))


def dequantize(words, fmt: FxFormat) -> np.ndarray:
    return np.asarray(words, dtype=np.float64) / fmt.scale


def requantize_accumulator(acc, fmt: FxFormat) -> tuple[np.ndarray, int]:
    """Fold Q(2*frac) accumulator values back to word scale.

    Returns ``(words, n_saturated)``. Rounding is half-away-from-zero on the
    integer grid: add half an LSB of the result scale to the magnitude, then
    shift. Saturation count is how many elements clipped, which callers
    surface as a quality diagnostic.
    """
    a = np.asarray(acc, dtype=np.int64)
    if fmt.frac_bits == 0:
        rounded = a.copy()
    else:
        half = np.int64(1) << (fmt.frac_bits - 1)
        rounded = np.sign(a) * ((np.abs(a) + half) >> fmt.frac_bits)
    clipped = np.clip(rounded, fmt.word_min, fmt.word_max)
    n_sat = int(np.count_nonzero(clipped != rounded))
    return clipped, n_sat


def check_accumulator_range(acc, fmt: FxFormat) -> None:
    """Raise if any accumulator value left the modeled register range."""
    from .errors import AccumulatorOverflowError

    a = np.asarray(acc, dtype=np.int64)
    if a.size and (a.max(initial=0) > fmt.accumulator_max
                   or a.min(initial=0) < fmt.accumulator_min):
        raise AccumulatorOverflowError(
            f"accumulator exceeded {fmt.accumulator_bits} bits"
        )


def accumulation_bound(fmt: FxFormat, terms: int) -> int:
    """Worst-case accumulator magnitude after ``terms`` products.

    Used to decide statically whether a layer can overflow at all.
    """
    prod_max = max(abs(fmt.word_min), fmt.word_max) ** 2
    return terms * prod_max
