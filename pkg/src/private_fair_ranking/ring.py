"""Fixed-point reals in the ring Z_{2^64}.

Every value the two servers hold is a residue modulo 2^64. Reals are mapped
into the ring by scaling with 2^f and rounding half away from zero; the upper
half of the ring holds negative numbers (two's complement), so decoding uses
the centered lift. Vector forms operate on ``numpy.uint64`` arrays, whose
unsigned arithmetic already wraps modulo 2^64.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import ParameterError, RingRangeError

RING_BITS = 64
MODULUS = 1 << RING_BITS
_MASK = MODULUS - 1
_HALF = 1 << (RING_BITS - 1)

DEFAULT_FRACTIONAL_BITS = 20

ArrayLike = Union[np.ndarray, Sequence[float]]


@dataclass(frozen=True)
class RingElement:
    """A residue in Z_{2^64}."""

    value: int

    def __post_init__(self) -> None:
        if not 0 <= self.value < MODULUS:
            raise RingRangeError(f"ring value {self.value} outside [0, 2^64)")

    def __add__(self, other: RingElement) -> RingElement:
        return ring_add(self, other)

    def __neg__(self) -> RingElement:
        return ring_neg(self)

    def __sub__(self, other: RingElement) -> RingElement:
        return ring_add(self, ring_neg(other))


@dataclass(frozen=True)
class FixedPointCodec:
    """Maps reals in [-2^(63-f), 2^(63-f)) onto the ring with f fractional bits."""

    fractional_bits: int = DEFAULT_FRACTIONAL_BITS

    def __post_init__(self) -> None:
        if not 0 <= self.fractional_bits < RING_BITS - 1:
            raise ParameterError(
                f"fractional_bits must be in [0, 62], got {self.fractional_bits}"
            )

    @property
    def scale(self) -> float:
        return float(1 << self.fractional_bits)

    @property
    def resolution(self) -> float:
        """Distance between two adjacent representable reals."""
        return 1.0 / self.scale

    @property
    def bound(self) -> float:
        """Exclusive upper end of the representable range (the lower end is -bound)."""
        return float(1 << (RING_BITS - 1 - self.fractional_bits))

    def encode_array(self, values: ArrayLike) -> np.ndarray:
        x = np.asarray(values, dtype=np.float64)
        if not np.all(np.isfinite(x)):
            raise RingRangeError("cannot encode NaN or infinite values")
        scaled = np.sign(x) * np.floor(np.abs(x) * self.scale + 0.5)
        if np.any(scaled >= float(_HALF)) or np.any(scaled < -float(_HALF)):
            worst = float(x.flat[int(np.argmax(np.abs(x)))])
            raise RingRangeError(
                f"value {worst!r} outside representable range "
                f"[-{self.bound:g}, {self.bound:g}) for f={self.fractional_bits}"
            )
        return scaled.astype(np.int64).view(np.uint64)

    def decode_array(self, words: np.ndarray) -> np.ndarray:
        ring = np.asarray(words, dtype=np.uint64)
        return ring.view(np.int64).astype(np.float64) / self.scale

    def encode(self, x: float) -> RingElement:
        return RingElement(int(self.encode_array(np.array([x]))[0]))

    def decode(self, e: RingElement) -> float:
        return float(self.decode_array(np.array([e.value], dtype=np.uint64))[0])


def encode(x: float, codec: FixedPointCodec) -> RingElement:
    """Return round(x * 2^f) as a ring residue; negatives wrap to the upper half."""
    return codec.encode(x)


def decode(e: RingElement, codec: FixedPointCodec) -> float:
    return codec.decode(e)


def ring_add(a: RingElement, b: RingElement) -> RingElement:
    return RingElement((a.value + b.value) & _MASK)


def ring_neg(a: RingElement) -> RingElement:
    return RingElement((-a.value) & _MASK)


def ring_add_array(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.add(a, b, dtype=np.uint64)


def ring_neg_array(a: np.ndarray) -> np.ndarray:
    return np.subtract(np.uint64(0), a, dtype=np.uint64)


def ring_sub_array(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.subtract(a, b, dtype=np.uint64)


def as_ring_array(values: ArrayLike) -> np.ndarray:
    """Coerce integer residues (Python ints allowed up to 2^64 - 1) into uint64."""
    if isinstance(values, np.ndarray) and values.dtype == np.uint64:
        return values
    return np.array([int(v) & _MASK for v in values], dtype=np.uint64)
