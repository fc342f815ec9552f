"""Two-party additive secret sharing over Z_{2^64} and distributed Laplace noise.

A secret x is split as x = x0 + x1 mod 2^64 with x0 uniform, so one share
alone is independent of x. The servers only ever add shares locally; the
one interactive step is :func:`pi_lap`, in which each server draws half of a
Laplace sample and secret-shares it with its peer over the transport.

The Laplace construction uses infinite divisibility: with G ~ Gamma(1/2, b),
Gamma(1/2, b) + Gamma(1/2, b) is Exp(b), and the difference of two Exp(b)
variables is Laplace(0, b). Each party therefore contributes G1 - G2 and the
sum of the two contributions is exactly Laplace(0, b).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import ParameterError, ProtocolError
from .ring import (
    FixedPointCodec,
    RingElement,
    as_ring_array,
    ring_add,
    ring_add_array,
    ring_neg_array,
    ring_sub_array,
)
from .transport import InProcTransport, Transport

_GAMMA_SHAPE = 0.5


@dataclass(frozen=True)
class Share:
    """One party's share of a scalar secret."""

    party_id: int
    value: RingElement

    def __post_init__(self) -> None:
        _check_party(self.party_id)


@dataclass(frozen=True, eq=False)
class SharedVector:
    """One party's shares of a length-n secret vector."""

    party_id: int
    values: np.ndarray

    def __post_init__(self) -> None:
        _check_party(self.party_id)
        object.__setattr__(self, "values", as_ring_array(self.values))

    def __len__(self) -> int:
        return len(self.values)


def _check_party(party_id: int) -> None:
    if party_id not in (0, 1):
        raise ProtocolError(f"party_id must be 0 or 1, got {party_id}")


def random_words(rng: np.random.Generator, count: int) -> np.ndarray:
    """Draw ``count`` uniform residues of Z_{2^64}."""
    return rng.integers(
        0, np.iinfo(np.uint64).max, size=count, dtype=np.uint64, endpoint=True
    )


def share(x: RingElement, rng: np.random.Generator) -> Tuple[Share, Share]:
    x0 = int(random_words(rng, 1)[0])
    x1 = ring_add(x, RingElement((-x0) % (1 << 64)))
    return Share(0, RingElement(x0)), Share(1, x1)


def reconstruct(s0: Share, s1: Share) -> RingElement:
    if (s0.party_id, s1.party_id) != (0, 1):
        raise ProtocolError(
            f"reconstruct needs shares of parties (0, 1), got "
            f"({s0.party_id}, {s1.party_id})"
        )
    return ring_add(s0.value, s1.value)


def share_vector(
    values: np.ndarray, rng: np.random.Generator
) -> Tuple[SharedVector, SharedVector]:
    """Split a vector of ring words into two additive sharings."""
    words = as_ring_array(values)
    mask = random_words(rng, len(words))
    return SharedVector(0, mask), SharedVector(1, ring_sub_array(words, mask))


def share_reals(
    values: Sequence[float], codec: FixedPointCodec, rng: np.random.Generator
) -> Tuple[SharedVector, SharedVector]:
    return share_vector(codec.encode_array(values), rng)


def _check_pair(v0: SharedVector, v1: SharedVector) -> None:
    if (v0.party_id, v1.party_id) != (0, 1):
        raise ProtocolError(
            "reconstruction requires party 0's and party 1's vectors, got "
            f"({v0.party_id}, {v1.party_id})"
        )
    if len(v0) != len(v1):
        raise ProtocolError(f"share length mismatch: {len(v0)} != {len(v1)}")


def reconstruct_vector(v0: SharedVector, v1: SharedVector) -> np.ndarray:
    _check_pair(v0, v1)
    return ring_add_array(v0.values, v1.values)


def _check_local(a: SharedVector, b: SharedVector) -> None:
    if a.party_id != b.party_id:
        raise ProtocolError(
            f"cannot combine shares of party {a.party_id} and party {b.party_id}"
        )
    if len(a) != len(b):
        raise ProtocolError(f"share length mismatch: {len(a)} != {len(b)}")


def share_add_local(a: SharedVector, b: SharedVector) -> SharedVector:
    """Add two sharings held by the same party; no communication."""
    _check_local(a, b)
    return SharedVector(a.party_id, ring_add_array(a.values, b.values))


def share_neg_local(a: SharedVector) -> SharedVector:
    return SharedVector(a.party_id, ring_neg_array(a.values))


def share_sub_local(a: SharedVector, b: SharedVector) -> SharedVector:
    _check_local(a, b)
    return SharedVector(a.party_id, ring_sub_array(a.values, b.values))


def zero_sharing(
    count: int, rng: np.random.Generator
) -> Tuple[SharedVector, SharedVector]:
    return share_vector(np.zeros(count, dtype=np.uint64), rng)


def laplace_contribution(
    b: float, count: int, rng: np.random.Generator
) -> np.ndarray:
    """One party's half of ``count`` Laplace(0, b) samples (real-valued)."""
    g1 = rng.gamma(_GAMMA_SHAPE, b, size=count)
    g2 = rng.gamma(_GAMMA_SHAPE, b, size=count)
    return g1 - g2


def pi_lap(
    b: float,
    count: int,
    rngs: Tuple[np.random.Generator, np.random.Generator],
    *,
    codec: FixedPointCodec,
    transport: Optional[Transport] = None,
    enabled: bool = True,
) -> Tuple[SharedVector, SharedVector]:
    """Jointly sample sharings of ``count`` Laplace(0, b) values.

    Each party encodes its own contribution, keeps one share of it and sends
    the other to its peer; its noise share is the kept share plus the share
    received. With ``enabled=False`` both contributions are zero, so the
    reconstruction is exactly zero while the shares stay masked.
    """
    if count < 1:
        raise ParameterError(f"count must be >= 1, got {count}")
    if enabled and not b > 0:
        raise ParameterError(f"Laplace scale must be positive, got {b}")

    # Both parties finish local work before anything goes on the wire, so a
    # failed encode never leaves a half-delivered round behind.
    split = []
    for party_id in (0, 1):
        rng = rngs[party_id]
        if enabled:
            contribution = codec.encode_array(laplace_contribution(b, count, rng))
        else:
            contribution = np.zeros(count, dtype=np.uint64)
        split.append(share_vector(contribution, rng))

    link = transport if transport is not None else InProcTransport()
    kept = []
    for party_id in (0, 1):
        pieces = split[party_id]
        link.channel(party_id).send(pieces[1 - party_id].values)
        kept.append(pieces[party_id].values)

    noise = []
    for party_id in (0, 1):
        received = link.channel(party_id).recv()
        if len(received) != count:
            raise ProtocolError(
                f"party {party_id} received {len(received)} noise words, "
                f"expected {count}"
            )
        noise.append(SharedVector(party_id, ring_add_array(kept[party_id], received)))
    if transport is None:
        link.close()
    return noise[0], noise[1]


def reveal_to_client(
    v0: SharedVector, v1: SharedVector, codec: FixedPointCodec
) -> np.ndarray:
    """Combine both servers' vectors and decode them to reals.

    There is no single-share decode; one share alone is uniform noise.
    """
    return codec.decode_array(reconstruct_vector(v0, v1))
