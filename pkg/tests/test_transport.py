"""Tests for the in-process and TCP links between the two servers."""

from __future__ import annotations

import struct

import numpy as np
import pytest

from private_fair_ranking.errors import ParameterError, TransportError
from private_fair_ranking.transport import (
    InProcTransport,
    TcpTransport,
    create_transport,
    decode_payload,
    encode_frame,
)

LINKS = [InProcTransport, TcpTransport]


class TestFraming:
    def test_header_is_big_endian_byte_length(self) -> None:
        frame = encode_frame(np.array([1, 2, 3], dtype=np.uint64))
        assert struct.unpack(">I", frame[:4])[0] == 24
        assert frame[4:12] == (1).to_bytes(8, "little")

    def test_payload_roundtrip(self) -> None:
        words = np.array([0, 1, 2**64 - 1], dtype=np.uint64)
        assert decode_payload(encode_frame(words)[4:]).tolist() == words.tolist()

    def test_partial_word_rejected(self) -> None:
        with pytest.raises(TransportError):
            decode_payload(b"\x00" * 9)


@pytest.mark.parametrize("link_cls", LINKS)
class TestLink:
    def test_both_directions(self, link_cls) -> None:
        with link_cls() as link:
            link.channel(0).send(np.array([7, 8], dtype=np.uint64))
            link.channel(1).send(np.array([9], dtype=np.uint64))
            assert link.channel(1).recv().tolist() == [7, 8]
            assert link.channel(0).recv().tolist() == [9]

    def test_fifo_order(self, link_cls) -> None:
        with link_cls() as link:
            for i in range(5):
                link.channel(0).send(np.array([i], dtype=np.uint64))
            received = [int(link.channel(1).recv()[0]) for _ in range(5)]
        assert received == [0, 1, 2, 3, 4]

    def test_large_payload(self, link_cls) -> None:
        words = np.arange(200_000, dtype=np.uint64) * np.uint64(2**40 + 1)
        with link_cls() as link:
            link.channel(0).send(words)
            assert np.array_equal(link.channel(1).recv(), words)

    def test_unknown_party(self, link_cls) -> None:
        with link_cls() as link:
            with pytest.raises(ParameterError):
                link.channel(2)

    def test_peer_id(self, link_cls) -> None:
        with link_cls() as link:
            assert link.channel(0).peer_id == 1
            assert link.channel(1).peer_id == 0


class TestTimeoutsAndClose:
    def test_inproc_recv_timeout(self) -> None:
        link = InProcTransport(timeout=0.05)
        with pytest.raises(TransportError, match="within"):
            link.channel(0).recv()

    def test_tcp_recv_timeout(self) -> None:
        with TcpTransport(timeout=0.05) as link:
            with pytest.raises(TransportError):
                link.channel(1).recv()

    def test_tcp_channel_after_close(self) -> None:
        link = TcpTransport()
        link.close()
        with pytest.raises(TransportError, match="closed"):
            link.channel(0)

    def test_tcp_close_is_idempotent(self) -> None:
        link = TcpTransport()
        link.close()
        link.close()


class TestCreateTransport:
    def test_inproc(self) -> None:
        assert create_transport("inproc").mode == "inproc"

    def test_tcp(self) -> None:
        with create_transport("tcp") as link:
            assert link.mode == "tcp"
            assert link.address[0] == "127.0.0.1"

    def test_unknown_mode(self) -> None:
        with pytest.raises(ParameterError):
            create_transport("udp")
