"""Ordered, reliable message channels between the two computing servers.

A :class:`Transport` owns both directions of the link; each server obtains
its own endpoint with :meth:`Transport.channel` and only ever sees ring words
(``numpy.uint64`` vectors). Two implementations exist:

* :class:`InProcTransport`: a pair of FIFO queues, the default for desk runs.
* :class:`TcpTransport`: a real localhost socket pair. Frames are a 4-byte
  big-endian payload length followed by the payload, a sequence of
  little-endian 64-bit ring words. A reader thread per endpoint drains the
  socket into a queue so large payloads never stall the sender.
"""

from __future__ import annotations

import logging
import queue
import socket
import struct
import threading
from abc import ABC, abstractmethod
from typing import Dict, List, Optional

import numpy as np

from .errors import ParameterError, TransportError

logger = logging.getLogger(__name__)

_HEADER = struct.Struct(">I")
_WORD = np.dtype("<u8")
_CLOSED = object()

DEFAULT_TIMEOUT_S = 30.0


class Channel(ABC):
    """One party's end of the link: sends to and receives from the peer."""

    def __init__(self, party_id: int) -> None:
        self.party_id = party_id

    @property
    def peer_id(self) -> int:
        return 1 - self.party_id

    @abstractmethod
    def send(self, words: np.ndarray) -> None:
        """Deliver a vector of ring words to the peer."""

    @abstractmethod
    def recv(self) -> np.ndarray:
        """Block until the next vector from the peer arrives."""


class Transport(ABC):
    """A bidirectional link between party 0 and party 1."""

    mode: str = ""

    @abstractmethod
    def channel(self, party_id: int) -> Channel:
        """Return the endpoint used by ``party_id``."""

    def close(self) -> None:
        """Release sockets and threads; idempotent."""

    def __enter__(self) -> Transport:
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    @staticmethod
    def _check_party(party_id: int) -> None:
        if party_id not in (0, 1):
            raise ParameterError(f"party_id must be 0 or 1, got {party_id}")


class _QueueChannel(Channel):
    def __init__(
        self,
        party_id: int,
        outbox: queue.Queue,
        inbox: queue.Queue,
        timeout: float,
    ) -> None:
        super().__init__(party_id)
        self._outbox = outbox
        self._inbox = inbox
        self._timeout = timeout

    def send(self, words: np.ndarray) -> None:
        # Copy so later mutation by the sender cannot reach the peer.
        self._outbox.put(np.array(words, dtype=np.uint64, copy=True))

    def recv(self) -> np.ndarray:
        try:
            item = self._inbox.get(timeout=self._timeout)
        except queue.Empty:
            raise TransportError(
                f"party {self.party_id}: no message from party {self.peer_id} "
                f"within {self._timeout:g}s"
            ) from None
        if item is _CLOSED:
            raise TransportError(f"party {self.party_id}: channel closed")
        return item


class InProcTransport(Transport):
    """Two FIFO queues, one per direction."""

    mode = "inproc"

    def __init__(self, timeout: float = DEFAULT_TIMEOUT_S) -> None:
        to_one: queue.Queue = queue.Queue()
        to_zero: queue.Queue = queue.Queue()
        self._channels = {
            0: _QueueChannel(0, outbox=to_one, inbox=to_zero, timeout=timeout),
            1: _QueueChannel(1, outbox=to_zero, inbox=to_one, timeout=timeout),
        }

    def channel(self, party_id: int) -> Channel:
        self._check_party(party_id)
        return self._channels[party_id]


def encode_frame(words: np.ndarray) -> bytes:
    payload = np.ascontiguousarray(words, dtype=np.uint64).astype(_WORD).tobytes()
    return _HEADER.pack(len(payload)) + payload


def decode_payload(payload: bytes) -> np.ndarray:
    if len(payload) % _WORD.itemsize:
        raise TransportError(
            f"frame payload of {len(payload)} bytes is not a whole number of words"
        )
    return np.frombuffer(payload, dtype=_WORD).astype(np.uint64)


def _recv_exact(sock: socket.socket, size: int) -> Optional[bytes]:
    chunks: List[bytes] = []
    remaining = size
    while remaining:
        chunk = sock.recv(remaining)
        if not chunk:
            return None
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


class _SocketChannel(Channel):
    def __init__(self, party_id: int, sock: socket.socket, timeout: float) -> None:
        super().__init__(party_id)
        self._sock = sock
        self._timeout = timeout
        self._inbox: queue.Queue = queue.Queue()
        self._reader = threading.Thread(
            target=self._read_loop,
            name=f"tcp-reader-{party_id}",
            daemon=True,
        )
        self._reader.start()

    def _read_loop(self) -> None:
        try:
            while True:
                header = _recv_exact(self._sock, _HEADER.size)
                if header is None:
                    break
                (length,) = _HEADER.unpack(header)
                payload = _recv_exact(self._sock, length)
                if payload is None:
                    logger.warning(
                        "party %s: connection dropped mid-frame", self.party_id
                    )
                    break
                self._inbox.put(payload)
        except OSError:
            logger.debug("party %s: reader stopped", self.party_id)
        finally:
            self._inbox.put(_CLOSED)

    def send(self, words: np.ndarray) -> None:
        try:
            self._sock.sendall(encode_frame(words))
        except OSError as exc:
            raise TransportError(f"party {self.party_id}: send failed: {exc}") from exc

    def recv(self) -> np.ndarray:
        try:
            item = self._inbox.get(timeout=self._timeout)
        except queue.Empty:
            raise TransportError(
                f"party {self.party_id}: no frame from party {self.peer_id} "
                f"within {self._timeout:g}s"
            ) from None
        if item is _CLOSED:
            # Leave the marker for any later recv call.
            self._inbox.put(_CLOSED)
            raise TransportError(f"party {self.party_id}: connection closed")
        return decode_payload(item)

    def close(self) -> None:
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()
        self._reader.join(timeout=1.0)


class TcpTransport(Transport):
    """Localhost TCP link; party 0 listens, party 1 connects."""

    mode = "tcp"

    def __init__(
        self,
        host: str = "127.0.0.1",
        port: int = 0,
        timeout: float = DEFAULT_TIMEOUT_S,
    ) -> None:
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        try:
            listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
            listener.bind((host, port))
            listener.listen(1)
            listener.settimeout(timeout)
            self.address = listener.getsockname()
            client = socket.create_connection(self.address, timeout=timeout)
            server, _ = listener.accept()
        except OSError as exc:
            raise TransportError(f"could not open TCP link on {host}: {exc}") from exc
        finally:
            listener.close()
        for sock in (server, client):
            sock.settimeout(None)
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self._channels: Dict[int, _SocketChannel] = {
            0: _SocketChannel(0, server, timeout),
            1: _SocketChannel(1, client, timeout),
        }
        logger.debug("TCP link between parties open on %s:%s", *self.address)

    def channel(self, party_id: int) -> Channel:
        self._check_party(party_id)
        if party_id not in self._channels:
            raise TransportError("TCP link already closed")
        return self._channels[party_id]

    def close(self) -> None:
        for ch in self._channels.values():
            ch.close()
        self._channels.clear()


def create_transport(mode: str, timeout: float = DEFAULT_TIMEOUT_S) -> Transport:
    """Build a transport from its configuration name (``inproc`` or ``tcp``)."""
    if mode == "inproc":
        return InProcTransport(timeout=timeout)
    if mode == "tcp":
        return TcpTransport(timeout=timeout)
    raise ParameterError(f"unknown transport mode {mode!r}")
