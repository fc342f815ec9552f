"""Sequential private reranking with two secret-sharing servers.

For each user in turn:

1. the servers locally compute shares of A - R and add jointly sampled
   Laplace noise (:func:`get_unfairness_metric`);
2. the client combines both servers' shares, solves its reranking problem
   and secret-shares the attention it gives each item and its normalized
   relevance (:func:`client_rerank`);
3. each server adds the uploaded shares to its aggregates
   (:func:`update_aggregation`).

Protocol state only ever holds shares. Plaintext metrics are computed by the
caller from the rerankings handed to an observer (see ``evaluation``).
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import List, Optional, Protocol, Sequence, Tuple

import numpy as np
from opentelemetry import trace
from opentelemetry.trace import Status, StatusCode

from .config import ExperimentConfig
from .errors import ConfigurationError, FairRankingError, ProtocolError
from .fairness import AttentionModel, RelevanceProfile, sensitivity
from .instrumentation import ProtocolMetrics
from .mpc import (
    SharedVector,
    pi_lap,
    reveal_to_client,
    share_add_local,
    share_reals,
    share_sub_local,
    share_vector,
)
from .ring import FixedPointCodec
from .solver import (
    Reranking,
    ScalingMode,
    apply_scaling,
    objective_scale,
    problem_for_profile,
    solve,
)
from .transport import InProcTransport, Transport, create_transport

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PrivacyParams:
    """Budget split: each of the n * L scalar releases gets epsilon / (n * L)."""

    epsilon: float
    n: int
    users: int
    delta_f: float
    noise_enabled: bool = True

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise ConfigurationError(f"epsilon must be > 0, got {self.epsilon}")
        if self.n < 1 or self.users < 1:
            raise ConfigurationError(
                f"need n >= 1 and L >= 1, got n={self.n}, L={self.users}"
            )
        if not self.delta_f > 0:
            raise ConfigurationError(f"sensitivity must be > 0, got {self.delta_f}")

    @property
    def total_queries(self) -> int:
        return self.n * self.users

    @property
    def per_query_epsilon(self) -> float:
        return self.epsilon / self.total_queries

    @property
    def b(self) -> float:
        """Laplace scale delta_f / (epsilon / (n * L))."""
        return self.delta_f * self.n * self.users / self.epsilon


@dataclass
class ServerState:
    party_id: int
    a: SharedVector
    r: SharedVector
    privacy: PrivacyParams
    users_served: int = 0
    noise_samples: int = 0

    @property
    def budget_spent(self) -> float:
        return self.noise_samples * self.privacy.per_query_epsilon


@dataclass
class ServerPair:
    """Both servers' states, their private generators, and the link between them."""

    states: Tuple[ServerState, ServerState]
    rngs: Tuple[np.random.Generator, np.random.Generator]
    transport: Transport
    codec: FixedPointCodec

    @property
    def privacy(self) -> PrivacyParams:
        return self.states[0].privacy

    @property
    def n(self) -> int:
        return self.privacy.n

    def close(self) -> None:
        self.transport.close()

    def __enter__(self) -> ServerPair:
        return self

    def __exit__(self, *exc) -> None:
        self.close()


@dataclass(frozen=True)
class ClientUpload:
    """What one server receives from a client: shares of w_hat* and r_hat."""

    party_id: int
    attention: SharedVector
    relevance: SharedVector


@dataclass
class ClientSession:
    user_id: int
    profile: RelevanceProfile
    xi: Optional[np.ndarray] = None
    reranking: Optional[Reranking] = None
    uploads: Optional[Tuple[ClientUpload, ClientUpload]] = None


class RerankObserver(Protocol):
    """Receives each user's plaintext reranking; lives outside protocol state."""

    def record(self, profile: RelevanceProfile, reranking: Reranking) -> None:
        ...

    def record_abort(self) -> None:
        ...


def initialize(
    n: int,
    users: int,
    epsilon: float,
    attention: Optional[AttentionModel] = None,
    delta_f: Optional[float] = None,
    *,
    noise_enabled: bool = True,
    codec: Optional[FixedPointCodec] = None,
    transport: Optional[Transport] = None,
    rngs: Optional[Tuple[np.random.Generator, np.random.Generator]] = None,
) -> ServerPair:
    """Set both servers' aggregates to sharings of zero and fix the noise scale."""
    if n < 1 or users < 1:
        raise ConfigurationError(f"need n >= 1 and L >= 1, got n={n}, L={users}")
    model = attention if attention is not None else AttentionModel(n)
    if model.n != n:
        raise ConfigurationError(f"attention model is for {model.n} items, not {n}")
    privacy = PrivacyParams(
        epsilon=epsilon,
        n=n,
        users=users,
        delta_f=delta_f if delta_f is not None else sensitivity(n, model),
        noise_enabled=noise_enabled,
    )
    codec = codec or FixedPointCodec()
    link = transport or InProcTransport()
    if rngs is None:
        parties = np.random.SeedSequence().spawn(2)
        rngs = (np.random.default_rng(parties[0]), np.random.default_rng(parties[1]))

    # Party 0 deals masked sharings of the zero vector for A and R.
    a_shares = share_vector(np.zeros(n, dtype=np.uint64), rngs[0])
    r_shares = share_vector(np.zeros(n, dtype=np.uint64), rngs[0])
    link.channel(0).send(a_shares[1].values)
    link.channel(0).send(r_shares[1].values)
    a1 = SharedVector(1, link.channel(1).recv())
    r1 = SharedVector(1, link.channel(1).recv())

    states = (
        ServerState(0, a_shares[0], r_shares[0], privacy),
        ServerState(1, a1, r1, privacy),
    )
    logger.debug(
        "initialized servers: n=%s L=%s epsilon=%s delta_f=%.6g b=%.6g noise=%s",
        n, users, epsilon, privacy.delta_f, privacy.b, noise_enabled,
    )
    return ServerPair(states=states, rngs=rngs, transport=link, codec=codec)


def get_unfairness_metric(servers: ServerPair) -> Tuple[SharedVector, SharedVector]:
    """Shares of A - R plus fresh Laplace(0, b) noise at every index."""
    s0, s1 = servers.states
    diff0 = share_sub_local(s0.a, s0.r)
    diff1 = share_sub_local(s1.a, s1.r)
    privacy = servers.privacy
    noise0, noise1 = pi_lap(
        privacy.b,
        servers.n,
        servers.rngs,
        codec=servers.codec,
        transport=servers.transport,
        enabled=privacy.noise_enabled,
    )
    for state in servers.states:
        state.noise_samples += servers.n
    return share_add_local(diff0, noise0), share_add_local(diff1, noise1)


def client_rerank(
    session: ClientSession,
    xi_shares: Tuple[SharedVector, SharedVector],
    *,
    k: int,
    theta: float,
    scaling: ScalingMode,
    epsilon: float,
    users: int,
    codec: FixedPointCodec,
    rng: np.random.Generator,
) -> Tuple[Tuple[ClientUpload, ClientUpload], Reranking]:
    """Solve the user's reranking locally and produce share uploads.

    Raw scores never leave this function; only shares of w_hat* and r_hat do.
    """
    if session.uploads is not None:
        raise ProtocolError(f"user {session.user_id} already uploaded this session")
    xi = apply_scaling(reveal_to_client(*xi_shares, codec), scaling, epsilon, users)
    problem, w_hat = problem_for_profile(xi, session.profile, theta, k)
    factor = objective_scale(scaling, epsilon, users)
    if factor != 1.0:
        problem = problem.scaled(factor)
    reranking = solve(problem)

    w_star = reranking.item_attention(w_hat)
    a0, a1 = share_reals(w_star, codec, rng)
    r0, r1 = share_reals(session.profile.normalized, codec, rng)
    uploads = (ClientUpload(0, a0, r0), ClientUpload(1, a1, r1))

    session.xi = xi
    session.reranking = reranking
    session.uploads = uploads
    return uploads, reranking


def update_aggregation(
    servers: ServerPair, uploads: Sequence[ClientUpload]
) -> None:
    """Add a client's shares to both aggregates; purely local on each server."""
    if len(uploads) != 2:
        raise ProtocolError(f"expected one upload per server, got {len(uploads)}")
    for state, upload in zip(servers.states, uploads):
        if upload.party_id != state.party_id:
            raise ProtocolError(
                f"upload for party {upload.party_id} sent to party {state.party_id}"
            )
        for name, vec in (("attention", upload.attention), ("relevance", upload.relevance)):
            if len(vec) != len(state.a) or vec.party_id != state.party_id:
                raise ProtocolError(
                    f"malformed {name} shares for party {state.party_id}: "
                    f"length {len(vec)}, party {vec.party_id}"
                )
        if state.users_served >= state.privacy.users:
            raise ProtocolError(
                f"party {state.party_id} already served {state.users_served} users"
            )
    for state, upload in zip(servers.states, uploads):
        state.a = share_add_local(state.a, upload.attention)
        state.r = share_add_local(state.r, upload.relevance)
        state.users_served += 1


@dataclass
class SequenceResult:
    """Outcome of one private run; ``rerankings[l]`` is None if user l aborted."""

    privacy: PrivacyParams
    rerankings: List[Optional[Reranking]] = field(default_factory=list)
    runtimes_ms: List[float] = field(default_factory=list)
    aborts: int = 0
    noise_samples: int = 0
    states: Optional[Tuple[ServerState, ServerState]] = None

    @property
    def epsilon_spent(self) -> float:
        return self.noise_samples * self.privacy.per_query_epsilon


def party_generators(
    seed: int,
) -> Tuple[Tuple[np.random.Generator, np.random.Generator], np.random.SeedSequence]:
    """Independent generators for both servers plus a seed sequence for clients."""
    party0, party1, clients = np.random.SeedSequence(seed).spawn(3)
    return (np.random.default_rng(party0), np.random.default_rng(party1)), clients


def run_sequence(
    profiles: Sequence[RelevanceProfile],
    config: ExperimentConfig,
    *,
    epsilon: float,
    seed: int,
    observer: Optional[RerankObserver] = None,
) -> SequenceResult:
    """Run the private protocol over all users in order."""
    if not profiles:
        raise ConfigurationError("run_sequence needs at least one user")
    n = profiles[0].n
    if any(p.n != n for p in profiles):
        raise ConfigurationError("all users must score the same items")
    users = len(profiles)
    k = min(config.depth, n)
    rngs, client_seeds = party_generators(seed)
    client_rngs = [np.random.default_rng(s) for s in client_seeds.spawn(users)]

    servers = initialize(
        n,
        users,
        epsilon,
        delta_f=1.0 if config.delta_f == "one" else None,
        noise_enabled=config.noise,
        codec=FixedPointCodec(config.fractional_bits),
        transport=create_transport(config.transport),
        rngs=rngs,
    )
    result = SequenceResult(privacy=servers.privacy)
    metrics = ProtocolMetrics(
        {"epsilon": float(epsilon), "seed": int(seed), "transport": config.transport}
    )
    tracer = trace.get_tracer(__name__)

    with servers:
        for user_id, profile in enumerate(profiles):
            session = ClientSession(user_id, profile)
            metrics.round_started()
            started = time.perf_counter()
            with tracer.start_as_current_span(
                "rerank_round",
                attributes={"user": user_id, "n": n, "epsilon": float(epsilon)},
            ) as span:
                try:
                    xi_shares = get_unfairness_metric(servers)
                    metrics.noise_drawn(n)
                    uploads, reranking = client_rerank(
                        session,
                        xi_shares,
                        k=k,
                        theta=config.theta,
                        scaling=config.scaling,
                        epsilon=epsilon,
                        users=users,
                        codec=servers.codec,
                        rng=client_rngs[user_id],
                    )
                    update_aggregation(servers, uploads)
                except FairRankingError as exc:
                    elapsed = time.perf_counter() - started
                    logger.warning("user %s aborted: %s", user_id, exc)
                    span.record_exception(exc)
                    span.set_status(Status(StatusCode.ERROR, str(exc)))
                    metrics.round_finished(elapsed, aborted=True)
                    result.rerankings.append(None)
                    result.runtimes_ms.append(elapsed * 1000.0)
                    result.aborts += 1
                    if observer is not None:
                        observer.record_abort()
                    continue
            elapsed = time.perf_counter() - started
            metrics.round_finished(elapsed)
            result.rerankings.append(reranking)
            result.runtimes_ms.append(elapsed * 1000.0)
            if observer is not None:
                observer.record(profile, reranking)
            logger.debug("user %s reranked in %.1f ms", user_id, elapsed * 1000.0)
        result.noise_samples = servers.states[0].noise_samples
        result.states = servers.states
    return result
