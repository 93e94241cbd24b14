"""End-to-end simulation of the GHZ-based shuffle-model summation protocol.

Flow of one run:

1. the server prepares an n-qudit GHZ state;
2. each share is teleported to its client over a fresh Bell pair, the server
   sending the correction (l, s) classically;
3. each client randomizes its input x_i into y_i;
4. each client applies Z^{y_i}, then H, and measures, reporting z_i;
5. the server decodes m = -sum z_i (mod d) and de-biases it.

Three backends share this orchestration: ``statevector`` (exact amplitudes,
explicit teleportation), ``tableau`` (stabilizer simulation starting from the
already distributed GHZ state) and ``analytic`` (the closed-form outcome law).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Sequence

import numpy as np

from qshuffle import statevec as sv
from qshuffle import tableau as tb
from qshuffle.arith import next_prime, require_prime
from qshuffle.dp import RandomizerConfig, debias, randomize
from qshuffle.errors import ConfigError, DomainError, ProtocolError, UnsupportedDimensionError

BACKENDS = ("statevector", "tableau", "analytic")
SERVER = "server"


def client_id(i: int) -> str:
    return f"client{i}"


@dataclass(frozen=True)
class ProtocolConfig:
    n: int
    kappa: int
    d: int
    randomizer: RandomizerConfig
    backend: str = "statevector"
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError(f"the protocol needs at least 2 clients, got n={self.n}")
        require_prime(self.d)
        if self.d <= (self.kappa - 1) * self.n:
            raise ConfigError(
                f"d={self.d} must exceed (kappa-1)*n={(self.kappa - 1) * self.n} so the sum is recoverable mod d"
            )
        if self.randomizer.kappa != self.kappa:
            raise ConfigError("randomizer kappa does not match protocol kappa")
        if self.backend not in BACKENDS:
            raise ConfigError(f"unknown backend {self.backend!r}; choose from {', '.join(BACKENDS)}")
        if self.backend == "tableau" and self.d == 2:
            raise UnsupportedDimensionError("tableau backend requires an odd prime d")
        if self.backend == "statevector":
            sv.check_size(self.n + 2, self.d)

    @classmethod
    def create(
        cls,
        n: int,
        kappa: int,
        *,
        d: int | None = None,
        gamma: float | None = None,
        epsilon: float | None = None,
        backend: str = "statevector",
        seed: int = 0,
    ) -> ProtocolConfig:
        """Build a config from exactly one of gamma / epsilon; d defaults to the smallest valid prime."""
        if (gamma is None) == (epsilon is None):
            raise ConfigError("supply exactly one of gamma and epsilon")
        rc = RandomizerConfig.from_epsilon(kappa, epsilon) if epsilon is not None else RandomizerConfig(kappa, gamma)
        if d is None:
            d = next_prime((kappa - 1) * n)
        return cls(n, kappa, d, rc, backend, seed)

    @property
    def gamma(self) -> float:
        return self.randomizer.gamma


# -- classical messages and the channel --------------------------------------


class MessageKind(str, Enum):
    TELEPORT_CORRECTION = "teleport_correction"
    MEASUREMENT_REPORT = "measurement_report"


@dataclass(frozen=True)
class ClassicalMessage:
    kind: MessageKind
    sender: str
    receiver: str
    payload: tuple[int, ...]

    def __post_init__(self):
        kind = MessageKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "payload", tuple(int(v) for v in self.payload))
        if kind is MessageKind.TELEPORT_CORRECTION:
            if self.sender != SERVER or not self.receiver.startswith("client"):
                raise ProtocolError("teleport corrections flow server -> client only")
            if len(self.payload) != 2:
                raise ProtocolError("a teleport correction carries (l, s)")
        else:
            if self.receiver != SERVER or not self.sender.startswith("client"):
                raise ProtocolError("measurement reports flow client -> server only")
            if len(self.payload) != 1:
                raise ProtocolError("a measurement report carries a single z_i")

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "sender": self.sender, "receiver": self.receiver, "payload": list(self.payload)}

    @classmethod
    def from_dict(cls, data: dict) -> ClassicalMessage:
        return cls(MessageKind(data["kind"]), data["sender"], data["receiver"], tuple(data["payload"]))


@dataclass
class Channel:
    """In-process authenticated classical channel that records a total order."""

    log: list[ClassicalMessage] = field(default_factory=list)

    def send(self, message: ClassicalMessage) -> ClassicalMessage:
        self.log.append(message)
        return message

    def inbox(self, party: str) -> list[ClassicalMessage]:
        return [m for m in self.log if m.receiver == party]


# -- parties -----------------------------------------------------------------------


class ClientState(str, Enum):
    WAITING_FOR_SHARE = "waiting_for_share"
    HOLDING_SHARE = "holding_share"
    REPORTED = "reported"


@dataclass
class Client:
    index: int
    x: int
    y: int | None = None
    correction: tuple[int, int] | None = None
    z: int | None = None
    state: ClientState = ClientState.WAITING_FOR_SHARE

    @property
    def name(self) -> str:
        return client_id(self.index)

    def receive_share(self, correction: tuple[int, int] | None = None) -> None:
        if self.state is not ClientState.WAITING_FOR_SHARE:
            raise ProtocolError(f"{self.name} already holds a share")
        self.correction = correction
        self.state = ClientState.HOLDING_SHARE

    def choose_output(self, config: RandomizerConfig, rng: np.random.Generator) -> int:
        if self.state is not ClientState.HOLDING_SHARE:
            raise ProtocolError(f"{self.name} cannot randomize before receiving its share")
        self.y = randomize(self.x, config, rng)
        return self.y

    def report(self, z: int, channel: Channel) -> ClassicalMessage:
        if self.state is not ClientState.HOLDING_SHARE or self.y is None:
            raise ProtocolError(f"{self.name} cannot report in state {self.state.value}")
        self.z = int(z)
        self.state = ClientState.REPORTED
        return channel.send(ClassicalMessage(MessageKind.MEASUREMENT_REPORT, self.name, SERVER, (self.z,)))


@dataclass
class Server:
    n: int
    d: int
    m: int | None = None

    def send_correction(self, client: int, correction: tuple[int, int], channel: Channel) -> ClassicalMessage:
        return channel.send(ClassicalMessage(MessageKind.TELEPORT_CORRECTION, SERVER, client_id(client), correction))

    def decode(self, channel: Channel) -> int:
        reports = [m for m in channel.inbox(SERVER) if m.kind is MessageKind.MEASUREMENT_REPORT]
        if len(reports) != self.n:
            raise ProtocolError(f"expected {self.n} reports, got {len(reports)}")
        self.m = server_decode([m.payload[0] for m in reports], self.d)
        return self.m


# -- quantum steps -------------------------------------------------------------------


def prepare_bell(d: int) -> sv.StateVector:
    return prepare_ghz(2, d)


def prepare_ghz(n: int, d: int) -> sv.StateVector:
    """H on qudit 0 then CX fanned out from qudit 0: (1/sqrt d) sum_j |j...j>."""
    require_prime(d)
    if n < 1:
        raise DomainError("GHZ state needs at least one qudit")
    psi = sv.zero_state(n, d)
    sv.apply_h(psi, 0)
    for t in range(1, n):
        sv.apply_cx(psi, 0, t)
    return psi


def teleport_share(
    state: sv.StateVector,
    share_index: int,
    rng: np.random.Generator,
    *,
    outcome: tuple[int, int] | None = None,
) -> tuple[tuple[int, int], sv.StateVector]:
    """Server side of teleporting qudit ``share_index`` to a client over a fresh Bell pair.

    Returns ``((l, s), state)``. The returned state has the same qudit count;
    the client's Bell half sits at ``share_index`` and still needs the
    correction from :func:`apply_correction`.
    """
    state._check_target(share_index)
    n = state.n
    psi = sv.tensor(state, prepare_bell(state.d))
    server_half = n
    sv.apply_cx(psi, share_index, server_half, inverse=True)
    forced_l, forced_s = (None, None) if outcome is None else outcome
    # S and the later H act on different qudits, so S can be measured first
    s, psi = sv.measure_out(psi, server_half, rng, outcome=forced_s)
    sv.apply_h(psi, share_index)
    l, psi = sv.measure_out(psi, share_index, rng, outcome=forced_l)
    # the client half is now the last qudit; put it where the share was
    psi = sv.move_qudit(psi, n - 1, share_index)
    return (l, s), psi


def apply_correction(state: sv.StateVector, qudit: int, correction: tuple[int, int]) -> sv.StateVector:
    """Client side of teleportation: X^{-s} then Z^{-l}."""
    l, s = correction
    sv.apply_x_pow(state, qudit, -s)
    sv.apply_z_pow(state, qudit, -l)
    return state


def encode_output(state, qudit: int, y: int):
    """Encode y as Z^{y} on the client's qudit (either backend)."""
    if isinstance(state, tb.StabilizerTableau):
        return tb.apply_z_pow(state, qudit, y)
    return sv.apply_z_pow(state, qudit, y)


def client_local_ops(state, client_qudit: int, y: int, rng: np.random.Generator) -> int:
    """Z^{y}, H, then a computational-basis measurement; returns z_i."""
    if isinstance(state, tb.StabilizerTableau):
        tb.apply_z_pow(state, client_qudit, y)
        tb.apply_h(state, client_qudit)
        z, _ = tb.measure_z(state, client_qudit, rng)
        return int(z)
    sv.apply_z_pow(state, client_qudit, y)
    sv.apply_h(state, client_qudit)
    z, _ = sv.measure_z(state, client_qudit, rng)
    return int(z)


def server_decode(reports: Sequence[int], d: int) -> int:
    """m = -(z_1 + ... + z_n) mod d."""
    total = 0
    for z in reports:
        z = int(z)
        if not 0 <= z < d:
            raise ProtocolError(f"report {z} outside Z_{d}")
        total += z
    return (-total) % d


def analytic_sample(m: int, n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """Exact outcome law: z_1..z_{n-1} uniform, z_n fixed by sum z = -m (mod d)."""
    return analytic_sample_batch(m, n, d, rng, 1)[0]


def analytic_sample_batch(m, n: int, d: int, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` independent draws of analytic_sample as a (size, n) array; ``m`` may be per-row."""
    z = np.empty((size, n), dtype=np.int64)
    z[:, : n - 1] = rng.integers(d, size=(size, n - 1))
    z[:, n - 1] = (-np.asarray(m, dtype=np.int64) - z[:, : n - 1].sum(axis=1)) % d
    return z


# -- dit flip channel ----------------------------------------------------------------


@lru_cache(maxsize=256)
def _dit_flip_law(x: int, kappa: int, d: int, gamma: float) -> np.ndarray:
    """Joint law of (j, y') after CX from the environment mixture onto |x>.

    Computed from the density matrix rho_e (x) |x><x| conjugated by CX; the
    diagonal gives Pr[environment j, register y'].
    """
    p = 1.0 - (kappa - 1) * gamma / kappa
    env = np.zeros(d)
    env[0] = p
    env[1:kappa] = (1.0 - p) / (kappa - 1)
    reg = np.zeros(d)
    reg[x] = 1.0
    rho = np.kron(np.diag(env), np.diag(reg)).astype(complex)
    cx = sv.cx_matrix(d)
    out = sv.DensityMatrix((d, d), cx @ rho @ cx.conj().T)
    law = np.clip(np.real(np.diag(out.matrix)), 0.0, None).reshape(d, d)
    law.setflags(write=False)
    return law / law.sum()


def _check_dit_flip(x: int, kappa: int, d: int, gamma: float) -> None:
    require_prime(d)
    if d <= 2 * (kappa - 1):
        raise DomainError(f"dit flip channel needs d > 2(kappa-1) = {2 * (kappa - 1)}, got d={d}")
    if not 0 <= x < kappa:
        raise DomainError(f"input {x} outside [0, {kappa})")
    if not 0 <= gamma <= 1:
        raise DomainError("gamma must lie in [0, 1]")


def quantum_randomize_batch(x: int, kappa: int, d: int, gamma: float, rng: np.random.Generator, size: int):
    """Sample ``size`` runs of the channel; returns arrays (j, y', y) with y = y' mod kappa."""
    _check_dit_flip(x, kappa, d, gamma)
    law = _dit_flip_law(int(x), int(kappa), int(d), float(gamma))
    flat = rng.choice(d * d, size=size, p=law.ravel())
    j, y_prime = np.divmod(flat, d)
    return j, y_prime, y_prime % kappa


def quantum_randomize(x: int, kappa: int, d: int, gamma: float, rng: np.random.Generator) -> int:
    _, _, y = quantum_randomize_batch(x, kappa, d, gamma, rng, 1)
    return int(y[0])


# -- transcripts ------------------------------------------------------------------------


@dataclass(frozen=True)
class ClientRecord:
    x: int
    y: int
    correction: tuple[int, int] | None
    z: int

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "y": self.y,
            "correction": None if self.correction is None else list(self.correction),
            "z": self.z,
        }

    @classmethod
    def from_dict(cls, data: dict) -> ClientRecord:
        corr = data["correction"]
        return cls(data["x"], data["y"], None if corr is None else tuple(corr), data["z"])


@dataclass(frozen=True)
class ProtocolTranscript:
    n: int
    kappa: int
    d: int
    gamma: float
    backend: str
    seed: int
    clients: tuple[ClientRecord, ...]
    messages: tuple[ClassicalMessage, ...]
    z: int
    estimate: float | None

    @property
    def reports(self) -> list[int]:
        return [c.z for c in self.clients]

    @property
    def y_sum(self) -> int:
        return sum(c.y for c in self.clients)

    def check_invariants(self) -> None:
        if self.z != server_decode(self.reports, self.d):
            raise ProtocolError("decoded z does not match the reports")
        if self.backend != "analytic" and self.z != self.y_sum:
            raise ProtocolError(f"decoded {self.z} differs from sum y = {self.y_sum}")
        for msg in self.messages:
            ClassicalMessage.from_dict(msg.to_dict())

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "kappa": self.kappa,
            "d": self.d,
            "gamma": self.gamma,
            "backend": self.backend,
            "seed": self.seed,
            "clients": [c.to_dict() for c in self.clients],
            "messages": [m.to_dict() for m in self.messages],
            "z": self.z,
            "estimate": self.estimate,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict) -> ProtocolTranscript:
        return cls(
            n=data["n"],
            kappa=data["kappa"],
            d=data["d"],
            gamma=data["gamma"],
            backend=data["backend"],
            seed=data["seed"],
            clients=tuple(ClientRecord.from_dict(c) for c in data["clients"]),
            messages=tuple(ClassicalMessage.from_dict(m) for m in data["messages"]),
            z=data["z"],
            estimate=data["estimate"],
        )

    @classmethod
    def from_json(cls, text: str) -> ProtocolTranscript:
        return cls.from_dict(json.loads(text))


# -- orchestration -----------------------------------------------------------------------


def _estimate(m: int, config: ProtocolConfig) -> float | None:
    if config.gamma >= 1:
        return None
    return debias(m, config.n, config.kappa, config.gamma)


def distribute_ghz(n: int, d: int, backend: str, rng: np.random.Generator):
    """Prepare the GHZ state and hand out its shares; returns ``(state, corrections)``.

    ``statevector`` teleports every share and applies the client correction;
    ``tableau`` starts from the distributed GHZ tableau (teleportation acts as
    the identity on the joint state) and ``analytic`` has no state at all.
    Corrections are ``None`` whenever no teleportation was simulated.
    """
    if backend == "statevector":
        state = prepare_ghz(n, d)
        corrections = []
        for i in range(n):
            correction, state = teleport_share(state, i, rng)
            apply_correction(state, i, correction)
            corrections.append(correction)
        return state, corrections
    if backend == "tableau":
        return tb.ghz_tableau(n, d), [None] * n
    if backend == "analytic":
        return None, [None] * n
    raise ConfigError(f"unknown backend {backend!r}")


def simulate_reports(ys: Sequence[int], d: int, backend: str, rng: np.random.Generator) -> np.ndarray:
    """Quantum part only: distribute, encode ``ys`` and measure; no config checks.

    Lets callers probe dimensions the full protocol refuses (d <= (kappa-1)n).
    """
    n = len(ys)
    state, _ = distribute_ghz(n, d, backend, rng)
    if state is None:
        return analytic_sample(sum(int(y) for y in ys) % d, n, d, rng)
    return np.array(run_local_phase(state, ys, rng), dtype=np.int64)


def run_protocol(
    config: ProtocolConfig,
    inputs: Sequence[int],
    rng: np.random.Generator | None = None,
) -> ProtocolTranscript:
    """Run every step once; ``rng`` defaults to a generator seeded with ``config.seed``."""
    if len(inputs) != config.n:
        raise ConfigError(f"expected {config.n} inputs, got {len(inputs)}")
    for x in inputs:
        if not 0 <= int(x) < config.kappa:
            raise DomainError(f"input {x} outside [0, {config.kappa})")
    if rng is None:
        rng = np.random.default_rng(config.seed)

    n, d = config.n, config.d
    channel = Channel()
    server = Server(n, d)
    clients = [Client(i + 1, int(x)) for i, x in enumerate(inputs)]

    state, corrections = distribute_ghz(n, d, config.backend, rng)
    for client, correction in zip(clients, corrections):
        if correction is not None:
            server.send_correction(client.index, correction, channel)
        client.receive_share(correction)

    for client in clients:
        client.choose_output(config.randomizer, rng)

    if state is None:
        zs = analytic_sample(sum(c.y for c in clients) % d, n, d, rng)
        for client, z in zip(clients, zs):
            client.report(int(z), channel)
    else:
        for i, client in enumerate(clients):
            encode_output(state, i, client.y)
        for i, client in enumerate(clients):
            client.report(_measure_client(state, i, rng), channel)

    m = server.decode(channel)
    return ProtocolTranscript(
        n=n,
        kappa=config.kappa,
        d=d,
        gamma=config.gamma,
        backend=config.backend,
        seed=config.seed,
        clients=tuple(ClientRecord(c.x, c.y, c.correction, c.z) for c in clients),
        messages=tuple(channel.log),
        z=m,
        estimate=_estimate(m, config),
    )


def _measure_client(state, qudit: int, rng: np.random.Generator) -> int:
    """One client's readout: H then a computational-basis measurement."""
    if isinstance(state, tb.StabilizerTableau):
        tb.apply_h(state, qudit)
        return int(tb.measure_z(state, qudit, rng)[0])
    sv.apply_h(state, qudit)
    return int(sv.measure_z(state, qudit, rng)[0])


def run_local_phase(state, ys: Sequence[int], rng: np.random.Generator) -> list[int]:
    """Encode, rotate and measure every client of a distributed GHZ state; returns the reports."""
    for i, y in enumerate(ys):
        encode_output(state, i, int(y))
    return [_measure_client(state, i, rng) for i in range(len(ys))]
