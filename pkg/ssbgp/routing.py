"""
Path-vector routing engines: BGP, S-BGP and SS-BGP.

All three share the routing table and the validation pipeline

    (a) format, (b) no loops, (c) new or better route,
    (d) timestamp deltas within the threshold t, (e) signatures,

and differ in what is signed. BGP signs one statement per hop with a
single-signer scheme, S-BGP additionally names the recipient in each
statement (so one update per neighbor), SS-BGP carries a single chain
signature over the whole path.
"""
import functools
import logging
from collections import Counter
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from typing_extensions import Literal

from ssbgp.backend import (
    G1Element,
    g1_deserialize,
    g1_exp,
    g1_inverse,
    get_context,
    hash_to_g1,
    pairing_check,
)
from ssbgp.constants import BASELINE_TAG, DEFAULT_THRESHOLD_T, L_PT, R0
from ssbgp.dataclasses import dataclass
from ssbgp.ecs import (
    EMPTY,
    ChainSequence,
    EcsSignature,
    KeyPair,
    ecs_aggregate_verify,
    ecs_keygen,
    ecs_sign,
    ecs_sign_unchecked,
    ecs_verify,
)
from ssbgp.exceptions import BackendError, UpdateRejected
from ssbgp.utils import ByteReader, pack_int, pack_prefixed, to_seed_bytes

logger = logging.getLogger(__name__)

NodeId = str
Timestamp = int

protocols = Literal["BGP", "SBGP", "SSBGP"]
rejection_kinds = Literal[
    "BadFormat",
    "LoopDetected",
    "NotBetter",
    "StaleTimestamp",
    "BadSignature",
    "NotAddressedToMe",
    "SenderMismatch",
]
decisions = Literal["FORWARD", "DROP"]


# --- routing table


@dataclass(frozen=True)
class RoutingTableEntry:
    """The best known route to a destination."""

    destination: NodeId
    next_hop: NodeId
    metric: int

    def __post_init__(self):
        if self.metric < 1:
            raise ValueError("routes to other nodes have metric >= 1")


class RoutingTable:
    """
    One node's routing table, keeping a single best entry per destination.

    Parameters
    ----------
    owner
        The node the table belongs to.
    """

    def __init__(self, owner: NodeId):
        self.owner = owner
        self.entries: Dict[NodeId, RoutingTableEntry] = {}

    def get(self, destination: NodeId) -> Optional[RoutingTableEntry]:
        return self.entries.get(destination)

    def is_better(self, destination: NodeId, metric: int) -> bool:
        """True if a route with metric would be new or strictly better."""
        current = self.entries.get(destination)
        return current is None or metric < current.metric

    def offer(self, entry: RoutingTableEntry) -> bool:
        """Install entry if it is new or strictly better; ties keep the incumbent."""
        if not self.is_better(entry.destination, entry.metric):
            return False
        self.entries[entry.destination] = entry
        return True

    def to_dict(self) -> Dict[str, Dict[str, Union[str, int]]]:
        return {
            dest: {"next_hop": x.next_hop, "metric": x.metric}
            for dest, x in sorted(self.entries.items())
        }

    def __contains__(self, destination):
        return destination in self.entries

    def __getitem__(self, destination):
        return self.entries[destination]

    def __len__(self):
        return len(self.entries)

    def __repr__(self):
        return f"RoutingTable({self.owner}, {self.to_dict()})"


def table_apply(
    table: RoutingTable,
    path: Sequence[NodeId],
    origin_metric: int = 0,
) -> RoutingTable:
    """
    Offer the route described by path to table.

    Parameters
    ----------
    table
        The receiving node's table.
    path
        The advertised path from the destination (path[0]) to the node the
        update came from (path[-1]); the table owner is not included.
    origin_metric
        The metric at the destination itself.
    """
    if path:
        entry = RoutingTableEntry(
            destination=path[0],
            next_hop=path[-1],
            metric=origin_metric + len(path),
        )
        table.offer(entry)
    return table


def forward_decision(
    table: RoutingTable,
    packet_dest: NodeId,
    packet_sender: NodeId,
) -> decisions:
    """
    Decide whether a received data packet is rebroadcast.

    Packets coming from the next hop towards their destination are
    dropped, as are packets with no route or that have arrived.
    """
    if packet_dest == table.owner:
        return "DROP"
    entry = table.get(packet_dest)
    if entry is None or entry.next_hop == packet_sender:
        return "DROP"
    return "FORWARD"


# --- keys and the baseline signature scheme


class KeyRegistry:
    """
    A static map from node ids to key pairs.

    Receivers only ever look up public keys; the private halves are held
    here so the simulator can hand each node its own.
    """

    def __init__(self, keypairs: Mapping[NodeId, KeyPair]):
        self._keypairs = dict(keypairs)
        self._nodes = {kp.public: node for node, kp in self._keypairs.items()}
        if len(self._nodes) != len(self._keypairs):
            raise ValueError("every node must have a distinct public key")

    @classmethod
    def generate(cls, node_ids: Iterable[NodeId], seed=0) -> "KeyRegistry":
        """Derive one key pair per node deterministically from seed."""
        ctx = get_context()
        prefix = b"node:" + to_seed_bytes(seed) + b":"
        return cls({x: ecs_keygen(ctx, prefix + x.encode("utf-8")) for x in node_ids})

    def public(self, node: NodeId) -> G1Element:
        return self._keypairs[node].public

    def keypair(self, node: NodeId) -> KeyPair:
        return self._keypairs[node]

    def node_of(self, pubkey: G1Element) -> NodeId:
        return self._nodes[pubkey]

    def __contains__(self, node):
        return node in self._keypairs

    def __iter__(self):
        return iter(self._keypairs)


def baseline_sign(kp: KeyPair, message: bytes) -> G1Element:
    """Sign a statement with the single-signer scheme: H(m) ** x."""
    return g1_exp(hash_to_g1(BASELINE_TAG + message), kp.private)


@functools.lru_cache(maxsize=16384)
def baseline_verify(pubkey: G1Element, message: bytes, signature: G1Element) -> bool:
    """Return True if e(signature, g) == e(H(m), pubkey)."""
    g = get_context().generator
    digest = hash_to_g1(BASELINE_TAG + message)
    try:
        return pairing_check([(g1_inverse(signature), g), (digest, pubkey)])
    except BackendError:
        return False


# --- update types


@dataclass(frozen=True)
class BgpStatement:
    """m_j = (R_{j-1}, R_j, t_j)."""

    previous: NodeId
    node: NodeId
    timestamp: Timestamp

    def encode(self) -> bytes:
        return (
            pack_prefixed(self.previous.encode("utf-8"), 1)
            + pack_prefixed(self.node.encode("utf-8"), 1)
            + pack_int(self.timestamp, 8)
        )


@dataclass(frozen=True)
class SbgpStatement:
    """A hop statement naming the neighbor it is addressed to."""

    node: NodeId
    recipient: NodeId
    timestamp: Timestamp

    def encode(self) -> bytes:
        return (
            pack_prefixed(self.node.encode("utf-8"), 1)
            + pack_prefixed(self.recipient.encode("utf-8"), 1)
            + pack_int(self.timestamp, 8)
        )


@dataclass(frozen=True)
class SignedStatement:
    """A statement with its single-signer signature."""

    statement: Union[BgpStatement, SbgpStatement]
    signature: G1Element


@dataclass(frozen=True)
class BgpUpdate:
    """A BGP update: one signed statement per hop."""

    entries: Tuple[SignedStatement, ...]

    @property
    def path(self) -> Tuple[NodeId, ...]:
        return tuple(x.statement.node for x in self.entries)

    @property
    def timestamps(self) -> Tuple[Timestamp, ...]:
        return tuple(x.statement.timestamp for x in self.entries)

    def encode(self) -> bytes:
        body = b"".join(
            x.statement.encode() + x.signature.to_bytes() for x in self.entries
        )
        return pack_int(len(self.entries), 2) + body

    @classmethod
    def decode(cls, data: bytes) -> "BgpUpdate":
        reader = ByteReader(data)
        entries = []
        for _ in range(reader.take_int(2)):
            previous = reader.take_prefixed(1).decode("utf-8")
            node = reader.take_prefixed(1).decode("utf-8")
            statement = BgpStatement(previous, node, reader.take_int(8))
            signature = g1_deserialize(reader.take(L_PT))
            entries.append(SignedStatement(statement, signature))
        reader.finish()
        return cls(tuple(entries))


@dataclass(frozen=True)
class SbgpUpdate:
    """An S-BGP update addressed to a single neighbor."""

    entries: Tuple[SignedStatement, ...]

    @property
    def path(self) -> Tuple[NodeId, ...]:
        return tuple(x.statement.node for x in self.entries)

    @property
    def timestamps(self) -> Tuple[Timestamp, ...]:
        return tuple(x.statement.timestamp for x in self.entries)

    @property
    def recipient(self) -> NodeId:
        return self.entries[-1].statement.recipient

    def encode(self) -> bytes:
        body = b"".join(
            x.statement.encode() + x.signature.to_bytes() for x in self.entries
        )
        return pack_int(len(self.entries), 2) + body

    @classmethod
    def decode(cls, data: bytes) -> "SbgpUpdate":
        reader = ByteReader(data)
        entries = []
        for _ in range(reader.take_int(2)):
            node = reader.take_prefixed(1).decode("utf-8")
            recipient = reader.take_prefixed(1).decode("utf-8")
            statement = SbgpStatement(node, recipient, reader.take_int(8))
            signature = g1_deserialize(reader.take(L_PT))
            entries.append(SignedStatement(statement, signature))
        reader.finish()
        return cls(tuple(entries))


@dataclass(frozen=True)
class PathHop:
    """
    One (m_j, R_j) element of an SS-BGP path. The signed message is the
    timestamp followed by an optional opaque extension (eg coordinates).
    """

    timestamp: Timestamp
    node: NodeId
    extension: bytes = b""

    @property
    def message(self) -> bytes:
        return pack_int(self.timestamp, 8) + self.extension


@dataclass(frozen=True)
class SsbgpUpdate:
    """An SS-BGP update: the path list and one chain signature."""

    path_hops: Tuple[PathHop, ...]
    sigma: EcsSignature

    @property
    def path(self) -> Tuple[NodeId, ...]:
        return tuple(x.node for x in self.path_hops)

    @property
    def timestamps(self) -> Tuple[Timestamp, ...]:
        return tuple(x.timestamp for x in self.path_hops)

    def chain(self, registry: KeyRegistry) -> ChainSequence:
        """Rebuild the signed sequence by looking up each hop's key."""
        return ChainSequence.of((x.message, registry.public(x.node)) for x in self.path_hops)

    def encode(self) -> bytes:
        body = b"".join(
            pack_int(x.timestamp, 8)
            + pack_prefixed(x.node.encode("utf-8"), 1)
            + pack_prefixed(x.extension, 2)
            for x in self.path_hops
        )
        return pack_int(len(self.path_hops), 2) + body + self.sigma.value.to_bytes()

    @classmethod
    def decode(cls, data: bytes) -> "SsbgpUpdate":
        reader = ByteReader(data)
        hops = []
        for _ in range(reader.take_int(2)):
            timestamp = reader.take_int(8)
            node = reader.take_prefixed(1).decode("utf-8")
            hops.append(PathHop(timestamp, node, reader.take_prefixed(2)))
        sigma = EcsSignature(g1_deserialize(reader.take(L_PT)))
        reader.finish()
        return cls(tuple(hops), sigma)


Update = Union[BgpUpdate, SbgpUpdate, SsbgpUpdate]


def signature_overhead(update: Update) -> int:
    """Bytes of each update spent on signatures."""
    if isinstance(update, SsbgpUpdate):
        return L_PT
    return L_PT * len(update.entries)


# --- shared validation steps


def _check_known(path: Sequence[NodeId], registry: KeyRegistry):
    for j, node in enumerate(path):
        if node not in registry:
            raise UpdateRejected("BadFormat", j, f"unknown node {node!r}")


def _check_timestamps_format(timestamps: Sequence[Timestamp]):
    for j, stamp in enumerate(timestamps):
        if not isinstance(stamp, int) or stamp < 0:
            raise UpdateRejected("BadFormat", j, "timestamps are non-negative ints")


def _check_sender(path: Sequence[NodeId], sender: Optional[NodeId]):
    if sender is not None and sender != path[-1]:
        detail = f"broadcast by {sender} but last hop is {path[-1]}"
        raise UpdateRejected("SenderMismatch", len(path) - 1, detail)


def _check_route(
    self_id: NodeId,
    path: Sequence[NodeId],
    timestamps: Sequence[Timestamp],
    now: Timestamp,
    table: RoutingTable,
    threshold_t: int,
):
    """Steps (b) to (d)."""
    seen = set()
    for j, node in enumerate(path):
        if node == self_id or node in seen:
            raise UpdateRejected("LoopDetected", j, f"{node} repeats")
        seen.add(node)
    if not table.is_better(path[0], len(path)):
        raise UpdateRejected("NotBetter", len(path) - 1)
    stamps = list(timestamps) + [now]
    for j in range(len(stamps) - 1):
        delta = stamps[j + 1] - stamps[j]
        if not 0 <= delta <= threshold_t:
            raise UpdateRejected("StaleTimestamp", j, f"delta {delta} vs {threshold_t}")


def _count(counters: Optional[Counter], key: str, amount: int = 1):
    if counters is not None:
        counters[key] += amount


# --- BGP


def bgp_initiate(self_id: NodeId, now: Timestamp, signer: KeyPair) -> BgpUpdate:
    """Start advertising self_id: U_1 = <((R_0, R_1, t_1), sig_1)>."""
    statement = BgpStatement(R0, self_id, now)
    return BgpUpdate((SignedStatement(statement, baseline_sign(signer, statement.encode())),))


def bgp_process(
    self_id: NodeId,
    update: BgpUpdate,
    now: Timestamp,
    table: RoutingTable,
    registry: KeyRegistry,
    threshold_t: int = DEFAULT_THRESHOLD_T,
    sender: Optional[NodeId] = None,
    counters: Optional[Counter] = None,
) -> BgpUpdate:
    """
    Validate a BGP update, install the route and return the update to
    propagate with self_id's statement appended.

    Raises
    ------
    UpdateRejected
        Naming the first failed step and the offending entry.
    """
    if not isinstance(update, BgpUpdate) or not update.entries:
        raise UpdateRejected("BadFormat", 0, "expected a nonempty BGP update")
    previous = R0
    for j, entry in enumerate(update.entries):
        statement = entry.statement
        if not isinstance(statement, BgpStatement) or statement.previous != previous:
            raise UpdateRejected("BadFormat", j, "statement does not chain")
        previous = statement.node
    path = update.path
    _check_known(path, registry)
    _check_timestamps_format(update.timestamps)
    _check_sender(path, sender)
    _check_route(self_id, path, update.timestamps, now, table, threshold_t)
    for j, entry in enumerate(update.entries):
        _count(counters, "signature_checks")
        _count(counters, "pairing_checks")
        pubkey = registry.public(entry.statement.node)
        if not baseline_verify(pubkey, entry.statement.encode(), entry.signature):
            raise UpdateRejected("BadSignature", j)
    table_apply(table, path)
    statement = BgpStatement(path[-1], self_id, now)
    signer = registry.keypair(self_id)
    own = SignedStatement(statement, baseline_sign(signer, statement.encode()))
    return BgpUpdate(update.entries + (own,))


# --- S-BGP


def sbgp_initiate(
    self_id: NodeId,
    now: Timestamp,
    signer: KeyPair,
    neighbors: Iterable[NodeId],
) -> List[SbgpUpdate]:
    """Start advertising self_id with one statement per neighbor."""
    out = []
    for neighbor in sorted(neighbors):
        statement = SbgpStatement(self_id, neighbor, now)
        signature = baseline_sign(signer, statement.encode())
        out.append(SbgpUpdate((SignedStatement(statement, signature),)))
    return out


def sbgp_process(
    self_id: NodeId,
    update: SbgpUpdate,
    now: Timestamp,
    table: RoutingTable,
    registry: KeyRegistry,
    neighbors: Iterable[NodeId],
    threshold_t: int = DEFAULT_THRESHOLD_T,
    sender: Optional[NodeId] = None,
    counters: Optional[Counter] = None,
) -> List[SbgpUpdate]:
    """
    Validate an S-BGP update and return one propagated update per neighbor
    that is not already on the path.

    Raises
    ------
    UpdateRejected
        As :func:`bgp_process`, plus NotAddressedToMe when the last
        statement names another recipient.
    """
    if not isinstance(update, SbgpUpdate) or not update.entries:
        raise UpdateRejected("BadFormat", 0, "expected a nonempty S-BGP update")
    statements = [x.statement for x in update.entries]
    for j, statement in enumerate(statements):
        if not isinstance(statement, SbgpStatement):
            raise UpdateRejected("BadFormat", j, "not an S-BGP statement")
        if j and statements[j - 1].recipient != statement.node:
            raise UpdateRejected("BadFormat", j, "statement does not chain")
    path = update.path
    _check_known(path, registry)
    _check_timestamps_format(update.timestamps)
    if update.recipient != self_id:
        raise UpdateRejected("NotAddressedToMe", len(path) - 1, f"for {update.recipient}")
    _check_sender(path, sender)
    _check_route(self_id, path, update.timestamps, now, table, threshold_t)
    for j, entry in enumerate(update.entries):
        _count(counters, "signature_checks")
        _count(counters, "pairing_checks")
        pubkey = registry.public(entry.statement.node)
        if not baseline_verify(pubkey, entry.statement.encode(), entry.signature):
            raise UpdateRejected("BadSignature", j)
    table_apply(table, path)
    signer = registry.keypair(self_id)
    out = []
    for neighbor in sorted(set(neighbors) - set(path) - {self_id}):
        statement = SbgpStatement(self_id, neighbor, now)
        own = SignedStatement(statement, baseline_sign(signer, statement.encode()))
        out.append(SbgpUpdate(update.entries + (own,)))
    return out


# --- SS-BGP


def ssbgp_initiate(
    self_id: NodeId,
    now: Timestamp,
    keypair: KeyPair,
    extension: bytes = b"",
) -> SsbgpUpdate:
    """Start advertising self_id: L_1 = <(t_1, R_1)> under a one link chain."""
    hop = PathHop(now, self_id, extension)
    sigma = ecs_sign(keypair, hop.message, EMPTY, EcsSignature.unit())
    return SsbgpUpdate((hop,), sigma)


def ssbgp_precheck(
    self_id: NodeId,
    update: SsbgpUpdate,
    now: Timestamp,
    table: RoutingTable,
    key_registry: KeyRegistry,
    threshold_t: int = DEFAULT_THRESHOLD_T,
    sender: Optional[NodeId] = None,
) -> ChainSequence:
    """
    Run every SS-BGP validation step except the signature check.

    Returns the chain the signature has to verify on. The table is not
    modified.
    """
    if not isinstance(update, SsbgpUpdate) or not update.path_hops:
        raise UpdateRejected("BadFormat", 0, "expected a nonempty SS-BGP update")
    if not isinstance(update.sigma, EcsSignature):
        raise UpdateRejected("BadFormat", len(update.path_hops) - 1, "no signature")
    path = update.path
    _check_known(path, key_registry)
    _check_timestamps_format(update.timestamps)
    _check_sender(path, sender)
    _check_route(self_id, path, update.timestamps, now, table, threshold_t)
    chain = update.chain(key_registry)
    own = key_registry.public(self_id)
    if own in chain.keys:
        # a signer's key already in the chain is a loop
        raise UpdateRejected("LoopDetected", chain.keys.index(own))
    return chain


def ssbgp_batch_verify(
    chains: Sequence[Tuple[ChainSequence, EcsSignature]],
    counters: Optional[Counter] = None,
    rng_seed: Optional[bytes] = None,
) -> List[bool]:
    """
    Check several chain signatures with one aggregate verification.

    Only if the aggregate fails is each chain verified on its own, to
    find the bad ones.
    """
    if not chains:
        return []
    _count(counters, "signature_checks", len(chains))
    _count(counters, "pairing_checks")
    if ecs_aggregate_verify(chains, rng_seed):
        return [True] * len(chains)
    if len(chains) == 1:
        return [False]
    logger.debug("aggregate of %d chains failed, checking each", len(chains))
    _count(counters, "pairing_checks", len(chains))
    return [ecs_verify(seq, sig) for seq, sig in chains]


def ssbgp_process(
    self_id: NodeId,
    update: SsbgpUpdate,
    now: Timestamp,
    table: RoutingTable,
    key_registry: KeyRegistry,
    threshold_t: int = DEFAULT_THRESHOLD_T,
    sender: Optional[NodeId] = None,
    counters: Optional[Counter] = None,
    extension: bytes = b"",
    signature_valid: Optional[bool] = None,
) -> SsbgpUpdate:
    """
    Validate an SS-BGP update, install the route and return the update
    extended with (now, self_id) and the extended chain signature.

    Parameters
    ----------
    signature_valid
        The outcome of an earlier batch verification of this update's
        chain; if None the chain is verified here.

    Raises
    ------
    UpdateRejected
        Naming the first failed step.
    """
    chain = ssbgp_precheck(
        self_id, update, now, table, key_registry, threshold_t, sender
    )
    if signature_valid is None:
        _count(counters, "signature_checks")
        _count(counters, "pairing_checks")
        signature_valid = ecs_verify(chain, update.sigma)
    if not signature_valid:
        raise UpdateRejected("BadSignature", len(chain) - 1)
    table_apply(table, update.path)
    hop = PathHop(now, self_id, extension)
    keypair = key_registry.keypair(self_id)
    sigma = ecs_sign_unchecked(keypair, hop.message, chain, update.sigma)
    return SsbgpUpdate(update.path_hops + (hop,), sigma)


# --- engines


class ProtocolEngine:
    """
    One node's protocol state machine.

    Parameters
    ----------
    node_id
        The node running the engine.
    registry
        The key registry shared by the network.
    threshold_t
        Maximum allowed difference between consecutive timestamps.
    neighbors
        The node's neighbor set; only S-BGP uses it.
    """

    protocol: str = ""

    def __init__(
        self,
        node_id: NodeId,
        registry: KeyRegistry,
        threshold_t: int = DEFAULT_THRESHOLD_T,
        neighbors: Iterable[NodeId] = (),
    ):
        self.node_id = node_id
        self.registry = registry
        self.keypair = registry.keypair(node_id)
        self.threshold_t = threshold_t
        self.neighbors = frozenset(neighbors)
        self.table = RoutingTable(node_id)
        self.counters: Counter = Counter()

    def initiate(self, now: Timestamp) -> List[Update]:
        raise NotImplementedError

    def process(self, update: Update, now: Timestamp, sender: Optional[NodeId] = None) -> List[Update]:
        raise NotImplementedError

    def process_batch(
        self,
        items: Sequence[Tuple[Update, Optional[NodeId]]],
        now: Timestamp,
    ) -> List[Union[List[Update], UpdateRejected]]:
        """
        Process (update, sender) pairs received in the same tick, in order.

        Each result is either the updates to propagate or the rejection.
        """
        out = []
        for update, sender in items:
            try:
                out.append(self.process(update, now, sender=sender))
            except UpdateRejected as e:
                out.append(e)
        return out


class BgpEngine(ProtocolEngine):
    protocol = "BGP"

    def initiate(self, now):
        return [bgp_initiate(self.node_id, now, self.keypair)]

    def process(self, update, now, sender=None):
        out = bgp_process(
            self.node_id,
            update,
            now,
            self.table,
            self.registry,
            threshold_t=self.threshold_t,
            sender=sender,
            counters=self.counters,
        )
        return [out]


class SbgpEngine(ProtocolEngine):
    protocol = "SBGP"

    def initiate(self, now):
        return sbgp_initiate(self.node_id, now, self.keypair, self.neighbors)

    def process(self, update, now, sender=None):
        return sbgp_process(
            self.node_id,
            update,
            now,
            self.table,
            self.registry,
            self.neighbors,
            threshold_t=self.threshold_t,
            sender=sender,
            counters=self.counters,
        )


class SsbgpEngine(ProtocolEngine):
    protocol = "SSBGP"

    def initiate(self, now):
        return [ssbgp_initiate(self.node_id, now, self.keypair)]

    def process(self, update, now, sender=None, signature_valid=None):
        out = ssbgp_process(
            self.node_id,
            update,
            now,
            self.table,
            self.registry,
            threshold_t=self.threshold_t,
            sender=sender,
            counters=self.counters,
            signature_valid=signature_valid,
        )
        return [out]

    def process_batch(self, items, now):
        """
        Process updates received in the same tick.

        The chains of all updates that pass the checks before the
        signature step are verified together with one aggregate check.
        """
        chains = {}
        for index, (update, sender) in enumerate(items):
            try:
                chains[index] = ssbgp_precheck(
                    self.node_id, update, now, self.table, self.registry,
                    self.threshold_t, sender,
                )
            except UpdateRejected:
                continue
        verdicts = {}
        if len(chains) > 1:
            pending = [(chains[i], items[i][0].sigma) for i in chains]
            verdicts = dict(zip(chains, ssbgp_batch_verify(pending, self.counters)))
        out = []
        for index, (update, sender) in enumerate(items):
            try:
                out.append(
                    self.process(update, now, sender, signature_valid=verdicts.get(index))
                )
            except UpdateRejected as e:
                out.append(e)
        return out


ENGINES = {x.protocol: x for x in (BgpEngine, SbgpEngine, SsbgpEngine)}
