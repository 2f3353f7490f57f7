"""
A deterministic event-driven simulator of a wireless broadcast network.

Nodes sit in the plane and hear every transmission within a common
coverage radius. Route advertisements flood the network through the
configured protocol engine; data packets then travel by the forwarding
rule of the learned tables. Attackers are nodes with a role other than
HONEST.
"""
import hashlib
import heapq
import itertools
import json
import logging
from collections import Counter
from typing import Dict, FrozenSet, List, NamedTuple, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import Field, ValidationError
from typing_extensions import Literal

from ssbgp.constants import CONVERGENCE_WINDOW, DEFAULT_THRESHOLD_T, PROPAGATION_DELAY
from ssbgp.dataclasses import dataclass
from ssbgp.ecs import ecs_sign_unchecked, ecs_strip
from ssbgp.exceptions import ScenarioError, UpdateRejected
from ssbgp.routing import (
    ENGINES,
    BgpStatement,
    BgpUpdate,
    KeyRegistry,
    NodeId,
    PathHop,
    ProtocolEngine,
    SbgpStatement,
    SbgpUpdate,
    SignedStatement,
    SsbgpUpdate,
    Update,
    baseline_sign,
    forward_decision,
    protocols,
    signature_overhead,
)
from ssbgp.utils import get_rng, read_scenario_data

logger = logging.getLogger(__name__)

roles = Literal["HONEST", "TRUNCATOR", "REPEATER"]


# --- scenario description


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def __post_init__(self):
        if not np.isfinite([self.x, self.y]).all():
            raise ValueError(f"positions must be finite, got ({self.x}, {self.y})")


@dataclass(frozen=True)
class NodeSpec:
    """A node of the scenario: its id, location and behavior."""

    id: str
    x: float
    y: float
    role: roles = "HONEST"

    @property
    def position(self) -> Position:
        return Position(self.x, self.y)


@dataclass(frozen=True)
class DataPacketSpec:
    """A data packet sent from src to dest at time at (None: after convergence)."""

    src: str
    dest: str
    at: Optional[int] = None


@dataclass
class Scenario:
    """
    Everything needed to run a simulation.

    Parameters
    ----------
    radius
        The coverage radius shared by all nodes.
    nodes
        The nodes; ids must be distinct.
    initiator
        The node (or nodes) advertising a route to itself at time 0.
    protocol
        The routing protocol run by every node.
    threshold_t
        The maximum allowed difference between consecutive timestamps.
    sender_identification
        If True, receivers learn who broadcast each message and reject
        updates whose last hop is someone else.
    data_packets
        Data packets to send once routes have converged.
    extracted_keys
        Nodes whose private keys the attackers hold.
    convergence_window
        Default send time of data packets.
    seed
        Key generation seed.
    """

    radius: float
    nodes: List[NodeSpec]
    initiator: Union[str, List[str]]
    protocol: protocols = "SSBGP"
    threshold_t: int = DEFAULT_THRESHOLD_T
    sender_identification: bool = True
    data_packets: List[DataPacketSpec] = Field(default_factory=list)
    extracted_keys: List[str] = Field(default_factory=list)
    convergence_window: int = CONVERGENCE_WINDOW
    seed: Union[int, str] = 0
    name: str = ""

    def __post_init__(self):
        ids = [x.id for x in self.nodes]
        if len(set(ids)) != len(ids):
            raise ValueError("node ids must be distinct")
        if self.radius < 0:
            raise ValueError("radius must be non-negative")
        known = set(ids)
        referenced = list(self.initiators) + list(self.extracted_keys)
        referenced += [x for p in self.data_packets for x in (p.src, p.dest)]
        missing = sorted(set(referenced) - known)
        if missing:
            raise ValueError(f"unknown node ids {missing}")

    @property
    def initiators(self) -> List[str]:
        if isinstance(self.initiator, str):
            return [self.initiator]
        return list(self.initiator)

    @property
    def node_ids(self) -> List[str]:
        return [x.id for x in self.nodes]

    @classmethod
    def from_dict(cls, data: dict, name: str = "") -> "Scenario":
        """Validate a scenario document, raising ScenarioError if malformed."""
        if not isinstance(data, dict):
            raise ScenarioError("a scenario must be a json object")
        data = dict(data)
        data.setdefault("name", name)
        try:
            return cls(**data)
        except (ValidationError, ValueError, TypeError) as e:
            raise ScenarioError(f"invalid scenario {name or ''}: {e}") from e

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "radius": self.radius,
            "nodes": [{"id": x.id, "x": x.x, "y": x.y, "role": x.role} for x in self.nodes],
            "initiator": self.initiator,
            "protocol": self.protocol,
            "threshold_t": self.threshold_t,
            "sender_identification": self.sender_identification,
            "data_packets": [
                {"src": x.src, "dest": x.dest, "at": x.at} for x in self.data_packets
            ],
            "extracted_keys": list(self.extracted_keys),
            "convergence_window": self.convergence_window,
            "seed": self.seed,
        }


def load_scenario(name) -> Scenario:
    """
    Load a scenario from a json file or by bundled name.

    Raises
    ------
    FileNotFoundError
        If name is neither a file nor a bundled scenario.
    ScenarioError
        If the document does not describe a valid scenario.
    """
    try:
        data = read_scenario_data(name)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"{name} is not valid json: {e}") from e
    stem = str(name).replace("\\", "/").split("/")[-1]
    return Scenario.from_dict(data, name=stem.rsplit(".json", 1)[0])


def coverage_graph(topo: Scenario) -> Dict[str, FrozenSet[str]]:
    """
    Return the unit disk adjacency of a scenario.

    Two distinct nodes are adjacent iff their distance is at most the
    radius; a radius of zero gives no edges.
    """
    ids = topo.node_ids
    coords = np.array([[x.x, x.y] for x in topo.nodes], dtype=float).reshape(-1, 2)
    diff = coords[:, None, :] - coords[None, :, :]
    distance = np.sqrt((diff**2).sum(axis=-1))
    adjacent = (distance <= topo.radius) & (topo.radius > 0)
    np.fill_diagonal(adjacent, False)
    return {
        node: frozenset(ids[j] for j in np.flatnonzero(adjacent[i]))
        for i, node in enumerate(ids)
    }


def random_topology(
    n: int,
    seed=0,
    radius: float = 10.0,
    protocol: str = "SSBGP",
    initiator: Optional[Union[str, List[str]]] = None,
) -> Scenario:
    """
    Create a connected random unit disk scenario of n honest nodes.

    Each node is dropped within range of a randomly chosen earlier node,
    so the coverage graph is always connected.
    """
    if n < 1:
        raise ValueError("a topology needs at least one node")
    rng = get_rng(seed)
    width = len(str(n - 1))
    ids = [f"N{i:0{width}d}" for i in range(n)]
    coords = np.zeros((n, 2))
    for i in range(1, n):
        anchor = coords[rng.integers(0, i)]
        angle = rng.uniform(0, 2 * np.pi)
        # stay clear of the boundary so float error can't drop the edge
        dist = 0.95 * radius * np.sqrt(rng.uniform(0, 1))
        coords[i] = anchor + dist * np.array([np.cos(angle), np.sin(angle)])
    nodes = [
        NodeSpec(id=x, x=float(round(c[0], 6)), y=float(round(c[1], 6)))
        for x, c in zip(ids, coords)
    ]
    return Scenario(
        radius=radius,
        nodes=nodes,
        initiator=ids[0] if initiator is None else initiator,
        protocol=protocol,
        seed=seed,
        name=f"random_{n}_{seed}",
    )


# --- events


class Broadcast(NamedTuple):
    sender: NodeId
    update: Update


class DataPacket(NamedTuple):
    packet_id: int
    src: NodeId
    dest: NodeId
    sender: NodeId
    hops: tuple


class Event(NamedTuple):
    time: int
    order: int
    receiver: NodeId
    payload: Union[Broadcast, DataPacket]


# --- metrics


@dataclass
class Metrics:
    """
    The outcome of one simulation run.

    The per-node dicts are keyed by node id. Byte counts are the sizes of
    the serialized updates.
    """

    scenario: str
    protocol: str
    seed: Union[int, str]
    broadcasts: Dict[str, int]
    control_bytes: Dict[str, int]
    signature_bytes: Dict[str, int]
    signature_checks: Dict[str, int]
    pairing_checks: Dict[str, int]
    data_transmissions: Dict[str, int]
    tables: Dict[str, dict]
    rejections: List[dict] = Field(default_factory=list)
    data_packets: List[dict] = Field(default_factory=list)
    receptions: List[tuple] = Field(default_factory=list)

    def next_hop(self, node: str, destination: str) -> Optional[str]:
        entry = self.tables.get(node, {}).get(destination)
        return None if entry is None else entry["next_hop"]

    def rejections_at(self, node: str, kind: Optional[str] = None) -> List[dict]:
        return [
            x for x in self.rejections if x["node"] == node and kind in (None, x["kind"])
        ]

    def to_dict(self) -> dict:
        """Return a json-ready dict; the reception log is left out."""
        nodes = {
            x: {
                "broadcasts": self.broadcasts[x],
                "control_bytes": self.control_bytes[x],
                "signature_bytes": self.signature_bytes[x],
                "signature_checks": self.signature_checks[x],
                "pairing_checks": self.pairing_checks[x],
                "data_transmissions": self.data_transmissions[x],
                "table": self.tables[x],
            }
            for x in self.broadcasts
        }
        return {
            "scenario": self.scenario,
            "protocol": self.protocol,
            "seed": self.seed,
            "nodes": nodes,
            "rejections": self.rejections,
            "data_packets": self.data_packets,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_frame(self) -> pd.DataFrame:
        """Return one row of counters per node."""
        rejected = Counter(x["node"] for x in self.rejections)
        df = pd.DataFrame(
            {
                "broadcasts": self.broadcasts,
                "control_bytes": self.control_bytes,
                "signature_bytes": self.signature_bytes,
                "signature_checks": self.signature_checks,
                "pairing_checks": self.pairing_checks,
                "data_transmissions": self.data_transmissions,
                "routes": {x: len(y) for x, y in self.tables.items()},
            }
        )
        df["rejections"] = [rejected.get(x, 0) for x in df.index]
        df.index.name = "node"
        return df


# --- nodes and attacker behaviors


class SimNode:
    """The simulator's view of one node: its engine, role and caches."""

    def __init__(self, spec: NodeSpec, engine: ProtocolEngine, neighbors: FrozenSet[str]):
        self.id = spec.id
        self.role = spec.role
        self.position = spec.position
        self.engine = engine
        self.neighbors = neighbors
        self.seen_updates = set()
        self.seen_packets = set()

    @property
    def table(self):
        return self.engine.table


def truncator_behavior(
    node: SimNode,
    received: Update,
    now: int,
    registry: KeyRegistry,
    extracted: FrozenSet[str] = frozenset(),
) -> List[Update]:
    """
    Forge updates claiming node is one hop from the origin of received.

    BGP statements are simply re-signed. S-BGP reuses the origin's
    signature on a statement naming node as recipient. SS-BGP reuses the
    received chain signature, or strips the dropped hops when all their
    keys are in extracted. Returns an empty list when there is nothing to
    truncate.
    """
    path = received.path
    if len(path) < 2:
        return []
    kp = node.engine.keypair
    if isinstance(received, BgpUpdate):
        first = received.entries[0]
        statement = BgpStatement(first.statement.node, node.id, now)
        own = SignedStatement(statement, baseline_sign(kp, statement.encode()))
        return [BgpUpdate((first, own))]
    if isinstance(received, SbgpUpdate):
        first = received.entries[0]
        origin = first.statement.node
        reused = SignedStatement(
            SbgpStatement(origin, node.id, first.statement.timestamp),
            first.signature,
        )
        out = []
        for neighbor in sorted(node.neighbors - {origin, node.id}):
            statement = SbgpStatement(node.id, neighbor, now)
            own = SignedStatement(statement, baseline_sign(kp, statement.encode()))
            out.append(SbgpUpdate((reused, own)))
        return out
    chain = received.chain(registry)
    dropped = path[1:]
    sigma = received.sigma
    if set(dropped) <= set(extracted):
        privates = [registry.keypair(x).private for x in dropped]
        sigma = ecs_strip(chain, sigma, privates)
    hop = PathHop(now, node.id)
    forged = ecs_sign_unchecked(kp, hop.message, chain[:1], sigma)
    return [SsbgpUpdate((received.path_hops[0], hop), forged)]


def repeater_behavior(node: SimNode, received: Update) -> List[Update]:
    """
    Rebroadcast the received update without modification.

    The simulator calls this for every update the repeater accepted and
    for S-BGP updates addressed to another node, which the repeater
    relays as they are.
    """
    return [received]


# --- the simulator


class Simulation:
    """
    One run of a scenario.

    Parameters
    ----------
    scenario
        The scenario to simulate.
    seed
        Overrides the scenario's key seed.
    delay
        Propagation delay of every broadcast hop.
    """

    def __init__(self, scenario: Scenario, seed=None, delay: int = PROPAGATION_DELAY):
        if delay < 1:
            raise ValueError("the propagation delay must be at least 1")
        self.scenario = scenario
        self.seed = scenario.seed if seed is None else seed
        self.delay = delay
        self.adjacency = coverage_graph(scenario)
        self.registry = KeyRegistry.generate(scenario.node_ids, self.seed)
        self.extracted = frozenset(scenario.extracted_keys)
        engine_cls = ENGINES[scenario.protocol]
        heard = self.heard_neighbors()
        self.nodes: Dict[str, SimNode] = {}
        for spec in scenario.nodes:
            engine = engine_cls(spec.id, self.registry, scenario.threshold_t, heard[spec.id])
            self.nodes[spec.id] = SimNode(spec, engine, self.adjacency[spec.id])
        ids = scenario.node_ids
        self.metrics = Metrics(
            scenario=scenario.name,
            protocol=scenario.protocol,
            seed=self.seed,
            broadcasts=dict.fromkeys(ids, 0),
            control_bytes=dict.fromkeys(ids, 0),
            signature_bytes=dict.fromkeys(ids, 0),
            signature_checks=dict.fromkeys(ids, 0),
            pairing_checks=dict.fromkeys(ids, 0),
            data_transmissions=dict.fromkeys(ids, 0),
            tables={x: {} for x in ids},
        )
        self._queue: List[Event] = []
        self._order = itertools.count()

    def heard_neighbors(self) -> Dict[str, FrozenSet[str]]:
        """
        Return the nodes each node believes are in its coverage.

        Without sender identification a repeater's relays can't be told
        apart from direct transmissions, so the neighbors of a repeater
        appear to be neighbors of every node the repeater hears.
        """
        if self.scenario.sender_identification:
            return dict(self.adjacency)
        repeaters = {x.id for x in self.scenario.nodes if x.role == "REPEATER"}
        out = {}
        for node, near in self.adjacency.items():
            heard = set(near)
            for repeater in near & repeaters:
                heard |= self.adjacency[repeater]
            heard.discard(node)
            out[node] = frozenset(heard)
        return out

    def _schedule(self, time: int, receiver: str, payload):
        heapq.heappush(self._queue, Event(time, next(self._order), receiver, payload))

    def _transmit(self, sender: str, payload, now: int):
        for receiver in sorted(self.adjacency[sender]):
            self._schedule(now + self.delay, receiver, payload)

    def broadcast(self, sender: str, update: Update, now: int):
        """Send a control update to every node in sender's coverage."""
        self.metrics.broadcasts[sender] += 1
        self.metrics.control_bytes[sender] += len(update.encode())
        self.metrics.signature_bytes[sender] += signature_overhead(update)
        self._transmit(sender, Broadcast(sender, update), now)

    def _reject(self, node: SimNode, sender: str, error: UpdateRejected, now: int):
        logger.debug("%s rejected update from %s at %d: %s", node.id, sender, now, error)
        self.metrics.rejections.append(
            {
                "node": node.id,
                "sender": sender,
                "kind": error.kind,
                "position": error.position,
                "time": now,
            }
        )

    def _on_updates(self, now: int, node: SimNode, messages: List[Broadcast]):
        """Handle the control updates node received in one tick."""
        fresh = []
        for message in messages:
            digest = hashlib.sha256(message.update.encode()).digest()
            if digest in node.seen_updates:
                continue
            node.seen_updates.add(digest)
            fresh.append(message)
        if not fresh:
            return
        identify = self.scenario.sender_identification
        items = [(x.update, x.sender if identify else None) for x in fresh]
        results = node.engine.process_batch(items, now)
        for message, result in zip(fresh, results):
            if isinstance(result, UpdateRejected):
                self._reject(node, message.sender, result, now)
                relay = node.role == "REPEATER" and result.kind == "NotAddressedToMe"
                out = repeater_behavior(node, message.update) if relay else []
            else:
                out = self._outgoing(now, node, message.update, result)
            for update in out:
                self.broadcast(node.id, update, now)

    def _outgoing(self, now: int, node: SimNode, received: Update, honest: List[Update]):
        """What node broadcasts after accepting received, given its role."""
        if node.role == "TRUNCATOR":
            forged = truncator_behavior(node, received, now, self.registry, self.extracted)
            if forged:
                logger.info("%s forges a truncated route at %d", node.id, now)
                return forged
        elif node.role == "REPEATER":
            return repeater_behavior(node, received)
        return honest

    def _on_tick(self, now: int, events: List[Event]):
        """
        Deliver all events of one tick in order.

        The control updates of each receiver are handed to its engine
        together, at the position of the first of them.
        """
        updates: Dict[str, List[Broadcast]] = {}
        for event in events:
            self.metrics.receptions.append((event.time, event.payload.sender, event.receiver))
            if isinstance(event.payload, Broadcast):
                updates.setdefault(event.receiver, []).append(event.payload)
        for event in events:
            node = self.nodes[event.receiver]
            if isinstance(event.payload, DataPacket):
                self._on_packet(now, node, event.payload)
            elif event.receiver in updates:
                self._on_updates(now, node, updates.pop(event.receiver))

    def _on_packet(self, now: int, node: SimNode, packet: DataPacket):
        if packet.packet_id in node.seen_packets:
            return
        node.seen_packets.add(packet.packet_id)
        record = self.metrics.data_packets[packet.packet_id]
        hops = packet.hops + (node.id,)
        if node.id == packet.dest:
            if not record["delivered"]:
                record["delivered"] = True
                record["path"] = list(hops)
                record["delivered_at"] = now
            return
        if node.role == "TRUNCATOR":
            upstream = self.nodes[packet.sender].table.get(packet.dest)
            if upstream is not None and upstream.next_hop == node.id:
                record["intercepted_by"].append(node.id)
            return
        if forward_decision(node.table, packet.dest, packet.sender) == "FORWARD":
            self.metrics.data_transmissions[node.id] += 1
            self._transmit(node.id, packet._replace(sender=node.id, hops=hops), now)

    def _send_packet(self, now: int, packet_id: int):
        record = self.metrics.data_packets[packet_id]
        src = self.nodes[record["src"]]
        src.seen_packets.add(packet_id)
        if src.table.get(record["dest"]) is None:
            logger.info("%s has no route to %s", src.id, record["dest"])
            return
        record["sent"] = True
        self.metrics.data_transmissions[src.id] += 1
        packet = DataPacket(packet_id, src.id, record["dest"], src.id, (src.id,))
        self._transmit(src.id, packet, now)

    def run(self) -> Metrics:
        """Run the event loop to completion and return the metrics."""
        scenario = self.scenario
        logger.info(
            "running %s (%s, %d nodes)", scenario.name or "scenario", scenario.protocol,
            len(self.nodes),
        )
        pending = []
        for number, spec in enumerate(scenario.data_packets):
            at = scenario.convergence_window if spec.at is None else spec.at
            self.metrics.data_packets.append(
                {
                    "id": number,
                    "src": spec.src,
                    "dest": spec.dest,
                    "at": at,
                    "sent": False,
                    "delivered": False,
                    "delivered_at": None,
                    "path": [],
                    "intercepted_by": [],
                }
            )
            pending.append((at, number))
        pending.sort()
        for initiator in scenario.initiators:
            for update in self.nodes[initiator].engine.initiate(0):
                self.broadcast(initiator, update, 0)
        while self._queue or pending:
            if pending and (not self._queue or pending[0][0] <= self._queue[0].time):
                at, number = pending.pop(0)
                self._send_packet(at, number)
                continue
            tick = [heapq.heappop(self._queue)]
            while self._queue and self._queue[0].time == tick[0].time:
                tick.append(heapq.heappop(self._queue))
            self._on_tick(tick[0].time, tick)
        for node in self.nodes.values():
            self.metrics.tables[node.id] = node.table.to_dict()
            self.metrics.signature_checks[node.id] = node.engine.counters["signature_checks"]
            self.metrics.pairing_checks[node.id] = node.engine.counters["pairing_checks"]
        for record in self.metrics.data_packets:
            record["blackholed"] = record["sent"] and not record["delivered"]
        logger.info("finished %s", scenario.name or "scenario")
        return self.metrics


def run_scenario(scenario: Scenario, seed=None) -> Metrics:
    """Simulate scenario and return its metrics."""
    return Simulation(scenario, seed=seed).run()


def run_scenarios(scenarios: Sequence[Scenario], seed=None, jobs: int = 1) -> List[Metrics]:
    """
    Run independent scenarios, in worker processes if jobs > 1.
    """
    if jobs <= 1 or len(scenarios) <= 1:
        return [run_scenario(x, seed) for x in scenarios]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=jobs) as executor:
        return list(executor.map(run_scenario, scenarios, itertools.repeat(seed)))
