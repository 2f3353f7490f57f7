"""
Tests for the routing table and the three protocol engines.
"""
from collections import Counter

import pytest

from ssbgp.backend import get_context
from ssbgp.constants import L_PT
from ssbgp.ecs import EcsSignature, ecs_strip
from ssbgp.exceptions import UpdateRejected
from ssbgp.routing import (
    ENGINES,
    BgpStatement,
    BgpUpdate,
    KeyRegistry,
    PathHop,
    RoutingTable,
    RoutingTableEntry,
    SbgpStatement,
    SbgpUpdate,
    SignedStatement,
    SsbgpUpdate,
    baseline_sign,
    baseline_verify,
    bgp_initiate,
    bgp_process,
    forward_decision,
    sbgp_initiate,
    sbgp_process,
    signature_overhead,
    ssbgp_batch_verify,
    ssbgp_initiate,
    ssbgp_process,
    table_apply,
)
from ssbgp.utils import pack_int, pack_prefixed


@pytest.fixture(scope="module")
def registry():
    return KeyRegistry.generate(list("ABCDEFXY"), seed="test-routing")


def bgp_chain(registry, nodes):
    """Propagate an advertisement of nodes[0] along nodes; hop j acts at time j."""
    update = bgp_initiate(nodes[0], 0, registry.keypair(nodes[0]))
    for now, node in enumerate(nodes[1:], start=1):
        update = bgp_process(node, update, now, RoutingTable(node), registry)
    return update


def ssbgp_chain(registry, nodes):
    update = ssbgp_initiate(nodes[0], 0, registry.keypair(nodes[0]))
    for now, node in enumerate(nodes[1:], start=1):
        update = ssbgp_process(node, update, now, RoutingTable(node), registry)
    return update


def rejected_kind(func, *args, **kwargs):
    with pytest.raises(UpdateRejected) as e:
        func(*args, **kwargs)
    return e.value.kind, e.value.position


class TestRoutingTable:
    """Tests for installing routes."""

    def test_apply(self):
        table = table_apply(RoutingTable("C"), ["A", "B"])
        assert table["A"] == RoutingTableEntry("A", "B", 2)

    def test_ties_keep_incumbent(self):
        table = table_apply(RoutingTable("D"), ["A", "B", "C"])
        table_apply(table, ["A", "X", "E"])
        assert table["A"].next_hop == "C"

    def test_better_route_replaces(self):
        table = table_apply(RoutingTable("D"), ["A", "B", "C"])
        table_apply(table, ["A", "F"])
        assert table["A"] == RoutingTableEntry("A", "F", 2)

    def test_empty_path_is_noop(self):
        assert len(table_apply(RoutingTable("A"), [])) == 0

    def test_metric_at_least_one(self):
        with pytest.raises(ValueError, match="metric"):
            RoutingTableEntry("A", "B", 0)


class TestForwardDecision:
    """Tests for the data plane forwarding rule."""

    def test_from_next_hop_is_dropped(self):
        table = table_apply(RoutingTable("D"), ["A", "B", "C"])
        assert forward_decision(table, "A", "C") == "DROP"

    def test_from_elsewhere_is_forwarded(self):
        table = table_apply(RoutingTable("C"), ["A", "B"])
        assert forward_decision(table, "A", "E") == "FORWARD"

    def test_no_route(self):
        assert forward_decision(RoutingTable("C"), "A", "E") == "DROP"

    def test_arrived(self):
        table = table_apply(RoutingTable("A"), ["B"])
        assert forward_decision(table, "A", "B") == "DROP"


class TestBaselineSignature:
    """Tests for the single signer scheme used by BGP and S-BGP."""

    def test_sign_verify(self, registry):
        kp = registry.keypair("A")
        sig = baseline_sign(kp, b"statement")
        assert baseline_verify(kp.public, b"statement", sig)
        assert not baseline_verify(kp.public, b"other", sig)
        assert not baseline_verify(registry.public("B"), b"statement", sig)


class TestKeyRegistry:
    def test_lookup(self, registry):
        assert registry.node_of(registry.public("C")) == "C"
        assert "Z" not in registry

    def test_duplicate_keys(self, registry):
        kp = registry.keypair("A")
        with pytest.raises(ValueError, match="distinct"):
            KeyRegistry({"A": kp, "B": kp})


class TestBgp:
    """Tests for plain BGP updates."""

    def test_propagation(self, registry):
        update = bgp_initiate("A", 0, registry.keypair("A"))
        table = RoutingTable("B")
        out = bgp_process("B", update, 1, table, registry)
        assert table["A"] == RoutingTableEntry("A", "A", 1)
        assert out.path == ("A", "B")
        assert out.entries[0].statement.previous == "R0"

    def test_three_hops(self, registry):
        update = bgp_chain(registry, ["A", "B", "C"])
        table = RoutingTable("D")
        bgp_process("D", update, 3, table, registry)
        assert table["A"] == RoutingTableEntry("A", "C", 3)

    def test_loop_before_crypto(self, registry):
        update = bgp_chain(registry, ["A", "B", "C"])
        counters = Counter()
        kind, position = rejected_kind(
            bgp_process, "B", update, 3, RoutingTable("B"), registry, counters=counters
        )
        assert (kind, position) == ("LoopDetected", 1)
        assert counters["signature_checks"] == 0

    def test_bad_format_before_crypto(self, registry):
        update = bgp_chain(registry, ["A", "B"])
        first, second = update.entries
        broken = SignedStatement(BgpStatement("C", "B", 1), second.signature)
        counters = Counter()
        kind, position = rejected_kind(
            bgp_process, "C", BgpUpdate((first, broken)), 2, RoutingTable("C"), registry,
            counters=counters,
        )
        assert (kind, position) == ("BadFormat", 1)
        assert counters["signature_checks"] == 0

    def test_unknown_node(self, registry):
        statement = BgpStatement("R0", "Q", 0)
        sig = baseline_sign(registry.keypair("A"), statement.encode())
        update = BgpUpdate((SignedStatement(statement, sig),))
        kind, _ = rejected_kind(bgp_process, "B", update, 1, RoutingTable("B"), registry)
        assert kind == "BadFormat"

    def test_not_better(self, registry):
        table = table_apply(RoutingTable("C"), ["A", "B"])
        update = bgp_chain(registry, ["A", "E"])
        kind, _ = rejected_kind(bgp_process, "C", update, 2, table, registry)
        assert kind == "NotBetter"

    def test_stale(self, registry):
        update = bgp_chain(registry, ["A", "B"])
        kind, position = rejected_kind(
            bgp_process, "C", update, 5000, RoutingTable("C"), registry, threshold_t=1000
        )
        assert (kind, position) == ("StaleTimestamp", 1)

    def test_timestamps_going_backwards(self, registry):
        update = bgp_chain(registry, ["A", "B"])
        kind, _ = rejected_kind(bgp_process, "C", update, 0, RoutingTable("C"), registry)
        assert kind == "StaleTimestamp"

    def test_bad_signature(self, registry):
        update = bgp_chain(registry, ["A", "B", "C"])
        entries = list(update.entries)
        entries[1] = SignedStatement(entries[1].statement, entries[2].signature)
        kind, position = rejected_kind(
            bgp_process, "D", BgpUpdate(tuple(entries)), 3, RoutingTable("D"), registry
        )
        assert (kind, position) == ("BadSignature", 1)

    def test_sender_mismatch(self, registry):
        update = bgp_chain(registry, ["A", "B"])
        kind, _ = rejected_kind(
            bgp_process, "C", update, 2, RoutingTable("C"), registry, sender="F"
        )
        assert kind == "SenderMismatch"

    def test_truncation_is_accepted(self, registry):
        """A truncated, re-signed BGP update convinces the receiver."""
        honest = bgp_chain(registry, ["A", "B", "C", "D"])
        table = table_apply(RoutingTable("D"), ["A", "B", "C"])
        statement = BgpStatement("A", "F", 4)
        own = SignedStatement(statement, baseline_sign(registry.keypair("F"), statement.encode()))
        forged = BgpUpdate((honest.entries[0], own))
        bgp_process("D", forged, 5, table, registry)
        assert table["A"] == RoutingTableEntry("A", "F", 2)

    def test_wire_format(self, registry):
        update = bgp_chain(registry, ["A", "B", "C"])
        data = update.encode()
        statements = sum(len(x.statement.encode()) for x in update.entries)
        assert len(data) == 2 + statements + 3 * L_PT
        assert BgpUpdate.decode(data) == update
        assert signature_overhead(update) == 3 * L_PT

    def test_decode_truncated(self, registry):
        data = bgp_chain(registry, ["A", "B"]).encode()
        with pytest.raises(ValueError):
            BgpUpdate.decode(data[:-1])


class TestSbgp:
    """Tests for recipient specific S-BGP updates."""

    def test_one_update_per_neighbor(self, registry):
        sent = sbgp_initiate("A", 0, registry.keypair("A"), {"B"})
        assert [x.recipient for x in sent] == ["B"]
        at_b = sbgp_process("B", sent[0], 1, RoutingTable("B"), registry, {"A", "C"})
        assert [x.recipient for x in at_b] == ["C"]
        table = RoutingTable("C")
        at_c = sbgp_process("C", at_b[0], 2, table, registry, {"B", "D", "E"})
        assert [x.recipient for x in at_c] == ["D", "E"]
        assert table["A"] == RoutingTableEntry("A", "B", 2)

    def test_not_addressed_to_me(self, registry):
        sent = sbgp_initiate("A", 0, registry.keypair("A"), {"B"})
        kind, _ = rejected_kind(
            sbgp_process, "X", sent[0], 1, RoutingTable("X"), registry, {"A"}
        )
        assert kind == "NotAddressedToMe"

    def test_reused_statement_signature(self, registry):
        """The origin's signature names B, so it does not cover a statement for F."""
        sent = sbgp_initiate("A", 0, registry.keypair("A"), {"B"})
        first = sent[0].entries[0]
        reused = SignedStatement(SbgpStatement("A", "F", 0), first.signature)
        statement = SbgpStatement("F", "D", 4)
        own = SignedStatement(statement, baseline_sign(registry.keypair("F"), statement.encode()))
        kind, position = rejected_kind(
            sbgp_process, "D", SbgpUpdate((reused, own)), 5, RoutingTable("D"), registry,
            {"C", "F"},
        )
        assert (kind, position) == ("BadSignature", 0)

    def test_wire_format(self, registry):
        sent = sbgp_initiate("A", 0, registry.keypair("A"), {"B"})
        assert SbgpUpdate.decode(sent[0].encode()) == sent[0]
        assert signature_overhead(sent[0]) == L_PT


class TestSsbgp:
    """Tests for chain signed SS-BGP updates."""

    def test_propagation(self, registry):
        update = ssbgp_chain(registry, ["A", "B", "C"])
        assert update.path == ("A", "B", "C")
        assert update.timestamps == (0, 1, 2)
        table = RoutingTable("D")
        out = ssbgp_process("D", update, 3, table, registry)
        assert table["A"] == RoutingTableEntry("A", "C", 3)
        assert out.path == ("A", "B", "C", "D")

    def test_reused_sigma_rejected(self, registry):
        honest = ssbgp_chain(registry, ["A", "B", "C", "D", "F"])
        hops = (honest.path_hops[0], PathHop(4, "F"))
        forged = SsbgpUpdate(hops, honest.sigma)
        counters = Counter()
        kind, _ = rejected_kind(
            ssbgp_process, "D", forged, 5, RoutingTable("D"), registry, counters=counters
        )
        assert kind == "BadSignature"
        assert counters["signature_checks"] == 1

    def test_stripped_sigma_accepted(self, registry):
        """With the dropped hops' private keys the truncated chain verifies."""
        honest = ssbgp_chain(registry, ["A", "B", "C", "D"])
        chain = honest.chain(registry)
        privates = [registry.keypair(x).private for x in "BCD"]
        stripped = ecs_strip(chain, honest.sigma, privates)
        prefix = SsbgpUpdate(honest.path_hops[:1], stripped)
        table = RoutingTable("F")
        out = ssbgp_process("F", prefix, 4, table, registry)
        assert table["A"] == RoutingTableEntry("A", "A", 1)
        assert out.path == ("A", "F")

    def test_extension_is_signed(self, registry):
        kp = registry.keypair("A")
        update = ssbgp_initiate("A", 0, kp, extension=b"lat=1;lon=2")
        assert update.path_hops[0].extension == b"lat=1;lon=2"
        ssbgp_process("B", update, 1, RoutingTable("B"), registry)
        tampered = SsbgpUpdate((PathHop(0, "A", b"lat=9;lon=9"),), update.sigma)
        kind, _ = rejected_kind(ssbgp_process, "B", tampered, 1, RoutingTable("B"), registry)
        assert kind == "BadSignature"

    def test_self_in_path(self, registry):
        update = ssbgp_chain(registry, ["A", "B"])
        counters = Counter()
        kind, _ = rejected_kind(
            ssbgp_process, "A", update, 2, RoutingTable("A"), registry, counters=counters
        )
        assert kind == "LoopDetected"
        assert counters["signature_checks"] == 0

    def test_sender_mismatch(self, registry):
        update = ssbgp_chain(registry, ["A", "B", "C", "D"])
        kind, _ = rejected_kind(
            ssbgp_process, "Y", update, 5, RoutingTable("Y"), registry, sender="F"
        )
        assert kind == "SenderMismatch"

    def test_wire_format(self, registry):
        update = ssbgp_chain(registry, ["A", "B"])
        assert SsbgpUpdate.decode(update.encode()) == update

    @pytest.mark.parametrize("length", [1, 10, 100])
    def test_constant_signature_overhead(self, length):
        """SS-BGP spends one signature per update; BGP one per hop."""
        g = get_context().generator
        hops = tuple(PathHop(j, f"N{j:03d}") for j in range(length))
        update = SsbgpUpdate(hops, EcsSignature(g))
        path_bytes = 2 + sum(
            len(pack_int(x.timestamp, 8) + pack_prefixed(x.node.encode(), 1) + pack_prefixed(b"", 2))
            for x in hops
        )
        assert len(update.encode()) - path_bytes == L_PT
        assert signature_overhead(update) == L_PT
        previous = ["R0"] + [x.node for x in hops[:-1]]
        entries = tuple(
            SignedStatement(BgpStatement(p, x.node, x.timestamp), g)
            for p, x in zip(previous, hops)
        )
        bgp = BgpUpdate(entries)
        statements = sum(len(x.statement.encode()) for x in entries)
        assert len(bgp.encode()) - 2 - statements == length * L_PT
        assert signature_overhead(bgp) == length * L_PT


class TestEngines:
    """Tests for the per node engines."""

    @pytest.mark.parametrize("protocol", sorted(ENGINES))
    def test_two_nodes(self, registry, protocol):
        cls = ENGINES[protocol]
        a = cls("A", registry, neighbors={"B"})
        b = cls("B", registry, neighbors={"A"})
        (update,) = a.initiate(0)
        out = b.process(update, 1, sender="A")
        assert b.table["A"] == RoutingTableEntry("A", "A", 1)
        assert b.counters["signature_checks"] == 1
        if protocol == "SBGP":
            assert out == []
        else:
            assert len(out) == 1

    def test_same_tick_chains_share_one_check(self, registry):
        engine = ENGINES["SSBGP"]("C", registry)
        from_a = ssbgp_chain(registry, ["A", "B"])
        from_x = ssbgp_chain(registry, ["X", "E"])
        results = engine.process_batch([(from_a, "B"), (from_x, "E")], 2)
        assert [x[0].path for x in results] == [("A", "B", "C"), ("X", "E", "C")]
        assert engine.table["X"] == RoutingTableEntry("X", "E", 2)
        assert engine.counters["signature_checks"] == 2
        assert engine.counters["pairing_checks"] == 1

    def test_failed_batch_names_the_bad_update(self, registry):
        """One forged update costs a check per chain on top of the aggregate."""
        engine = ENGINES["SSBGP"]("D", registry)
        honest = ssbgp_chain(registry, ["A", "B", "C"])
        other = ssbgp_chain(registry, ["X", "E", "C"])
        forged = SsbgpUpdate(other.path_hops, honest.sigma)
        first, second = engine.process_batch([(honest, "C"), (forged, "C")], 3)
        assert first[0].path == ("A", "B", "C", "D")
        assert isinstance(second, UpdateRejected)
        assert (second.kind, second.position) == ("BadSignature", 2)
        assert "X" not in engine.table
        assert engine.counters["signature_checks"] == 2
        assert engine.counters["pairing_checks"] == 3

    def test_batch_skips_prechecked_rejections(self, registry):
        """Updates failing the cheap checks never reach the aggregate."""
        engine = ENGINES["SSBGP"]("C", registry)
        looped = ssbgp_chain(registry, ["C", "B"])
        honest = ssbgp_chain(registry, ["A", "B"])
        first, second = engine.process_batch([(looped, "B"), (honest, "B")], 2)
        assert first.kind == "LoopDetected"
        assert second[0].path == ("A", "B", "C")
        assert engine.counters["pairing_checks"] == 1


class TestBatchVerify:
    """Tests for checking several chains at once."""

    def test_empty(self):
        assert ssbgp_batch_verify([]) == []

    def test_all_valid(self, registry):
        updates = [ssbgp_chain(registry, p) for p in (["A", "B"], ["X", "E", "C"])]
        chains = [(x.chain(registry), x.sigma) for x in updates]
        counters = Counter()
        assert ssbgp_batch_verify(chains, counters, rng_seed=b"batch") == [True, True]
        assert counters == Counter(signature_checks=2, pairing_checks=1)

    def test_falls_back_per_chain(self, registry):
        good = ssbgp_chain(registry, ["A", "B"])
        bad = ssbgp_chain(registry, ["X", "E"])
        chains = [(good.chain(registry), good.sigma), (bad.chain(registry), good.sigma)]
        counters = Counter()
        assert ssbgp_batch_verify(chains, counters, rng_seed=b"batch") == [True, False]
        assert counters == Counter(signature_checks=2, pairing_checks=3)
