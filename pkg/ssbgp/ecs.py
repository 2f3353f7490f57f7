"""
Enhanced chain signatures.

A chain signature authenticates an ordered sequence of (message, public key)
links with a single group element

    sigma_i = prod_j H(<(m_1, Y_1), ..., (m_j, Y_j)>) ** x_j

and is verified with

    e(sigma_i, g) == prod_j e(H(<(m_1, Y_1), ..., (m_j, Y_j)>), Y_j).

Because every factor hashes the whole prefix up to its signer, a signature
on a sequence cannot be turned into one on a strict prefix without the
private keys of every dropped signer.
"""
import functools
import hashlib
import logging
import secrets
from typing import Iterable, List, Mapping, Optional, Sequence, Tuple

from ssbgp.backend import (
    G1Element,
    GroupContext,
    Scalar,
    g1_combine,
    g1_deserialize,
    g1_exp,
    g1_identity,
    g1_inverse,
    get_context,
    hash_to_g1,
    pairing_check,
    scalar_random,
)
from ssbgp.constants import (
    L_PT,
    POINT_MARKER,
    PREFIX_TAG,
    RANDOMIZER_BITS,
    UNIT_MARKER,
)
from ssbgp.dataclasses import dataclass
from ssbgp.exceptions import (
    BackendError,
    ChainDecodeError,
    DuplicateKeyError,
    EmptyPrefixError,
    InvalidPriorSignatureError,
    InvalidSignatureError,
    KeyMismatchError,
)
from ssbgp.utils import ByteReader, pack_int, pack_prefixed

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChainLink:
    """
    One (message, public key) element of a chain.

    Public keys are checked for subgroup membership when decoded from
    bytes, not here.
    """

    message: bytes
    pubkey: G1Element

    def encode(self) -> bytes:
        """Length-prefixed message followed by the compressed key."""
        return pack_prefixed(self.message, 4) + self.pubkey.to_bytes()


@dataclass(frozen=True)
class ChainSequence:
    """An ordered, possibly empty, sequence of chain links."""

    links: Tuple[ChainLink, ...] = ()

    @classmethod
    def of(cls, pairs: Iterable[Tuple[bytes, G1Element]]) -> "ChainSequence":
        """Build a sequence from (message, pubkey) tuples."""
        return cls(tuple(ChainLink(message=m, pubkey=y) for m, y in pairs))

    @property
    def keys(self) -> Tuple[G1Element, ...]:
        return tuple(x.pubkey for x in self.links)

    def encode_prefix(self) -> bytes:
        """Return the canonical encoding hashed by :func:`prefix_digest`."""
        body = b"".join(x.encode() for x in self.links)
        return PREFIX_TAG + pack_int(len(self.links), 4) + body

    def __len__(self):
        return len(self.links)

    def __iter__(self):
        return iter(self.links)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return ChainSequence(self.links[item])
        return self.links[item]


EMPTY = ChainSequence()


@dataclass(frozen=True)
class EcsSignature:
    """
    A chain signature. The signature on the empty chain is the unit, which
    travels as the single marker byte 0x00.
    """

    value: G1Element

    @classmethod
    def unit(cls) -> "EcsSignature":
        return cls(g1_identity())

    @property
    def is_unit(self) -> bool:
        return self.value.is_identity

    def to_bytes(self) -> bytes:
        if self.is_unit:
            return UNIT_MARKER
        return POINT_MARKER + self.value.to_bytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "EcsSignature":
        reader = ByteReader(data, ChainDecodeError)
        out = _read_signature(reader)
        reader.finish()
        return out


@dataclass(frozen=True)
class KeyPair:
    """
    A signer's private scalar and public key. The public key carries its G2
    twin so it can sit on the right-hand side of a pairing.
    """

    private: Scalar
    public: G1Element

    def __post_init__(self):
        plain = G1Element(get_context().generator.point)
        if g1_exp(plain, self.private) != self.public:
            raise ValueError("public key does not match private key")
        if not self.public.has_twin:
            raise ValueError("public key must carry its G2 twin")


# --- sequence calculus


def seq_is_prefix(a: ChainSequence, b: ChainSequence) -> bool:
    """Return True if b is a (possibly empty or equal) prefix of a."""
    return len(b) <= len(a) and a.links[: len(b)] == b.links


def _common_prefix_length(a: ChainSequence, b: ChainSequence) -> int:
    count = 0
    for x, y in zip(a.links, b.links):
        if x != y:
            break
        count += 1
    return count


def seq_overlap(a: ChainSequence, b: ChainSequence) -> bool:
    """Return True if a and b share a nonempty common prefix."""
    return bool(a.links) and bool(b.links) and a.links[0] == b.links[0]


def seq_odot(a: ChainSequence, b: ChainSequence) -> frozenset:
    """Return the set of links in the longest common prefix of a and b."""
    return frozenset(a.links[: _common_prefix_length(a, b)])


def seq_union(a: ChainSequence, b: ChainSequence) -> frozenset:
    return frozenset(a.links) | frozenset(b.links)


def seq_intersect(a: ChainSequence, b: ChainSequence) -> frozenset:
    return frozenset(a.links) & frozenset(b.links)


def seq_append(a: ChainSequence, link: ChainLink) -> ChainSequence:
    """Append a link; the result is always flat."""
    return ChainSequence(a.links + (link,))


def prefix_digest(prefix: ChainSequence) -> G1Element:
    """Hash a nonempty prefix into G1."""
    if not len(prefix):
        raise EmptyPrefixError("cannot hash the empty sequence")
    return hash_to_g1(prefix.encode_prefix())


# --- the scheme


@functools.lru_cache(maxsize=4096)
def _derive_keypair(ctx: GroupContext, seed: bytes) -> KeyPair:
    private = scalar_random(ctx, seed)
    return KeyPair(private=private, public=g1_exp(ctx.generator, private))


def ecs_keygen(ctx: Optional[GroupContext] = None, seed: Optional[bytes] = None) -> KeyPair:
    """
    Generate a key pair.

    Parameters
    ----------
    ctx
        The group context, defaults to BLS12-381.
    seed
        Derive the key deterministically from these bytes. If None, use
        fresh entropy.
    """
    ctx = ctx or get_context()
    if seed is None:
        private = scalar_random(ctx)
        return KeyPair(private=private, public=g1_exp(ctx.generator, private))
    return _derive_keypair(ctx, bytes(seed))


def ecs_sign_unchecked(
    kp: KeyPair,
    msg: bytes,
    prior_seq: ChainSequence,
    prior_sig: EcsSignature,
) -> EcsSignature:
    """
    Extend a chain signature without checking the prior chain.

    Only for callers that have just verified (prior_seq, prior_sig) and
    checked the signer's key is absent, e.g. a router right after
    validating an update.
    """
    sequence = seq_append(prior_seq, ChainLink(message=msg, pubkey=kp.public))
    factor = g1_exp(prefix_digest(sequence), kp.private)
    return EcsSignature(g1_combine(prior_sig.value, factor))


def ecs_sign(
    kp: KeyPair,
    msg: bytes,
    prior_seq: ChainSequence,
    prior_sig: EcsSignature,
) -> EcsSignature:
    """
    Append (msg, kp.public) to prior_seq and return the chain signature on
    the longer sequence.

    Raises
    ------
    DuplicateKeyError
        If kp.public already signed a link of prior_seq.
    InvalidPriorSignatureError
        If prior_sig is not a valid signature on prior_seq.
    """
    own = kp.public.to_bytes()
    if any(x.to_bytes() == own for x in prior_seq.keys):
        raise DuplicateKeyError("signer's key already appears in the chain")
    if not ecs_verify(prior_seq, prior_sig):
        raise InvalidPriorSignatureError("prior chain signature is invalid")
    return ecs_sign_unchecked(kp, msg, prior_seq, prior_sig)


def ecs_extend(
    kp: KeyPair,
    msg: bytes,
    prior_seq: ChainSequence,
    prior_sig: EcsSignature,
) -> Tuple[ChainSequence, EcsSignature]:
    """Sign like :func:`ecs_sign` and also return the extended sequence."""
    sig = ecs_sign(kp, msg, prior_seq, prior_sig)
    return seq_append(prior_seq, ChainLink(message=msg, pubkey=kp.public)), sig


def _has_bad_key(seq: ChainSequence) -> bool:
    """Return True if a public key repeats or is the group identity."""
    if any(x.is_identity for x in seq.keys):
        return True
    encoded = [x.to_bytes() for x in seq.keys]
    return len(set(encoded)) != len(encoded)


def _link_pairs(seq: ChainSequence, exponent: Optional[Scalar] = None):
    """Yield the (H(prefix_j), Y_j) pairs of the verification equation."""
    for j, link in enumerate(seq.links):
        digest = prefix_digest(seq[: j + 1])
        if exponent is not None:
            digest = g1_exp(digest, exponent)
        yield digest, link.pubkey


def ecs_verify(seq: ChainSequence, sig: EcsSignature) -> bool:
    """
    Return True (VALID) if sig is a chain signature on seq.

    The empty sequence is valid only with the unit signature; sequences
    with a repeated or identity public key are never valid. Malformed
    input is INVALID rather than an error.
    """
    if not isinstance(sig, EcsSignature) or not isinstance(seq, ChainSequence):
        return False
    if not len(seq):
        return sig.is_unit
    if _has_bad_key(seq):
        return False
    g = get_context().generator
    try:
        pairs = [(g1_inverse(sig.value), g), *_link_pairs(seq)]
        return pairing_check(pairs)
    except BackendError as e:
        logger.debug("chain verification failed on malformed input: %s", e)
        return False


def ecs_strip(
    seq: ChainSequence,
    sig: EcsSignature,
    suffix_privkeys: Sequence[Scalar],
) -> EcsSignature:
    """
    Remove the contributions of the last len(suffix_privkeys) signers.

    This is what an adversary holding those private keys can do; the result
    verifies on the remaining prefix.

    Raises
    ------
    KeyMismatchError
        If a key does not belong to the link it is aligned with.
    InvalidSignatureError
        If sig is not valid on seq.
    """
    count = len(suffix_privkeys)
    if count > len(seq):
        msg = f"{count} keys given for a chain of {len(seq)} links"
        raise KeyMismatchError(msg)
    if not ecs_verify(seq, sig):
        raise InvalidSignatureError("can only strip a valid chain signature")
    plain = G1Element(get_context().generator.point)
    start = len(seq) - count
    value = sig.value
    for offset, private in enumerate(suffix_privkeys):
        j = start + offset
        if g1_exp(plain, private) != seq[j].pubkey:
            raise KeyMismatchError(f"key {offset} does not match link {j}")
        factor = g1_exp(prefix_digest(seq[: j + 1]), private)
        value = g1_combine(value, g1_inverse(factor))
    return EcsSignature(value)


def _randomizer(index: int, rng_seed: Optional[bytes]) -> Scalar:
    if rng_seed is None:
        return Scalar(secrets.randbits(RANDOMIZER_BITS) or 1)
    data = bytes(rng_seed) + index.to_bytes(4, "big")
    digest = hashlib.shake_256(data).digest(RANDOMIZER_BITS // 8)
    return Scalar(int.from_bytes(digest, "big") or 1)


def ecs_aggregate_verify(
    chains: Sequence[Tuple[ChainSequence, EcsSignature]],
    rng_seed: Optional[bytes] = None,
) -> bool:
    """
    Verify several chains with one pairing-product check.

    Each chain is weighted by a random 128 bit exponent so invalid chains
    can't cancel each other out.

    Parameters
    ----------
    chains
        A nonempty list of (sequence, signature) tuples.
    rng_seed
        Derive the exponents from this seed instead of fresh entropy.
    """
    if not chains:
        raise ValueError("aggregate verification needs at least one chain")
    g = get_context().generator
    combined = g1_identity()
    pairs = []
    try:
        for index, (seq, sig) in enumerate(chains):
            if not len(seq):
                if not sig.is_unit:
                    return False
                continue
            if _has_bad_key(seq):
                return False
            r = _randomizer(index, rng_seed)
            combined = g1_combine(combined, g1_exp(sig.value, r))
            pairs.extend(_link_pairs(seq, r))
        if not pairs:
            return True
        return pairing_check([(g1_inverse(combined), g), *pairs])
    except BackendError as e:
        logger.debug("aggregate verification failed on malformed input: %s", e)
        return False


def ecs_aggregate_sign(signatures: Iterable[EcsSignature]) -> EcsSignature:
    """Multiply chain signatures together into one aggregate."""
    value = g1_identity()
    for sig in signatures:
        value = g1_combine(value, sig.value)
    return EcsSignature(value)


def ecs_verify_aggregate(
    sequences: Sequence[ChainSequence], aggregate: EcsSignature
) -> bool:
    """Verify an aggregate produced by :func:`ecs_aggregate_sign`."""
    sequences = [x for x in sequences if len(x)]
    if not sequences:
        return aggregate.is_unit
    if any(_has_bad_key(x) for x in sequences):
        return False
    g = get_context().generator
    pairs = [(g1_inverse(aggregate.value), g)]
    try:
        for seq in sequences:
            pairs.extend(_link_pairs(seq))
        return pairing_check(pairs)
    except BackendError:
        return False


# --- chain wire format


def _read_signature(reader: ByteReader) -> EcsSignature:
    marker = reader.take(1)
    if marker == UNIT_MARKER:
        return EcsSignature.unit()
    if marker != POINT_MARKER:
        raise ChainDecodeError(f"unknown signature marker {marker.hex()}")
    try:
        return EcsSignature(g1_deserialize(reader.take(L_PT)))
    except BackendError as e:
        raise ChainDecodeError(f"bad signature element: {e}") from e


def encode_chain(seq: ChainSequence, sig: EcsSignature) -> bytes:
    """Serialize a chain: link count, links, signature marker and bytes."""
    body = b"".join(x.encode() for x in seq.links)
    return pack_int(len(seq), 4) + body + sig.to_bytes()


def decode_chain(
    data: bytes,
    keys: Optional[Mapping[bytes, G1Element]] = None,
) -> Tuple[ChainSequence, EcsSignature]:
    """
    Parse bytes written by :func:`encode_chain`.

    Parameters
    ----------
    data
        The serialized chain.
    keys
        Maps compressed G1 key bytes to full public keys (with twins). Keys
        not found are decoded as bare G1 points, which parse but can't be
        verified.

    Raises
    ------
    ChainDecodeError
        If the bytes are truncated or carry trailing data, or if a key or
        the signature is not a valid group element. The identity is never
        a valid key.
    """
    keys = keys or {}
    reader = ByteReader(data, ChainDecodeError)
    links: List[ChainLink] = []
    for _ in range(reader.take_int(4)):
        message = reader.take_prefixed(4)
        raw = reader.take(L_PT)
        pubkey = keys.get(raw)
        if pubkey is None:
            try:
                pubkey = g1_deserialize(raw)
            except BackendError as e:
                raise ChainDecodeError(f"bad public key: {e}") from e
        if pubkey.is_identity:
            raise ChainDecodeError("the identity is not a valid public key")
        links.append(ChainLink(message=message, pubkey=pubkey))
    sig = _read_signature(reader)
    reader.finish()
    return ChainSequence(tuple(links)), sig
