"""
Bilinear group backend.

The chain signature scheme is written against a symmetric pairing
``e: G1 x G1 -> GT``. The concrete curve here is BLS12-381 (through py_ecc),
which is asymmetric, so every element derived from the generator carries a
G2 "twin" holding the same discrete log. The second argument of
:func:`pairing` must carry its twin; in practice it is always the generator
or a public key, both of which are created with one.
"""
import functools
import hashlib
import logging
import secrets
from typing import Any, Iterable, Optional, Tuple

from py_ecc.bls.g2_primitives import (
    G1_to_pubkey,
    G2_to_signature,
    pubkey_to_G1,
    signature_to_G2,
)
from py_ecc.bls.hash_to_curve import hash_to_G1
from py_ecc.optimized_bls12_381 import (
    FQ12,
    G1,
    G2,
    Z1,
    Z2,
    add,
    curve_order,
    eq,
    final_exponentiate,
    is_inf,
    multiply,
    neg,
    pairing as _ecc_pairing,
)
from py_ecc.optimized_bls12_381.optimized_pairing import exp_by_p

from ssbgp.constants import (
    HASH_TO_G1_DST,
    L_PT,
    L_PT2,
    SCALAR_BYTES,
    SCALAR_TAG,
    SECURITY_LEVEL,
)
from ssbgp.dataclasses import dataclass
from ssbgp.exceptions import BackendError, InvalidElementError

logger = logging.getLogger(__name__)

# |x| for the BLS12-381 parameter x = -0xd201000000010000
BLS_X_ABS = 0xD201000000010000


class G1Element:
    """
    An element of the source group.

    Parameters
    ----------
    point
        The py_ecc projective point in G1.
    twin
        The same discrete log applied to the G2 generator, if known.
    """

    __slots__ = ("point", "twin", "_encoded")

    def __init__(self, point: Any, twin: Optional[Any] = None):
        self.point = point
        self.twin = twin
        self._encoded = None

    @property
    def has_twin(self) -> bool:
        return self.twin is not None

    @property
    def is_identity(self) -> bool:
        return is_inf(self.point)

    def to_bytes(self) -> bytes:
        """Return the compressed L_PT byte encoding."""
        if self._encoded is None:
            self._encoded = bytes(G1_to_pubkey(self.point))
        return self._encoded

    def __eq__(self, other):
        if not isinstance(other, G1Element):
            return NotImplemented
        return eq(self.point, other.point)

    def __hash__(self):
        return hash(self.to_bytes())

    def __repr__(self):
        return f"G1Element({self.to_bytes().hex()[:16]}...)"


class GtElement:
    """An element of the order-q target group."""

    __slots__ = ("value",)

    def __init__(self, value: Any):
        self.value = value

    @property
    def is_identity(self) -> bool:
        return self.value == FQ12.one()

    def __mul__(self, other):
        if not isinstance(other, GtElement):
            return NotImplemented
        return GtElement(self.value * other.value)

    def __eq__(self, other):
        if not isinstance(other, GtElement):
            return NotImplemented
        return self.value == other.value

    def __hash__(self):
        return hash(tuple(int(x) for x in self.value.coeffs))

    def __repr__(self):
        return f"GtElement({int(self.value.coeffs[0]):x}...)"


@dataclass(frozen=True)
class Scalar:
    """An integer modulo the group order."""

    value: int

    def __post_init__(self):
        if not 0 <= self.value < curve_order:
            msg = f"scalar must lie in [0, q), got {self.value}"
            raise ValueError(msg)

    def to_bytes(self) -> bytes:
        """Return the 32 byte big-endian encoding."""
        return self.value.to_bytes(SCALAR_BYTES, "big")

    @classmethod
    def from_bytes(cls, data: bytes) -> "Scalar":
        if len(data) != SCALAR_BYTES:
            msg = f"scalars are {SCALAR_BYTES} bytes, got {len(data)}"
            raise BackendError(msg)
        return cls(int.from_bytes(data, "big"))


@dataclass(frozen=True)
class GroupContext:
    """
    Common public parameters: the prime group order q, the generator g and
    the nominal security level tau.
    """

    group_order: int
    generator: G1Element
    security_level: int = SECURITY_LEVEL

    def validate(self):
        """
        Check the generator has order q and e(g, g) is not the identity.

        This costs a pairing, so it is not run on construction.
        """
        g = self.generator
        if g.is_identity or not is_inf(multiply(g.point, self.group_order)):
            raise BackendError("generator does not have order q")
        if not g.has_twin or not is_inf(multiply(g.twin, self.group_order)):
            raise BackendError("generator twin does not have order q")
        if pairing(g, g).is_identity:
            raise BackendError("pairing is degenerate on the generator")
        return self


@functools.lru_cache(maxsize=None)
def get_context() -> GroupContext:
    """Return the BLS12-381 group context."""
    return GroupContext(group_order=curve_order, generator=G1Element(G1, G2))


def _check(*elements):
    for element in elements:
        if not isinstance(element, G1Element):
            msg = f"expected a G1Element, got {type(element).__name__}"
            raise InvalidElementError(msg)


def scalar_random(ctx: GroupContext, rng_seed: Optional[bytes] = None) -> Scalar:
    """
    Draw a scalar in [1, q-1].

    Parameters
    ----------
    ctx
        The group context.
    rng_seed
        If given, the scalar is derived deterministically from it with an
        expandable hash. If None, the operating system's entropy is used.
    """
    order = ctx.group_order
    if rng_seed is None:
        return Scalar(secrets.randbelow(order - 1) + 1)
    if not rng_seed:
        raise BackendError("scalar seeds must be nonempty")
    # 64 bytes leaves a negligible modular bias
    digest = hashlib.shake_256(SCALAR_TAG + bytes(rng_seed)).digest(64)
    return Scalar(int.from_bytes(digest, "big") % (order - 1) + 1)


def g1_identity() -> G1Element:
    """Return the group identity (the unit 1 in multiplicative notation)."""
    return G1Element(Z1, Z2)


def g1_exp(base: G1Element, e: Scalar) -> G1Element:
    """Raise base to the power e (scalar multiplication on the curve)."""
    _check(base)
    exponent = e.value % curve_order
    twin = multiply(base.twin, exponent) if base.has_twin else None
    return G1Element(multiply(base.point, exponent), twin)


def g1_combine(a: G1Element, b: G1Element) -> G1Element:
    """Return the group product of a and b."""
    _check(a, b)
    twin = add(a.twin, b.twin) if (a.has_twin and b.has_twin) else None
    return G1Element(add(a.point, b.point), twin)


def g1_inverse(a: G1Element) -> G1Element:
    """Return the group inverse of a."""
    _check(a)
    twin = neg(a.twin) if a.has_twin else None
    return G1Element(neg(a.point), twin)


def g1_in_subgroup(a: G1Element) -> bool:
    """Return True if a lies in the order-q subgroup."""
    return is_inf(multiply(a.point, curve_order))


def pairing(a: G1Element, b: G1Element) -> GtElement:
    """
    Compute e(a, b).

    b must carry its G2 twin, which is the case for the generator, public
    keys and anything derived from them with :func:`g1_exp` and
    :func:`g1_combine`.
    """
    _check(a, b)
    if not b.has_twin:
        msg = "second pairing argument has no G2 counterpart"
        raise InvalidElementError(msg)
    return GtElement(final_exponentiate(_miller_loop(a, b)))


def gt_exp(x: GtElement, e: Scalar) -> GtElement:
    """Raise a target group element to the power e."""
    return GtElement(x.value ** (e.value % curve_order))


@functools.lru_cache(maxsize=8192)
def _miller_loop(a: G1Element, b: G1Element):
    return _ecc_pairing(b.twin, a.point, final_exponentiate=False)


def _frobenius(f: FQ12, power: int = 1) -> FQ12:
    for _ in range(power):
        f = exp_by_p(f)
    return f


def _exp_by_x(f: FQ12) -> FQ12:
    """f ** x for f in the cyclotomic subgroup, where inversion is conjugation."""
    return _frobenius(f ** BLS_X_ABS, 6)


def is_final_identity(f: FQ12) -> bool:
    """
    Return True if the final exponentiation of f is one.

    After the easy part f ** ((p**6 - 1) * (p**2 + 1)), the hard part is
    raised to 3 * (p**4 - p**2 + 1) / r, which factors as
    (x - 1)**2 * (x + p) * (x**2 + p**2 - 1) + 3. Cubing is a bijection on
    GT, so the result is one exactly when the plain final exponentiation is.
    """
    f = _frobenius(f, 6) / f
    f = _frobenius(f, 2) * f
    t = _exp_by_x(f) * _frobenius(f, 6)
    t = _exp_by_x(t) * _frobenius(t, 6)
    t = _exp_by_x(t) * _frobenius(t)
    t = _exp_by_x(_exp_by_x(t)) * _frobenius(t, 2) * _frobenius(t, 6)
    return t * f * f * f == FQ12.one()


def pairing_check(pairs: Iterable[Tuple[G1Element, G1Element]]) -> bool:
    """
    Return True if the product of e(a, b) over pairs is the identity.

    The Miller loops are multiplied together before a single final
    exponentiation.
    """
    acc = FQ12.one()
    for a, b in pairs:
        _check(a, b)
        if not b.has_twin:
            msg = "second pairing argument has no G2 counterpart"
            raise InvalidElementError(msg)
        acc = acc * _miller_loop(a, b)
    return is_final_identity(acc)


@functools.lru_cache(maxsize=16384)
def _hash_to_g1(msg: bytes) -> G1Element:
    return G1Element(hash_to_G1(msg, HASH_TO_G1_DST, hashlib.sha256))


def hash_to_g1(msg: bytes) -> G1Element:
    """Hash arbitrary bytes into G1 (random oracle, RFC 9380 SSWU)."""
    return _hash_to_g1(bytes(msg))


def clear_caches():
    """Forget memoized hashes and Miller loops; used by benchmarks."""
    _hash_to_g1.cache_clear()
    _miller_loop.cache_clear()


def g1_serialize(e: G1Element) -> bytes:
    """Return the fixed length compressed encoding of e."""
    _check(e)
    return e.to_bytes()


def g1_deserialize(data: bytes) -> G1Element:
    """
    Parse a compressed G1 point.

    Raises
    ------
    InvalidElementError
        If the length is wrong, the point is not on the curve or not in the
        order-q subgroup.
    """
    data = bytes(data)
    if len(data) != L_PT:
        msg = f"G1 elements are {L_PT} bytes, got {len(data)}"
        raise InvalidElementError(msg)
    try:
        point = pubkey_to_G1(data)
    except (ValueError, AssertionError) as e:
        logger.debug("rejected G1 encoding %s: %s", data.hex(), e)
        raise InvalidElementError(f"not a curve point: {e}") from e
    element = G1Element(point)
    if not g1_in_subgroup(element):
        raise InvalidElementError("point is not in the order-q subgroup")
    return element


def pubkey_serialize(pk: G1Element) -> bytes:
    """Serialize a public key as its G1 encoding followed by its G2 twin."""
    _check(pk)
    if not pk.has_twin:
        raise InvalidElementError("public keys must carry their G2 twin")
    return pk.to_bytes() + bytes(G2_to_signature(pk.twin))


def pubkey_deserialize(data: bytes, check: bool = True) -> G1Element:
    """
    Parse a public key pair.

    Parameters
    ----------
    data
        L_PT + L_PT2 bytes.
    check
        If True, verify with a pairing check that both halves share the
        same discrete log.

    Raises
    ------
    InvalidElementError
        If either half is malformed or the key is the group identity.
    """
    data = bytes(data)
    if len(data) != L_PT + L_PT2:
        msg = f"public keys are {L_PT + L_PT2} bytes, got {len(data)}"
        raise InvalidElementError(msg)
    plain = g1_deserialize(data[:L_PT])
    if plain.is_identity:
        raise InvalidElementError("the identity is not a valid public key")
    try:
        twin = signature_to_G2(data[L_PT:])
    except (ValueError, AssertionError) as e:
        raise InvalidElementError(f"not a G2 point: {e}") from e
    if not is_inf(multiply(twin, curve_order)):
        raise InvalidElementError("G2 twin is not in the order-q subgroup")
    pk = G1Element(plain.point, twin)
    if check:
        g = get_context().generator
        if not pairing_check([(g1_inverse(plain), g), (g, pk)]):
            raise InvalidElementError("public key halves are inconsistent")
    return pk
