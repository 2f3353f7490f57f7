"""
A harness for the chain signature unforgeability game.

The challenger generates n keys, hands the adversary the public keys and the
private keys it flagged in ``extr``, answers extract and sign queries and
finally judges the adversary's claimed forgery: the claim wins if it verifies
and is non-signable, i.e. could not have been assembled from the oracle
answers and the extracted keys.

This is a test harness, not a proof. It can show that known attack
strategies lose and that holding a suffix's keys makes truncation possible
without counting as a win; it says nothing about unknown adversaries.

Clause three of non-signability is implemented with the key condition on
the link being ranged over (``y_j``); read literally with ``y_i`` it would
refer to a key of the logged sequence instead.
"""
import logging
from typing import Callable, Dict, List, Optional, Sequence, Set

from typing_extensions import Literal

from ssbgp.backend import G1Element, Scalar, get_context, hash_to_g1
from ssbgp.constants import SECURITY_LEVEL
from ssbgp.dataclasses import dataclass
from ssbgp.ecs import (
    ChainLink,
    ChainSequence,
    EcsSignature,
    KeyPair,
    ecs_extend,
    ecs_keygen,
    ecs_strip,
    ecs_verify,
    seq_odot,
    seq_overlap,
    seq_union,
)
from ssbgp.exceptions import (
    EcsError,
    GameProtocolError,
    UnknownAdversaryError,
    UnknownKeyError,
)
from ssbgp.utils import to_seed_bytes

logger = logging.getLogger(__name__)

outcomes = Literal["WIN", "LOSE"]


@dataclass(frozen=True)
class GameConfig:
    """
    Parameters of one game.

    Parameters
    ----------
    n
        Number of public keys.
    extr
        An n character string of 0s and 1s; 1 marks keys whose private
        half the adversary receives at setup.
    omega
        1 for the weak game (extract queries answer nothing), 2 for the
        strong one.
    tau
        The security parameter; informational, the curve is fixed.
    seed
        Seed for key generation.
    """

    n: int
    extr: str
    omega: int = 1
    tau: int = SECURITY_LEVEL
    seed: str = "0"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("the game needs at least one key")
        if len(self.extr) != self.n or set(self.extr) - {"0", "1"}:
            msg = f"extr must be {self.n} characters of 0/1, got {self.extr!r}"
            raise ValueError(msg)
        if self.omega not in (1, 2):
            raise ValueError(f"omega must be 1 or 2, got {self.omega}")


@dataclass
class QueryLog:
    """The extracted key set Y_X and the signed sequences L_S of a game."""

    extracted_keys: Set[G1Element]
    signed_sequences: List[ChainSequence]
    game_keys: Optional[Set[G1Element]] = None


@dataclass(frozen=True)
class ForgeryClaim:
    """The adversary's output: a sequence and a purported signature."""

    sequence: ChainSequence
    signature: EcsSignature


@dataclass(frozen=True)
class NonSignableReport:
    """The outcome of each clause of the non-signability test."""

    not_queried: bool
    has_unextracted_key: bool
    overlaps_escape: bool
    failing_sequence: Optional[ChainSequence] = None

    @property
    def non_signable(self) -> bool:
        return self.not_queried and self.has_unextracted_key and self.overlaps_escape

    def describe(self) -> str:
        """Name the first failing clause, or say all hold."""
        if not self.not_queried:
            return "clause 1 fails: the sequence was a sign query"
        if not self.has_unextracted_key:
            return "clause 2 fails: every key of the sequence is extracted"
        if not self.overlaps_escape:
            count = len(self.failing_sequence or ())
            return (
                "clause 3 fails: an overlapping signed sequence of "
                f"{count} links differs from the claim only in extracted keys"
            )
        return "clauses 1-3 hold: the sequence is non-signable"


def evaluate_non_signable(claim_seq: ChainSequence, log: QueryLog) -> NonSignableReport:
    """
    Evaluate each clause of non-signability for claim_seq.

    Raises
    ------
    UnknownKeyError
        If the log knows the game's key set and the claim uses other keys.
    """
    if log.game_keys is not None:
        unknown = [x for x in claim_seq.keys if x not in log.game_keys]
        if unknown:
            raise UnknownKeyError(f"claim uses {len(unknown)} keys outside the game")
    extracted = log.extracted_keys
    not_queried = claim_seq not in log.signed_sequences
    has_unextracted = any(x.pubkey not in extracted for x in claim_seq)
    for signed in log.signed_sequences:
        if not seq_overlap(signed, claim_seq):
            continue
        beyond_prefix = seq_union(signed, claim_seq) - seq_odot(signed, claim_seq)
        if not any(x.pubkey not in extracted for x in beyond_prefix):
            return NonSignableReport(
                not_queried=not_queried,
                has_unextracted_key=has_unextracted,
                overlaps_escape=False,
                failing_sequence=signed,
            )
    return NonSignableReport(
        not_queried=not_queried,
        has_unextracted_key=has_unextracted,
        overlaps_escape=True,
    )


def non_signable(claim_seq: ChainSequence, log: QueryLog) -> bool:
    """Return True if claim_seq is non-signable given the query log."""
    return evaluate_non_signable(claim_seq, log).non_signable


class Challenger:
    """
    Holds the game keys and answers the adversary's oracle queries.

    Parameters
    ----------
    cfg
        The game configuration.
    """

    def __init__(self, cfg: GameConfig):
        self.cfg = cfg
        ctx = get_context()
        seed = to_seed_bytes(cfg.seed)
        self.keypairs: List[KeyPair] = [
            ecs_keygen(ctx, b"game:" + seed + b":" + str(i).encode())
            for i in range(cfg.n)
        ]
        self.public_keys = [x.public for x in self.keypairs]
        self._by_key: Dict[G1Element, KeyPair] = {x.public: x for x in self.keypairs}
        flagged = [kp for kp, bit in zip(self.keypairs, cfg.extr) if bit == "1"]
        self.log = QueryLog(
            extracted_keys={x.public for x in flagged},
            signed_sequences=[],
            game_keys=set(self.public_keys),
        )
        self.given_keys: Dict[G1Element, Scalar] = {x.public: x.private for x in flagged}
        self.transcript: List[str] = [
            f"setup: n={cfg.n} extr={cfg.extr} omega={cfg.omega} tau={cfg.tau}",
        ]

    def _keypair(self, pubkey: G1Element) -> KeyPair:
        try:
            return self._by_key[pubkey]
        except KeyError:
            raise GameProtocolError("query names a key outside the game") from None

    def extract(self, pubkey: G1Element) -> Optional[Scalar]:
        """Answer an extract query; None stands for the empty answer."""
        index = self.public_keys.index(self._keypair(pubkey).public)
        if self.cfg.omega == 1:
            self.transcript.append(f"extract y{index + 1} -> bottom")
            return None
        self.log.extracted_keys.add(pubkey)
        self.transcript.append(f"extract y{index + 1} -> x{index + 1}")
        return self._keypair(pubkey).private

    def sign(self, seq: ChainSequence) -> EcsSignature:
        """Answer a sign query on a nonempty sequence without repeated keys."""
        if not len(seq):
            raise GameProtocolError("sign queries must be nonempty")
        keypairs = [self._keypair(x) for x in seq.keys]
        if len({x.public for x in keypairs}) != len(keypairs):
            raise GameProtocolError("sign query repeats a key")
        partial, sig = ChainSequence(), EcsSignature.unit()
        for link, kp in zip(seq, keypairs):
            partial, sig = ecs_extend(kp, link.message, partial, sig)
        self.log.signed_sequences.append(seq)
        self.transcript.append(f"sign {self.describe(seq)}")
        return sig

    def describe(self, seq: ChainSequence) -> str:
        """Render a sequence using the y1..yn key labels."""
        labels = []
        for link in seq:
            try:
                label = f"y{self.public_keys.index(link.pubkey) + 1}"
            except ValueError:
                label = "y?"
            labels.append(f"({link.message.decode('utf-8', 'replace')},{label})")
        return "<" + ",".join(labels) + ">"


@dataclass
class GameResult:
    """What happened in one game."""

    outcome: outcomes
    claim: Optional[ForgeryClaim]
    verified: bool
    report: Optional[NonSignableReport]
    transcript: List[str]

    @property
    def won(self) -> bool:
        return self.outcome == "WIN"


Adversary = Callable[[Challenger], ForgeryClaim]


def run_game(cfg: GameConfig, adversary: Adversary) -> GameResult:
    """
    Play one game against an adversary strategy.

    The adversary is called with the challenger, whose ``public_keys``,
    ``given_keys``, ``extract`` and ``sign`` members are its view of the
    game. It must return a :class:`ForgeryClaim`.
    """
    challenger = Challenger(cfg)
    name = getattr(adversary, "name", getattr(adversary, "__name__", "adversary"))
    transcript = challenger.transcript
    transcript.append(f"adversary: {name}")
    try:
        claim = adversary(challenger)
        if not isinstance(claim, ForgeryClaim):
            raise GameProtocolError("adversary did not output a forgery claim")
        report = evaluate_non_signable(claim.sequence, challenger.log)
    except (GameProtocolError, UnknownKeyError, EcsError) as e:
        transcript.append(f"protocol violation: {e}")
        transcript.append("result: LOSE")
        logger.info("game lost by protocol violation: %s", e)
        return GameResult("LOSE", None, False, None, transcript)
    verified = ecs_verify(claim.sequence, claim.signature)
    transcript.append(f"claim {challenger.describe(claim.sequence)}")
    transcript.append(f"verify: {'VALID' if verified else 'INVALID'}")
    transcript.append(f"non-signable: {report.describe()}")
    outcome = "WIN" if (verified and report.non_signable) else "LOSE"
    transcript.append(f"result: {outcome}")
    return GameResult(outcome, claim, verified, report, transcript)


# --- built in strategies


def _honest_sequence(keys: Sequence[G1Element], count: int) -> ChainSequence:
    return ChainSequence.of((f"m{i + 1}".encode(), y) for i, y in enumerate(keys[:count]))


class ReplayAdversary:
    """Outputs a signature it obtained from the sign oracle."""

    name = "replay"

    def __call__(self, game: Challenger) -> ForgeryClaim:
        seq = _honest_sequence(game.public_keys, min(2, len(game.public_keys)))
        return ForgeryClaim(sequence=seq, signature=game.sign(seq))


class NaiveTruncateAdversary:
    """Reuses a signature on a longer chain for one of its prefixes."""

    name = "naive-truncate"

    def __call__(self, game: Challenger) -> ForgeryClaim:
        n = len(game.public_keys)
        seq = _honest_sequence(game.public_keys, n)
        sig = game.sign(seq)
        return ForgeryClaim(sequence=seq[: max(1, n - 1)], signature=sig)


class StripAdversary:
    """
    Removes the last signers' contributions with their private keys.

    Keys come from setup or, when omega is 2, from extract queries. The
    suffix is the longest run of trailing keys the adversary holds.
    """

    name = "strip"

    def __call__(self, game: Challenger) -> ForgeryClaim:
        n = len(game.public_keys)
        seq = _honest_sequence(game.public_keys, n)
        sig = game.sign(seq)
        held = dict(game.given_keys)
        suffix: List[Scalar] = []
        for link in reversed(seq.links[1:]):
            private = held.get(link.pubkey)
            if private is None:
                private = game.extract(link.pubkey)
            if private is None:
                break
            suffix.insert(0, private)
        if not suffix:
            return ForgeryClaim(sequence=seq[: max(1, n - 1)], signature=sig)
        stripped = ecs_strip(seq, sig, suffix)
        return ForgeryClaim(sequence=seq[: n - len(suffix)], signature=stripped)


class RandomForgeAdversary:
    """Guesses a signature for a sequence it never queried."""

    name = "random-forge"

    def __call__(self, game: Challenger) -> ForgeryClaim:
        keys = list(reversed(game.public_keys))
        seq = ChainSequence.of((b"forged", y) for y in keys)
        guess = hash_to_g1(b"random-forge:" + game.cfg.seed.encode())
        return ForgeryClaim(sequence=seq, signature=EcsSignature(guess))


def builtin_adversaries() -> List[Adversary]:
    """Return the built in strategies: replay, truncation, stripping, guessing."""
    return [
        ReplayAdversary(),
        NaiveTruncateAdversary(),
        StripAdversary(),
        RandomForgeAdversary(),
    ]


def get_adversary(name: str) -> Adversary:
    """Look up a built in strategy by name."""
    options = {x.name: x for x in builtin_adversaries()}
    if name not in options:
        msg = f"unknown adversary {name!r}, options are {sorted(options)}"
        raise UnknownAdversaryError(msg)
    return options[name]
