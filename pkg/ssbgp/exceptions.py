"""
Custom exceptions
"""


class BackendError(ValueError):
    """Raised when a group operation receives something it can't use."""


class InvalidElementError(BackendError):
    """Raised when bytes or points are not valid group elements."""


class EcsError(ValueError):
    """Base class for enhanced chain signature failures."""


class DuplicateKeyError(EcsError):
    """Raised when a signer's public key already appears in the chain."""


class InvalidPriorSignatureError(EcsError):
    """Raised when asked to extend a chain whose signature does not verify."""


class InvalidSignatureError(EcsError):
    """Raised when an operation requires a valid chain signature."""


class KeyMismatchError(EcsError):
    """Raised when private keys do not belong to the links they claim."""


class EmptyPrefixError(EcsError):
    """Raised when a prefix digest is requested for the empty sequence."""


class ChainDecodeError(EcsError):
    """Raised when a serialized chain can't be parsed."""


class UpdateRejected(ValueError):
    """
    Raised when a routing update fails validation.

    Parameters
    ----------
    kind
        The validation step that failed, eg "BadSignature".
    position
        Zero-based index of the offending path entry.
    """

    def __init__(self, kind, position=0, detail=""):
        self.kind = kind
        self.position = position
        self.detail = detail
        msg = f"{kind} at entry {position}"
        if detail:
            msg = f"{msg}: {detail}"
        super().__init__(msg)


class ScenarioError(ValueError):
    """Raised when a scenario document is malformed."""


class GameProtocolError(ValueError):
    """Raised when an adversary issues a malformed oracle query."""


class UnknownKeyError(ValueError):
    """Raised when a sequence uses keys outside the game's key set."""


class UnknownAdversaryError(ValueError):
    """Raised when an adversary name is not one of the built-ins."""
