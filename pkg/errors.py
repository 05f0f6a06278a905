# errors.py
"""Exception hierarchy shared by every proswap module."""
from enum import Enum


class ProSwapError(Exception):
    """Base class for all proswap errors."""


class InvalidParameter(ProSwapError, ValueError):
    """A size, count or protocol parameter is out of range."""


class InvalidGuess(ProSwapError, ValueError):
    """A guess lies outside the domain [0, 2^ell)."""


class InvalidRequest(ProSwapError, ValueError):
    """An OPRF request is degenerate."""


class InvalidWitness(ProSwapError, ValueError):
    """A prover was handed a witness that does not satisfy its relation."""


class InvalidStatement(ProSwapError, ValueError):
    """A statement tuple is structurally malformed."""


class MalformedEncoding(ProSwapError, ValueError):
    """Bytes or text could not be decoded into a protocol value."""

    def __init__(self, message: str, line: int = 0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


class ExtractionMismatch(ProSwapError):
    """Pre-signature and signature do not share the same Rhat."""


class ProtocolAbort(ProSwapError):
    """A counterparty deviated and the honest side stopped the protocol."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class ProtocolStateError(ProSwapError):
    """A message arrived that the session's current phase does not expect."""


class RejectReason(str, Enum):
    UNKNOWN_OUTPOINT = "unknown-outpoint"
    UNAUTHORIZED = "unauthorized"
    TIMELOCK = "timelock"
    CONSERVATION = "conservation"
    MALFORMED = "malformed"


class LedgerRejection(ProSwapError):
    """The ledger refused a transaction."""

    def __init__(self, reason: RejectReason, detail: str = ""):
        super().__init__(f"{reason.value}: {detail}" if detail else reason.value)
        self.reason = reason
        self.detail = detail


class InvariantViolation(ProSwapError):
    """Something that cannot happen against an honest ledger happened."""
