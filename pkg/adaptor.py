# adaptor.py
"""Textbook Schnorr signatures and Schnorr adaptor signatures.

The challenge is always c = H("sig", pk, Rhat, m). A plain signature is the
special case Y = identity, so one verification equation serves both paths.
"""
import logging
from dataclasses import dataclass

from algebra import (
    G,
    FieldReader,
    GroupElement,
    Rng,
    Scalar,
    encode_fields,
    hash_to_scalar,
    random_scalar,
)
from errors import ExtractionMismatch, InvalidParameter, MalformedEncoding

logger = logging.getLogger(__name__)

SIG_DOMAIN = b"sig"
_PRESIG_TAG = b"PRESIG"


@dataclass(frozen=True)
class SigKeyPair:
    sk: Scalar
    pk: GroupElement


@dataclass(frozen=True)
class Statement:
    """Hard-relation statement Y = g^y."""
    Y: GroupElement

    @classmethod
    def identity(cls) -> "Statement":
        return cls(GroupElement.identity())


@dataclass(frozen=True)
class PreSignature:
    Rhat: GroupElement
    s_tilde: Scalar

    def to_bytes(self) -> bytes:
        return encode_fields(_PRESIG_TAG, self.Rhat.to_bytes(), self.s_tilde.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "PreSignature":
        reader = FieldReader(data)
        reader.tag(_PRESIG_TAG)
        presig = cls(reader.element(), reader.scalar())
        reader.done()
        return presig


@dataclass(frozen=True)
class Signature:
    Rhat: GroupElement
    s: Scalar

    def to_bytes(self) -> bytes:
        """Rhat (compressed) followed by s (32 bytes)."""
        return self.Rhat.to_bytes() + self.s.to_bytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "Signature":
        if len(data) != 65:
            raise MalformedEncoding(f"signature must be 65 bytes, got {len(data)}")
        return cls(GroupElement.from_bytes(data[:33]), Scalar.from_bytes(data[33:]))


def challenge(pk: GroupElement, Rhat: GroupElement, m: bytes) -> Scalar:
    return hash_to_scalar(SIG_DOMAIN, [pk, Rhat, m])


def keygen(rng: Rng = None) -> SigKeyPair:
    sk = random_scalar(rng)
    return SigKeyPair(sk, G ** sk)


def keypair_from_secret(sk: Scalar) -> SigKeyPair:
    if not sk:
        raise InvalidParameter("secret key must be nonzero")
    return SigKeyPair(sk, G ** sk)


def psign(kp: SigKeyPair, m: bytes, Y: Statement, rng: Rng = None) -> PreSignature:
    r = random_scalar(rng)
    Rhat = (G ** r) * Y.Y
    c = challenge(kp.pk, Rhat, m)
    return PreSignature(Rhat, r + c * kp.sk)


def pvrfy(pk: GroupElement, m: bytes, Y: Statement, presig: PreSignature) -> bool:
    c = challenge(pk, presig.Rhat, m)
    return (G ** presig.s_tilde) * Y.Y == presig.Rhat * (pk ** c)


def sign(kp: SigKeyPair, m: bytes, rng: Rng = None) -> Signature:
    presig = psign(kp, m, Statement.identity(), rng)
    return Signature(presig.Rhat, presig.s_tilde)


def vrfy(pk: GroupElement, m: bytes, sig: Signature) -> bool:
    c = challenge(pk, sig.Rhat, m)
    return G ** sig.s == sig.Rhat * (pk ** c)


def adapt(presig: PreSignature, y: Scalar) -> Signature:
    return Signature(presig.Rhat, presig.s_tilde + y)


def extract(presig: PreSignature, sig: Signature) -> Scalar:
    if presig.Rhat != sig.Rhat:
        raise ExtractionMismatch("signature does not complete this pre-signature")
    return sig.s - presig.s_tilde
