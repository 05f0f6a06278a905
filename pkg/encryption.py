# encryption.py
"""ElGamal over the protocol group.

The key pair (Z, z) doubles as an adaptor-signature statement and witness:
whoever completes a pre-signature made under Z reveals z, and z opens the
ciphertext.
"""
from dataclasses import dataclass
from typing import Optional, Tuple

from algebra import G, GroupElement, Rng, Scalar, random_scalar
from errors import MalformedEncoding


@dataclass(frozen=True)
class ElGamalCiphertext:
    c1: GroupElement
    c2: GroupElement

    def to_bytes(self) -> bytes:
        return self.c1.to_bytes() + self.c2.to_bytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "ElGamalCiphertext":
        if len(data) != 66:
            raise MalformedEncoding(f"ciphertext must be 66 bytes, got {len(data)}")
        return cls(GroupElement.from_bytes(data[:33]), GroupElement.from_bytes(data[33:]))


def eg_keygen(rng: Rng = None) -> Tuple[GroupElement, Scalar]:
    z = random_scalar(rng)
    return G ** z, z


def eg_enc(
    Z: GroupElement, M: GroupElement, rng: Rng = None, alpha: Optional[Scalar] = None
) -> Tuple[ElGamalCiphertext, Scalar]:
    """Encrypt M under Z. ``alpha`` overrides the randomness; protocol code never passes it."""
    if alpha is None:
        alpha = random_scalar(rng)
    return ElGamalCiphertext(G ** alpha, (Z ** alpha) * M), alpha


def eg_dec(z: Scalar, ct: ElGamalCiphertext) -> GroupElement:
    return ct.c2 / (ct.c1 ** z)
