# oprf.py
"""Modified 2HashDH OPRF with per-instance exponents.

The server key carries λ ephemeral exponents α_i next to sk. One blind
evaluation res = H_G(x)^{r·sk} lets the client finalize against every α_i:

    F_i(x) = H_p(pk, H_G(x)^{sk·α_i}),   pk = X ‖ A_1 ‖ … ‖ A_λ
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

from algebra import G, GroupElement, Rng, Scalar, hash_to_group, hash_to_scalar, random_scalar
from errors import InvalidGuess, InvalidParameter, InvalidRequest

logger = logging.getLogger(__name__)

H_P_DOMAIN = b"proswap/H_p"


@dataclass(frozen=True)
class OprfPublicKey:
    X: GroupElement
    A: Tuple[GroupElement, ...]

    def to_bytes(self) -> bytes:
        return self.X.to_bytes() + b"".join(a.to_bytes() for a in self.A)


@dataclass(frozen=True)
class OprfKeyPair:
    sk: Scalar
    X: GroupElement
    alphas: Tuple[Scalar, ...]
    A: Tuple[GroupElement, ...]

    @property
    def lam(self) -> int:
        return len(self.alphas)

    def public(self) -> OprfPublicKey:
        return OprfPublicKey(self.X, self.A)

    @property
    def pk_bytes(self) -> bytes:
        return self.public().to_bytes()


@dataclass(frozen=True)
class OprfRequest:
    req: GroupElement


@dataclass(frozen=True)
class OprfClientState:
    x: int
    r: Scalar
    ell: int


@dataclass(frozen=True)
class OprfResponse:
    res: GroupElement


def domain_size(ell: int) -> int:
    if ell < 0:
        raise InvalidParameter(f"bit length must be non-negative, got {ell}")
    return 1 << ell


def check_guess(x: int, ell: int) -> None:
    if not 0 <= x < domain_size(ell):
        raise InvalidGuess(f"guess {x} outside [0, 2^{ell})")


def encode_guess(x: int, ell: int) -> bytes:
    """Fixed-width little-endian encoding of a guess."""
    check_guess(x, ell)
    return x.to_bytes(max(1, (ell + 7) // 8), "little")


def guess_base(x: int, ell: int) -> GroupElement:
    """h_x = H_G(encode(x))."""
    return hash_to_group(encode_guess(x, ell))


def hash_p(pk_bytes: bytes, T: GroupElement) -> Scalar:
    return hash_to_scalar(H_P_DOMAIN, [pk_bytes, T])


def oprf_keygen(lam: int, rng: Rng = None) -> OprfKeyPair:
    if lam < 2 or lam % 2:
        raise InvalidParameter(f"lambda must be even and at least 2, got {lam}")
    sk = random_scalar(rng)
    alphas = []
    while len(alphas) < lam:
        alpha = random_scalar(rng)
        if alpha not in alphas:
            alphas.append(alpha)
    logger.debug("generated OPRF key with %d exponents", lam)
    return OprfKeyPair(sk, G ** sk, tuple(alphas), tuple(G ** a for a in alphas))


def request(
    x: int, ell: int, rng: Rng = None, r: Optional[Scalar] = None
) -> Tuple[OprfClientState, OprfRequest]:
    """Blind a guess. ``r`` overrides the blinding factor."""
    base = guess_base(x, ell)
    if r is None:
        r = random_scalar(rng)
    elif not r:
        raise InvalidParameter("blinding factor must be nonzero")
    return OprfClientState(x, r, ell), OprfRequest(base ** r)


def blind_eval(sk: Scalar, req: OprfRequest) -> OprfResponse:
    if req.req.is_identity():
        raise InvalidRequest("identity request")
    return OprfResponse(req.req ** sk)


def unblind(st: OprfClientState, res: OprfResponse, alpha: Scalar) -> GroupElement:
    """res^{α/r}, which equals H_G(x)^{sk·α} for an honest response."""
    if not alpha:
        raise InvalidParameter("alpha must be nonzero")
    if not st.r:
        raise InvalidParameter("blinding factor must be nonzero")
    return res.res ** (alpha / st.r)


def finalize_with_alpha(pk_bytes: bytes, st: OprfClientState, res: OprfResponse, alpha: Scalar) -> Scalar:
    return hash_p(pk_bytes, unblind(st, res, alpha))


def evaluate(sk: Scalar, x: int, alpha: Scalar, pk_bytes: bytes, ell: int) -> Scalar:
    """Direct server-side evaluation H_p(pk, H_G(x)^{sk·α})."""
    return hash_p(pk_bytes, guess_base(x, ell) ** (sk * alpha))
