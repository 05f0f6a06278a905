# twoparty.py
"""Two-party DLog key generation and two-party Schnorr pre-signing.

Both protocols are message-driven state machines. A session is started with
``start()`` and fed one incoming message at a time through ``step()``, which
returns ``(outgoing, output)``; either may be None. Sessions are single-owner.

Key generation (P0 commits first, P1 reveals first):

    P0 -> P1   C0 = H(pk0)
    P1 -> P0   pk1, PoK(sk1)
    P0 -> P1   pk0, PoK(sk0)          P0 outputs pk0*pk1
                                      P1 checks C0, outputs pk0*pk1

Pre-signing runs the key generation above on nonces, then exchanges partial
responses s_i = r_i + c*sk_i with c = H(pk, R*Y, tx). P1 learns the
pre-signature first.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple, Union

from adaptor import PreSignature, Statement, challenge, pvrfy
from algebra import G, FieldReader, GroupElement, Rng, Scalar, Transcript, encode_fields, hash_to_scalar, random_scalar
from errors import ProtocolAbort, ProtocolStateError
from proofs import DlProof, prove_dl, verify_dl

logger = logging.getLogger(__name__)


class Role(str, Enum):
    P0 = "P0"
    P1 = "P1"

    @property
    def peer(self) -> "Role":
        return Role.P1 if self is Role.P0 else Role.P0


class DkgPhase(str, Enum):
    INIT = "init"
    COMMITTED = "committed"
    REVEALED = "revealed"
    DONE = "done"
    ABORTED = "aborted"


class PresignPhase(str, Enum):
    NONCE_DKG = "nonce-dkg"
    PARTIAL_SENT = "partial-sent"
    DONE = "done"
    ABORTED = "aborted"


@dataclass(frozen=True)
class DkgCommit:
    commitment: Scalar

    def to_bytes(self) -> bytes:
        return encode_fields(b"DKG-COMMIT", self.commitment.to_bytes())


@dataclass(frozen=True)
class DkgShare:
    pk: GroupElement
    proof: DlProof

    def to_bytes(self) -> bytes:
        return encode_fields(b"DKG-SHARE", self.pk.to_bytes(), self.proof.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "DkgShare":
        reader = FieldReader(data)
        reader.tag(b"DKG-SHARE")
        msg = cls(reader.element(), DlProof.from_bytes(reader.take()))
        reader.done()
        return msg


@dataclass(frozen=True)
class PresignOpening:
    """P0's nonce opening together with its partial response."""
    share: DkgShare
    partial: Scalar

    def to_bytes(self) -> bytes:
        return encode_fields(b"PSIGN-OPEN", self.share.to_bytes(), self.partial.to_bytes())


@dataclass(frozen=True)
class PresignPartial:
    partial: Scalar

    def to_bytes(self) -> bytes:
        return encode_fields(b"PSIGN-PARTIAL", self.partial.to_bytes())


Message = Union[DkgCommit, DkgShare, PresignOpening, PresignPartial]


@dataclass(frozen=True)
class DkgResult:
    joint_pk: GroupElement
    sk_share: Scalar


def dkg_commitment(context: bytes, pk: GroupElement) -> Scalar:
    return hash_to_scalar(b"dkg-commit", [context, pk])


def _pok_context(context: bytes, role: Role) -> Transcript:
    return Transcript(b"proswap/dkg").absorb(b"session", context).absorb(b"role", role.value)


@dataclass
class DkgSession:
    role: Role
    sk_share: Scalar
    pk_share: GroupElement
    context: bytes = b""
    phase: DkgPhase = DkgPhase.INIT
    peer_commitment: Optional[Scalar] = None
    joint_pk: Optional[GroupElement] = None
    rng: Rng = field(default=None, repr=False)

    @classmethod
    def new(cls, role: Role, rng: Rng = None, context: bytes = b"") -> "DkgSession":
        sk = random_scalar(rng)
        return cls(role, sk, G ** sk, context, rng=rng)

    def _share(self) -> DkgShare:
        return DkgShare(self.pk_share, prove_dl(self.pk_share, self.sk_share, _pok_context(self.context, self.role), self.rng))

    def _abort(self, reason: str):
        self.phase = DkgPhase.ABORTED
        logger.warning("%s aborts key generation: %s", self.role.value, reason)
        raise ProtocolAbort(reason)

    def _expect(self, msg, kind, phase: DkgPhase) -> None:
        if self.phase is DkgPhase.ABORTED:
            raise ProtocolStateError("session already aborted")
        if not isinstance(msg, kind) or self.phase is not phase:
            raise ProtocolStateError(
                f"{self.role.value} in phase {self.phase.value} cannot accept {type(msg).__name__}"
            )

    def start(self) -> Optional[DkgCommit]:
        if self.phase is not DkgPhase.INIT:
            raise ProtocolStateError("session already started")
        if self.role is Role.P0:
            self.phase = DkgPhase.COMMITTED
            return DkgCommit(dkg_commitment(self.context, self.pk_share))
        return None

    def step(self, msg: Message) -> Tuple[Optional[Message], Optional[DkgResult]]:
        if self.role is Role.P0:
            self._expect(msg, DkgShare, DkgPhase.COMMITTED)
            if not verify_dl(msg.pk, msg.proof, _pok_context(self.context, Role.P1)):
                self._abort("invalid proof of knowledge from P1")
            share = self._share()
            return share, self._finish(msg.pk)

        if self.phase is DkgPhase.INIT:
            self._expect(msg, DkgCommit, DkgPhase.INIT)
            self.peer_commitment = msg.commitment
            self.phase = DkgPhase.REVEALED
            return self._share(), None

        self._expect(msg, DkgShare, DkgPhase.REVEALED)
        if dkg_commitment(self.context, msg.pk) != self.peer_commitment:
            self._abort("P0 opened a key different from its commitment")
        if not verify_dl(msg.pk, msg.proof, _pok_context(self.context, Role.P0)):
            self._abort("invalid proof of knowledge from P0")
        return None, self._finish(msg.pk)

    def _finish(self, peer_pk: GroupElement) -> DkgResult:
        self.joint_pk = self.pk_share * peer_pk
        self.phase = DkgPhase.DONE
        logger.debug("%s finished key generation", self.role.value)
        return DkgResult(self.joint_pk, self.sk_share)


def dkg_start(role: Role, rng: Rng = None, context: bytes = b"") -> Tuple[DkgSession, Optional[DkgCommit]]:
    session = DkgSession.new(role, rng, context)
    return session, session.start()


def dkg_step(session: DkgSession, incoming: Message) -> Tuple[DkgSession, Optional[Message], Optional[DkgResult]]:
    outgoing, output = session.step(incoming)
    return session, outgoing, output


@dataclass
class PresignSession:
    role: Role
    sk_share: Scalar
    joint_pk: GroupElement
    tx_message: bytes
    statement: Statement
    nonce: DkgSession
    phase: PresignPhase = PresignPhase.NONCE_DKG
    joint_nonce: Optional[GroupElement] = None
    partial_s: Optional[Scalar] = None
    presignature: Optional[PreSignature] = None

    def _abort(self, reason: str):
        self.phase = PresignPhase.ABORTED
        logger.warning("%s aborts pre-signing: %s", self.role.value, reason)
        raise ProtocolAbort(reason)

    def _check_live(self) -> None:
        if self.phase in (PresignPhase.ABORTED, PresignPhase.DONE):
            raise ProtocolStateError(f"pre-signing session is {self.phase.value}")

    def _partial(self, nonce: DkgResult) -> Scalar:
        self.joint_nonce = nonce.joint_pk
        c = challenge(self.joint_pk, self.joint_nonce * self.statement.Y, self.tx_message)
        self.partial_s = nonce.sk_share + c * self.sk_share
        return self.partial_s

    def _complete(self, peer_partial: Scalar) -> PreSignature:
        presig = PreSignature(self.joint_nonce * self.statement.Y, self.partial_s + peer_partial)
        if not pvrfy(self.joint_pk, self.tx_message, self.statement, presig):
            self._abort("joint pre-signature does not verify")
        self.presignature = presig
        self.phase = PresignPhase.DONE
        logger.debug("%s holds the joint pre-signature", self.role.value)
        return presig

    def start(self) -> Optional[Message]:
        return self.nonce.start()

    def step(self, msg: Message) -> Tuple[Optional[Message], Optional[PreSignature]]:
        self._check_live()
        if self.role is Role.P0:
            if self.phase is PresignPhase.NONCE_DKG and isinstance(msg, DkgShare):
                try:
                    share, nonce = self.nonce.step(msg)
                except ProtocolAbort as e:
                    self._abort(e.reason)
                partial = self._partial(nonce)
                self.phase = PresignPhase.PARTIAL_SENT
                return PresignOpening(share, partial), None
            if self.phase is PresignPhase.PARTIAL_SENT and isinstance(msg, PresignPartial):
                return None, self._complete(msg.partial)
        else:
            if self.phase is PresignPhase.NONCE_DKG and isinstance(msg, DkgCommit):
                out, _ = self.nonce.step(msg)
                return out, None
            if self.phase is PresignPhase.NONCE_DKG and isinstance(msg, PresignOpening):
                try:
                    _, nonce = self.nonce.step(msg.share)
                except ProtocolAbort as e:
                    self._abort(e.reason)
                self._partial(nonce)
                presig = self._complete(msg.partial)
                return PresignPartial(self.partial_s), presig
        raise ProtocolStateError(f"{self.role.value} in phase {self.phase.value} cannot accept {type(msg).__name__}")


def presign_start(
    role: Role,
    sk_share: Scalar,
    joint_pk: GroupElement,
    tx: bytes,
    Y: Statement,
    rng: Rng = None,
    context: bytes = b"",
) -> Tuple[PresignSession, Optional[Message]]:
    nonce = DkgSession.new(role, rng, context + b"/nonce")
    session = PresignSession(role, sk_share, joint_pk, tx, Y, nonce)
    return session, session.start()


def presign_step(
    session: PresignSession, incoming: Message
) -> Tuple[PresignSession, Optional[Message], Optional[PreSignature]]:
    outgoing, output = session.step(incoming)
    return session, outgoing, output
