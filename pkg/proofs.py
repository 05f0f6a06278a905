# proofs.py
"""Sigma protocols made non-interactive with Fiat-Shamir.

Every protocol absorbs, in order, a protocol tag, the statement and all
first-round messages into a clone of the caller's context transcript before
deriving its challenge. Reusing a proof under another context therefore fails.

Provers raise on witnesses that do not satisfy their relation. Verifiers only
ever return a bool.

The cut-and-choose proof for Y_win comes in two layouts:

* per-index: every opened instance carries its own 2^ell-branch OR proof;
* batched: opened instances reveal only (r_j, T_j), and a single orWF proof,
  one hidden-base proof over a random linear combination of the T_j and a
  DLEQ link cover all of them at once.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple

from algebra import (
    G,
    U,
    FieldReader,
    GroupElement,
    Rng,
    Scalar,
    Transcript,
    as_bytes,
    encode_fields,
    fs_challenge,
    fs_subset,
    hash_to_scalar,
    product,
    random_scalar,
)
from encryption import ElGamalCiphertext
from errors import InvalidParameter, InvalidStatement, InvalidWitness, MalformedEncoding, ProSwapError
from oprf import OprfKeyPair, OprfPublicKey, check_guess, domain_size, guess_base, hash_p

logger = logging.getLogger(__name__)

# OR proofs hold 2^ell branches; beyond this they stop fitting in memory comfortably.
MAX_OR_ELL = 16


def _challenge(ctx: Transcript, protocol: bytes, statement: Sequence, commitments: Sequence) -> Scalar:
    t = ctx.clone()
    t.absorb(b"protocol", protocol)
    t.absorb(b"statement", *statement)
    t.absorb(b"commitment", *commitments)
    return fs_challenge(t)


def _reader(data: bytes, tag: bytes) -> FieldReader:
    reader = FieldReader(data)
    reader.tag(tag)
    return reader


def _check_ell(ell: int) -> None:
    if not 0 <= ell <= MAX_OR_ELL:
        raise InvalidParameter(f"ell must be in [0, {MAX_OR_ELL}], got {ell}")


# --- schnorrDL: knowledge of sk with pk = g^sk ---------------------------------


@dataclass(frozen=True)
class DlProof:
    R: GroupElement
    z: Scalar

    TAG = b"DL"

    def to_bytes(self) -> bytes:
        return encode_fields(self.TAG, self.R.to_bytes(), self.z.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "DlProof":
        reader = _reader(data, cls.TAG)
        proof = cls(reader.element(), reader.scalar())
        reader.done()
        return proof


def prove_dl(pk: GroupElement, sk: Scalar, ctx: Transcript, rng: Rng = None) -> DlProof:
    if G ** sk != pk:
        raise InvalidWitness("sk does not open pk")
    r = random_scalar(rng)
    R = G ** r
    c = _challenge(ctx, DlProof.TAG, [pk], [R])
    return DlProof(R, r + c * sk)


def verify_dl(pk: GroupElement, proof: DlProof, ctx: Transcript) -> bool:
    c = _challenge(ctx, DlProof.TAG, [pk], [proof.R])
    return G ** proof.z == proof.R * (pk ** c)


# --- schnorrCom: opening of a Pedersen commitment C = g^sk h^omega -------------


@dataclass(frozen=True)
class OpenProof:
    R: GroupElement
    z_sk: Scalar
    z_omega: Scalar

    TAG = b"OPEN"

    def to_bytes(self) -> bytes:
        return encode_fields(self.TAG, self.R.to_bytes(), self.z_sk.to_bytes(), self.z_omega.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "OpenProof":
        reader = _reader(data, cls.TAG)
        proof = cls(reader.element(), reader.scalar(), reader.scalar())
        reader.done()
        return proof


def prove_open(
    C: GroupElement, g: GroupElement, h: GroupElement, sk: Scalar, omega: Scalar, ctx: Transcript, rng: Rng = None
) -> OpenProof:
    if (g ** sk) * (h ** omega) != C:
        raise InvalidWitness("(sk, omega) does not open C")
    r_sk, r_omega = random_scalar(rng), random_scalar(rng)
    R = (g ** r_sk) * (h ** r_omega)
    c = _challenge(ctx, OpenProof.TAG, [C, g, h], [R])
    return OpenProof(R, r_sk + c * sk, r_omega + c * omega)


def verify_open(C: GroupElement, g: GroupElement, h: GroupElement, proof: OpenProof, ctx: Transcript) -> bool:
    c = _challenge(ctx, OpenProof.TAG, [C, g, h], [proof.R])
    return (g ** proof.z_sk) * (h ** proof.z_omega) == proof.R * (C ** c)


# --- schnorrEnc: ct = (g^alpha, Z^alpha * req^sk) and pk = g^sk ---------------


@dataclass(frozen=True)
class EncProof:
    R1: GroupElement
    R2: GroupElement
    R3: GroupElement
    z_sk: Scalar
    z_alpha: Scalar

    TAG = b"ENC"

    def to_bytes(self) -> bytes:
        return encode_fields(
            self.TAG,
            self.R1.to_bytes(),
            self.R2.to_bytes(),
            self.R3.to_bytes(),
            self.z_sk.to_bytes(),
            self.z_alpha.to_bytes(),
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "EncProof":
        reader = _reader(data, cls.TAG)
        proof = cls(reader.element(), reader.element(), reader.element(), reader.scalar(), reader.scalar())
        reader.done()
        return proof


def _enc_statement(pk, Z, req, ct) -> list:
    if not isinstance(ct, ElGamalCiphertext):
        raise InvalidStatement("ciphertext must be an ElGamalCiphertext")
    return [pk, Z, req, ct.c1, ct.c2]


def prove_enc(
    pk: GroupElement,
    Z: GroupElement,
    req: GroupElement,
    ct: ElGamalCiphertext,
    sk: Scalar,
    alpha: Scalar,
    ctx: Transcript,
    rng: Rng = None,
) -> EncProof:
    statement = _enc_statement(pk, Z, req, ct)
    if G ** sk != pk or G ** alpha != ct.c1 or (Z ** alpha) * (req ** sk) != ct.c2:
        raise InvalidWitness("ciphertext is not an encryption of req^sk")
    r_sk, r_alpha = random_scalar(rng), random_scalar(rng)
    R1 = G ** r_sk
    R2 = G ** r_alpha
    R3 = (Z ** r_alpha) * (req ** r_sk)
    c = _challenge(ctx, EncProof.TAG, statement, [R1, R2, R3])
    return EncProof(R1, R2, R3, r_sk + c * sk, r_alpha + c * alpha)


def verify_enc(
    pk: GroupElement, Z: GroupElement, req: GroupElement, ct: ElGamalCiphertext, proof: EncProof, ctx: Transcript
) -> bool:
    statement = _enc_statement(pk, Z, req, ct)
    c = _challenge(ctx, EncProof.TAG, statement, [proof.R1, proof.R2, proof.R3])
    return (
        G ** proof.z_sk == proof.R1 * (pk ** c)
        and G ** proof.z_alpha == proof.R2 * (ct.c1 ** c)
        and (Z ** proof.z_alpha) * (req ** proof.z_sk) == proof.R3 * (ct.c2 ** c)
    )


# --- DLEQ: log_g A = log_h B ---------------------------------------------------


@dataclass(frozen=True)
class DleqProof:
    a_g: GroupElement
    a_h: GroupElement
    z: Scalar

    TAG = b"DLEQ"

    def to_bytes(self) -> bytes:
        return encode_fields(self.TAG, self.a_g.to_bytes(), self.a_h.to_bytes(), self.z.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "DleqProof":
        reader = _reader(data, cls.TAG)
        proof = cls(reader.element(), reader.element(), reader.scalar())
        reader.done()
        return proof


def prove_dleq(
    g: GroupElement, A: GroupElement, h: GroupElement, B: GroupElement, x: Scalar, ctx: Transcript, rng: Rng = None
) -> DleqProof:
    if g ** x != A or h ** x != B:
        raise InvalidWitness("x is not a common discrete log")
    r = random_scalar(rng)
    a_g, a_h = g ** r, h ** r
    c = _challenge(ctx, DleqProof.TAG, [g, A, h, B], [a_g, a_h])
    return DleqProof(a_g, a_h, r + c * x)


def verify_dleq(
    g: GroupElement, A: GroupElement, h: GroupElement, B: GroupElement, proof: DleqProof, ctx: Transcript
) -> bool:
    c = _challenge(ctx, DleqProof.TAG, [g, A, h, B], [proof.a_g, proof.a_h])
    return g ** proof.z == proof.a_g * (A ** c) and h ** proof.z == proof.a_h * (B ** c)


# --- orSchnorr: T = h_y^{sk*alpha} for some y in [0, 2^ell) ---------------------


@dataclass(frozen=True)
class OrBranch:
    B: GroupElement
    a1: GroupElement
    a2: GroupElement
    a3: GroupElement
    a4: GroupElement
    c: Scalar
    z_alpha: Scalar
    z_sk: Scalar

    def commitments(self) -> List[GroupElement]:
        return [self.B, self.a1, self.a2, self.a3, self.a4]

    def to_bytes(self) -> bytes:
        return encode_fields(*(e.to_bytes() for e in self.commitments()), self.c.to_bytes(),
                             self.z_alpha.to_bytes(), self.z_sk.to_bytes())

    @classmethod
    def read(cls, reader: FieldReader) -> "OrBranch":
        return cls(*(reader.element() for _ in range(5)), reader.scalar(), reader.scalar(), reader.scalar())


@dataclass(frozen=True)
class OrProof:
    branches: Tuple[OrBranch, ...]

    TAG = b"OR"

    def to_bytes(self) -> bytes:
        return encode_fields(self.TAG, as_bytes(len(self.branches)), *(b.to_bytes() for b in self.branches))

    @classmethod
    def from_bytes(cls, data: bytes) -> "OrProof":
        reader = _reader(data, cls.TAG)
        n = reader.integer()
        branches = []
        for _ in range(n):
            branches.append(OrBranch.read(FieldReader(reader.take())))
        reader.done()
        return cls(tuple(branches))


def simulate_or_branch(
    pk: GroupElement, A: GroupElement, T: GroupElement, h: GroupElement, rng: Rng
) -> OrBranch:
    """One OR branch that verifies for any challenge, built without a witness."""
    c, z_alpha, z_sk, beta = (random_scalar(rng) for _ in range(4))
    B = h ** beta
    return OrBranch(
        B=B,
        a1=(G ** z_alpha) / (A ** c),
        a2=(h ** z_alpha) / (B ** c),
        a3=(G ** z_sk) / (pk ** c),
        a4=(B ** z_sk) / (T ** c),
        c=c,
        z_alpha=z_alpha,
        z_sk=z_sk,
    )


def prove_or(
    pk: GroupElement,
    A: GroupElement,
    T: GroupElement,
    ell: int,
    sk: Scalar,
    alpha: Scalar,
    y: int,
    ctx: Transcript,
    rng: Rng = None,
) -> OrProof:
    _check_ell(ell)
    try:
        check_guess(y, ell)
    except ValueError as e:
        raise InvalidWitness(str(e)) from e
    h_y = guess_base(y, ell)
    if G ** sk != pk or G ** alpha != A or h_y ** (sk * alpha) != T:
        raise InvalidWitness("witness does not satisfy T = H_G(y)^{sk*alpha}")

    t_alpha, t_sk = random_scalar(rng), random_scalar(rng)
    B = h_y ** alpha
    real = (B, G ** t_alpha, h_y ** t_alpha, G ** t_sk, B ** t_sk)

    simulated: Dict[int, OrBranch] = {}
    commitments: List[GroupElement] = []
    for y_hat in range(domain_size(ell)):
        if y_hat == y:
            commitments.extend(real)
            continue
        branch = simulate_or_branch(pk, A, T, guess_base(y_hat, ell), rng)
        simulated[y_hat] = branch
        commitments.extend(branch.commitments())

    c = _challenge(ctx, OrProof.TAG, [pk, A, T, ell], commitments)
    c_y = c - sum((b.c for b in simulated.values()), Scalar(0))
    branches = []
    for y_hat in range(domain_size(ell)):
        if y_hat == y:
            branches.append(OrBranch(*real, c=c_y, z_alpha=t_alpha + c_y * alpha, z_sk=t_sk + c_y * sk))
        else:
            branches.append(simulated[y_hat])
    return OrProof(tuple(branches))


def verify_or(pk: GroupElement, A: GroupElement, T: GroupElement, ell: int, proof: OrProof, ctx: Transcript) -> bool:
    if not 0 <= ell <= MAX_OR_ELL or len(proof.branches) != domain_size(ell):
        logger.debug("OR proof has the wrong number of branches")
        return False
    commitments = [e for b in proof.branches for e in b.commitments()]
    c = _challenge(ctx, OrProof.TAG, [pk, A, T, ell], commitments)
    if sum((b.c for b in proof.branches), Scalar(0)) != c:
        logger.debug("OR proof branch challenges do not sum to the challenge")
        return False
    for y_hat, b in enumerate(proof.branches):
        h = guess_base(y_hat, ell)
        if not (
            G ** b.z_alpha == b.a1 * (A ** b.c)
            and h ** b.z_alpha == b.a2 * (b.B ** b.c)
            and G ** b.z_sk == b.a3 * (pk ** b.c)
            and b.B ** b.z_sk == b.a4 * (T ** b.c)
        ):
            logger.debug("OR proof branch %d fails", y_hat)
            return False
    return True


# --- orWF: U = u^rho and V = h_y^sk * g^rho for some y -------------------------


@dataclass(frozen=True)
class OrWfBranch:
    M: GroupElement
    a1: GroupElement
    a2: GroupElement
    a3: GroupElement
    a4: GroupElement
    c: Scalar
    z_sk: Scalar
    z_rho: Scalar

    def commitments(self) -> List[GroupElement]:
        return [self.M, self.a1, self.a2, self.a3, self.a4]

    def to_bytes(self) -> bytes:
        return encode_fields(*(e.to_bytes() for e in self.commitments()), self.c.to_bytes(),
                             self.z_sk.to_bytes(), self.z_rho.to_bytes())

    @classmethod
    def read(cls, reader: FieldReader) -> "OrWfBranch":
        return cls(*(reader.element() for _ in range(5)), reader.scalar(), reader.scalar(), reader.scalar())


@dataclass(frozen=True)
class OrWfProof:
    branches: Tuple[OrWfBranch, ...]

    TAG = b"ORWF"

    def to_bytes(self) -> bytes:
        return encode_fields(self.TAG, as_bytes(len(self.branches)), *(b.to_bytes() for b in self.branches))

    @classmethod
    def from_bytes(cls, data: bytes) -> "OrWfProof":
        reader = _reader(data, cls.TAG)
        n = reader.integer()
        branches = [OrWfBranch.read(FieldReader(reader.take())) for _ in range(n)]
        reader.done()
        return cls(tuple(branches))


def prove_orwf(
    pk: GroupElement,
    U_: GroupElement,
    V: GroupElement,
    ell: int,
    sk: Scalar,
    rho: Scalar,
    y: int,
    ctx: Transcript,
    rng: Rng = None,
) -> OrWfProof:
    _check_ell(ell)
    try:
        check_guess(y, ell)
    except ValueError as e:
        raise InvalidWitness(str(e)) from e
    h_y = guess_base(y, ell)
    M_real = h_y ** sk
    if G ** sk != pk or U ** rho != U_ or M_real * (G ** rho) != V:
        raise InvalidWitness("(U, V) is not well formed for this witness")

    t_sk, t_rho = random_scalar(rng), random_scalar(rng)
    real = (M_real, G ** t_sk, h_y ** t_sk, U ** t_rho, G ** t_rho)

    simulated: Dict[int, OrWfBranch] = {}
    commitments: List[GroupElement] = []
    for y_hat in range(domain_size(ell)):
        if y_hat == y:
            commitments.extend(real)
            continue
        h = guess_base(y_hat, ell)
        c, z_sk, z_rho, mu = (random_scalar(rng) for _ in range(4))
        M = h ** mu
        branch = OrWfBranch(
            M=M,
            a1=(G ** z_sk) / (pk ** c),
            a2=(h ** z_sk) / (M ** c),
            a3=(U ** z_rho) / (U_ ** c),
            a4=(G ** z_rho) / ((V / M) ** c),
            c=c,
            z_sk=z_sk,
            z_rho=z_rho,
        )
        simulated[y_hat] = branch
        commitments.extend(branch.commitments())

    c = _challenge(ctx, OrWfProof.TAG, [pk, U_, V, ell], commitments)
    c_y = c - sum((b.c for b in simulated.values()), Scalar(0))
    branches = []
    for y_hat in range(domain_size(ell)):
        if y_hat == y:
            branches.append(OrWfBranch(*real, c=c_y, z_sk=t_sk + c_y * sk, z_rho=t_rho + c_y * rho))
        else:
            branches.append(simulated[y_hat])
    return OrWfProof(tuple(branches))


def verify_orwf(
    pk: GroupElement, U_: GroupElement, V: GroupElement, ell: int, proof: OrWfProof, ctx: Transcript
) -> bool:
    if not 0 <= ell <= MAX_OR_ELL or len(proof.branches) != domain_size(ell):
        return False
    commitments = [e for b in proof.branches for e in b.commitments()]
    c = _challenge(ctx, OrWfProof.TAG, [pk, U_, V, ell], commitments)
    if sum((b.c for b in proof.branches), Scalar(0)) != c:
        return False
    for y_hat, b in enumerate(proof.branches):
        h = guess_base(y_hat, ell)
        if not (
            G ** b.z_sk == b.a1 * (pk ** b.c)
            and h ** b.z_sk == b.a2 * (b.M ** b.c)
            and U ** b.z_rho == b.a3 * (U_ ** b.c)
            and G ** b.z_rho == b.a4 * ((V / b.M) ** b.c)
        ):
            logger.debug("orWF branch %d fails", y_hat)
            return False
    return True


# --- hiddenbaseWF: X = h g^rho, Y = h^alpha with h hidden ----------------------


@dataclass(frozen=True)
class HiddenBaseProof:
    T_g: GroupElement
    a11: GroupElement
    a12: GroupElement
    a21: GroupElement
    a22: GroupElement
    a31: GroupElement
    a32: GroupElement
    z1: Scalar
    z2: Scalar
    z3: Scalar

    TAG = b"HB"

    def elements(self) -> List[GroupElement]:
        return [self.T_g, self.a11, self.a12, self.a21, self.a22, self.a31, self.a32]

    def to_bytes(self) -> bytes:
        return encode_fields(self.TAG, *(e.to_bytes() for e in self.elements()),
                             self.z1.to_bytes(), self.z2.to_bytes(), self.z3.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "HiddenBaseProof":
        reader = _reader(data, cls.TAG)
        proof = cls(*(reader.element() for _ in range(7)), reader.scalar(), reader.scalar(), reader.scalar())
        reader.done()
        return proof


def prove_hidden(
    X: GroupElement,
    Y: GroupElement,
    U_rho: GroupElement,
    U_alpha: GroupElement,
    T_u: GroupElement,
    h: GroupElement,
    rho: Scalar,
    alpha: Scalar,
    ctx: Transcript,
    rng: Rng = None,
) -> HiddenBaseProof:
    delta = rho * alpha
    if (
        h * (G ** rho) != X
        or h ** alpha != Y
        or U ** rho != U_rho
        or U ** alpha != U_alpha
        or U ** delta != T_u
    ):
        raise InvalidWitness("hidden-base statement does not match the witness")
    T_g = (X ** alpha) / Y
    r1, r2, r3 = random_scalar(rng), random_scalar(rng), random_scalar(rng)
    a11, a12 = U ** r1, U_rho ** r1
    a21, a22 = U ** r2, G ** r2
    a31, a32 = U ** r3, X ** r3
    c = _challenge(ctx, HiddenBaseProof.TAG, [X, Y, U_rho, U_alpha, T_u], [T_g, a11, a12, a21, a22, a31, a32])
    return HiddenBaseProof(T_g, a11, a12, a21, a22, a31, a32, r1 + c * alpha, r2 + c * delta, r3 + c * alpha)


def verify_hidden(
    X: GroupElement,
    Y: GroupElement,
    U_rho: GroupElement,
    U_alpha: GroupElement,
    T_u: GroupElement,
    proof: HiddenBaseProof,
    ctx: Transcript,
) -> bool:
    p = proof
    c = _challenge(ctx, HiddenBaseProof.TAG, [X, Y, U_rho, U_alpha, T_u], p.elements())
    return (
        U ** p.z1 == p.a11 * (U_alpha ** c)
        and U_rho ** p.z1 == p.a12 * (T_u ** c)
        and U ** p.z2 == p.a21 * (T_u ** c)
        and G ** p.z2 == p.a22 * (p.T_g ** c)
        and U ** p.z3 == p.a31 * (U_alpha ** c)
        and X ** p.z3 == p.a32 * ((Y * p.T_g) ** c)
    )


# --- cut-and-choose well-formedness of Y_win ------------------------------------


@dataclass(frozen=True)
class CcCommitment:
    c: Scalar
    R: GroupElement
    A: GroupElement


@dataclass(frozen=True)
class CcOpening:
    r: Scalar
    T: GroupElement
    or_proof: Optional[OrProof] = None


@dataclass(frozen=True)
class CcReveal:
    alpha: Scalar
    s: Scalar


@dataclass(frozen=True)
class BatchedOpening:
    U: GroupElement
    V: GroupElement
    U_alpha: GroupElement
    T_u: GroupElement
    orwf: OrWfProof
    hidden: HiddenBaseProof
    link: DleqProof


@dataclass(frozen=True)
class CutChooseProof:
    commitments: Tuple[CcCommitment, ...]
    opened: Mapping[int, CcOpening]
    unopened: Mapping[int, CcReveal]
    batch: Optional[BatchedOpening] = None

    TAG = b"CC"

    @property
    def lam(self) -> int:
        return len(self.commitments)

    @property
    def batched(self) -> bool:
        return self.batch is not None

    def to_bytes(self) -> bytes:
        fields = [self.TAG, as_bytes(len(self.commitments))]
        for com in self.commitments:
            fields += [com.c.to_bytes(), com.R.to_bytes(), com.A.to_bytes()]
        fields.append(as_bytes(len(self.opened)))
        for j in sorted(self.opened):
            op = self.opened[j]
            fields += [as_bytes(j), op.r.to_bytes(), op.T.to_bytes(),
                       op.or_proof.to_bytes() if op.or_proof is not None else b""]
        fields.append(as_bytes(len(self.unopened)))
        for k in sorted(self.unopened):
            rv = self.unopened[k]
            fields += [as_bytes(k), rv.alpha.to_bytes(), rv.s.to_bytes()]
        if self.batch is None:
            fields.append(b"")
        else:
            b = self.batch
            fields.append(encode_fields(b.U.to_bytes(), b.V.to_bytes(), b.U_alpha.to_bytes(), b.T_u.to_bytes(),
                                        b.orwf.to_bytes(), b.hidden.to_bytes(), b.link.to_bytes()))
        return encode_fields(*fields)

    @classmethod
    def from_bytes(cls, data: bytes) -> "CutChooseProof":
        reader = _reader(data, cls.TAG)
        commitments = tuple(
            CcCommitment(reader.scalar(), reader.element(), reader.element()) for _ in range(reader.integer())
        )
        opened: Dict[int, CcOpening] = {}
        for _ in range(reader.integer()):
            j, r, T, raw = reader.integer(), reader.scalar(), reader.element(), reader.take()
            opened[j] = CcOpening(r, T, OrProof.from_bytes(raw) if raw else None)
        unopened: Dict[int, CcReveal] = {}
        for _ in range(reader.integer()):
            k = reader.integer()
            unopened[k] = CcReveal(reader.scalar(), reader.scalar())
        raw = reader.take()
        batch = None
        if raw:
            br = FieldReader(raw)
            batch = BatchedOpening(
                br.element(), br.element(), br.element(), br.element(),
                OrWfProof.from_bytes(br.take()), HiddenBaseProof.from_bytes(br.take()),
                DleqProof.from_bytes(br.take()),
            )
            br.done()
        reader.done()
        if len(opened) + len(unopened) != len(commitments):
            raise MalformedEncoding("opened and unopened counts do not cover the commitments")
        return cls(commitments, opened, unopened, batch)


def proof_size(proof) -> int:
    """Length in bytes of a proof's canonical serialization."""
    return len(proof.to_bytes())


def cc_transcript(ctx: Transcript, pk: OprfPublicKey, Y_win: GroupElement, ell: int,
                  commitments: Sequence[CcCommitment]) -> Transcript:
    """Transcript the opened subset is drawn from; prover and verifier share it."""
    t = ctx.clone()
    t.absorb(b"protocol", CutChooseProof.TAG)
    t.absorb(b"statement", pk.to_bytes(), Y_win, ell, len(commitments))
    for com in commitments:
        t.absorb(b"commitment", com.c, com.R, com.A)
    return t


def _opening_context(t: Transcript, j: int) -> Transcript:
    return t.clone().absorb(b"cc/opened-index", j)


def _batch_transcript(t: Transcript, opened: Mapping[int, CcOpening], U_: GroupElement,
                      V: GroupElement) -> Transcript:
    tb = t.clone().absorb(b"cc/batch", U_, V)
    for j in sorted(opened):
        tb.absorb(b"cc/opening", j, opened[j].r, opened[j].T)
    return tb


def _batch_weights(tb: Transcript, indices: Sequence[int]) -> Dict[int, Scalar]:
    seed = tb.serialize()
    return {j: hash_to_scalar(b"proswap/cc-weight", [seed, j]) for j in indices}


def unopened_indices(lam: int, opened: Set[int]) -> List[int]:
    """Indices in 1..lam left out of the opened subset, ascending."""
    return [i for i in range(1, lam + 1) if i not in opened]


def prove_ywin(
    oprf_kp: OprfKeyPair,
    y_tgt: int,
    w_win: Scalar,
    Y_win: GroupElement,
    ell: int,
    ctx: Transcript,
    rng: Rng = None,
    batched: bool = False,
) -> CutChooseProof:
    """Prove that Y_win's witness is hidden behind H_G(y_tgt) in every instance.

    Instance i commits to c_i = H_p(pk, T_i) + r_i, R_i = g^{r_i} and
    A_i = g^{alpha_i} with T_i = H_G(y_tgt)^{sk*alpha_i}. Half the instances,
    chosen by the transcript, are opened; the rest reveal (alpha_k, r_k + w_win).
    """
    _check_ell(ell)
    lam = oprf_kp.lam
    if lam < 2 or lam % 2:
        raise InvalidParameter(f"lambda must be even and at least 2, got {lam}")
    try:
        check_guess(y_tgt, ell)
    except ValueError as e:
        raise InvalidWitness(str(e)) from e
    if G ** w_win != Y_win:
        raise InvalidWitness("w_win does not open Y_win")

    pk = oprf_kp.public()
    pk_bytes = pk.to_bytes()
    base = guess_base(y_tgt, ell)
    rs = [random_scalar(rng) for _ in range(lam)]
    Ts = [base ** (oprf_kp.sk * a) for a in oprf_kp.alphas]
    commitments = tuple(
        CcCommitment(hash_p(pk_bytes, T) + r, G ** r, A) for T, r, A in zip(Ts, rs, oprf_kp.A)
    )
    t = cc_transcript(ctx, pk, Y_win, ell, commitments)
    opened_idx = fs_subset(t, lam, lam // 2)

    opened: Dict[int, CcOpening] = {}
    for j in sorted(opened_idx):
        i = j - 1
        or_proof = None
        if not batched:
            or_proof = prove_or(oprf_kp.X, oprf_kp.A[i], Ts[i], ell, oprf_kp.sk, oprf_kp.alphas[i], y_tgt,
                                _opening_context(t, j), rng)
        opened[j] = CcOpening(rs[i], Ts[i], or_proof)
    unopened = {k: CcReveal(oprf_kp.alphas[k - 1], rs[k - 1] + w_win) for k in unopened_indices(lam, opened_idx)}

    batch = None
    if batched:
        batch = _prove_batch(oprf_kp, y_tgt, ell, t, opened, rng)
    logger.debug("cut-and-choose proof built: lambda=%d ell=%d batched=%s", lam, ell, batched)
    return CutChooseProof(commitments, opened, unopened, batch)


def _prove_batch(oprf_kp: OprfKeyPair, y: int, ell: int, t: Transcript,
                 opened: Mapping[int, CcOpening], rng: Rng) -> BatchedOpening:
    sk = oprf_kp.sk
    h = guess_base(y, ell) ** sk
    rho = random_scalar(rng)
    U_, V = U ** rho, h * (G ** rho)
    tb = _batch_transcript(t, opened, U_, V)
    weights = _batch_weights(tb, sorted(opened))
    alpha_star = sum((weights[j] * oprf_kp.alphas[j - 1] for j in opened), Scalar(0))
    T_star = product(opened[j].T ** weights[j] for j in opened)
    A_star = G ** alpha_star
    U_alpha, T_u = U ** alpha_star, U_ ** alpha_star
    return BatchedOpening(
        U=U_,
        V=V,
        U_alpha=U_alpha,
        T_u=T_u,
        orwf=prove_orwf(oprf_kp.X, U_, V, ell, sk, rho, y, tb.clone().absorb(b"cc/part", b"orwf"), rng),
        hidden=prove_hidden(V, T_star, U_, U_alpha, T_u, h, rho, alpha_star,
                            tb.clone().absorb(b"cc/part", b"hidden"), rng),
        link=prove_dleq(G, A_star, U, U_alpha, alpha_star, tb.clone().absorb(b"cc/part", b"link"), rng),
    )


def _verify_batch(pk: OprfPublicKey, ell: int, t: Transcript, proof: CutChooseProof) -> bool:
    b = proof.batch
    tb = _batch_transcript(t, proof.opened, b.U, b.V)
    weights = _batch_weights(tb, sorted(proof.opened))
    T_star = product(proof.opened[j].T ** weights[j] for j in proof.opened)
    A_star = product(proof.commitments[j - 1].A ** weights[j] for j in proof.opened)
    return (
        verify_dleq(G, A_star, U, b.U_alpha, b.link, tb.clone().absorb(b"cc/part", b"link"))
        and verify_hidden(b.V, T_star, b.U, b.U_alpha, b.T_u, b.hidden, tb.clone().absorb(b"cc/part", b"hidden"))
        and verify_orwf(pk.X, b.U, b.V, ell, b.orwf, tb.clone().absorb(b"cc/part", b"orwf"))
    )


def verify_ywin(pk: OprfPublicKey, Y_win: GroupElement, ell: int, proof: CutChooseProof, ctx: Transcript) -> bool:
    try:
        return _verify_ywin(pk, Y_win, ell, proof, ctx)
    except (ProSwapError, ValueError, TypeError, AttributeError) as e:
        logger.debug("cut-and-choose proof is structurally malformed: %s", e)
        return False


def _verify_ywin(pk: OprfPublicKey, Y_win: GroupElement, ell: int, proof: CutChooseProof, ctx: Transcript) -> bool:
    lam = proof.lam
    if lam < 2 or lam % 2 or lam != len(pk.A) or not 0 <= ell <= MAX_OR_ELL:
        logger.debug("cut-and-choose proof has the wrong shape")
        return False
    if any(com.A != a for com, a in zip(proof.commitments, pk.A)):
        logger.debug("commitment A_i does not match the OPRF key")
        return False

    t = cc_transcript(ctx, pk, Y_win, ell, proof.commitments)
    opened_idx = fs_subset(t, lam, lam // 2)
    if set(proof.opened) != opened_idx or set(proof.unopened) != set(unopened_indices(lam, opened_idx)):
        logger.debug("opened index set does not match the transcript")
        return False

    pk_bytes = pk.to_bytes()
    for j in sorted(proof.opened):
        op, com = proof.opened[j], proof.commitments[j - 1]
        if G ** op.r != com.R or hash_p(pk_bytes, op.T) + op.r != com.c:
            logger.debug("opening %d does not match its commitment", j)
            return False
        if (op.or_proof is None) != proof.batched:
            return False

    for k in sorted(proof.unopened):
        rv, com = proof.unopened[k], proof.commitments[k - 1]
        if G ** rv.s != Y_win * com.R or G ** rv.alpha != com.A:
            logger.debug("unopened instance %d is inconsistent with Y_win", k)
            return False

    if proof.batched:
        return _verify_batch(pk, ell, t, proof)
    for j in sorted(proof.opened):
        op = proof.opened[j]
        if not verify_or(pk.X, proof.commitments[j - 1].A, op.T, ell, op.or_proof, _opening_context(t, j)):
            logger.debug("OR proof for opened instance %d rejected", j)
            return False
    return True


def recover_witness(
    proof: CutChooseProof, finalized: Mapping[int, Scalar], Y_win: GroupElement
) -> Optional[Scalar]:
    """First candidate w = s_k - c_k + h_k with g^w = Y_win, or None on a losing guess."""
    for k in sorted(proof.unopened):
        if k not in finalized:
            continue
        w = proof.unopened[k].s - proof.commitments[k - 1].c + finalized[k]
        if G ** w == Y_win:
            return w
    return None


def witness_candidates(proof: CutChooseProof, finalized: Mapping[int, Scalar]) -> Dict[int, Scalar]:
    """Every unopened-index candidate; an honest dealer makes them all equal on a win."""
    return {
        k: proof.unopened[k].s - proof.commitments[k - 1].c + finalized[k]
        for k in sorted(proof.unopened)
        if k in finalized
    }
