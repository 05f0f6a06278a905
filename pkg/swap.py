# swap.py
"""Dealer and party state machines for the probabilistic swap.

Phases, in order:

  setup          dealer commits to Y_win = g^{w_win} and proves, by
                 cut-and-choose, that w_win is reachable only through the
                 OPRF value of a hidden target y_tgt
  funding        joint key pk_tmp; dealer locks ν_D until T_D, party locks 1
                 until T_P, both spendable by pk_tmp at any time
  claim dealer   party sends a blinded guess; dealer returns the evaluation
                 encrypted under a fresh Z; two pre-signatures are made jointly
                 (dealer->party under Y_win, party->dealer under Z); dealer
                 completes its own with z and posts it, revealing z
  claim party    party extracts z, decrypts, finalizes, recovers w_win if its
                 guess was right, completes the dealer->party pre-signature
  timeout        owners take back unspent boxes through the fallback branch

The dealer's box and the party's box may live on different ledgers.
"""
import hashlib
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple

from adaptor import PreSignature, SigKeyPair, Signature, Statement, adapt, extract, sign, vrfy
from algebra import G, GroupElement, Rng, Scalar, Transcript, as_bytes, encode_fields, random_below, random_scalar
from encryption import ElGamalCiphertext, eg_dec, eg_enc, eg_keygen
from errors import (
    ExtractionMismatch,
    InvalidParameter,
    InvariantViolation,
    LedgerRejection,
    ProtocolAbort,
    ProtocolStateError,
    RejectReason,
)
from ledger import LedgerState, LedgerTx, LockBox, SingleKey, TimeLocked, TxOutput, transfer
from oprf import (
    OprfClientState,
    OprfKeyPair,
    OprfPublicKey,
    OprfResponse,
    blind_eval,
    check_guess,
    domain_size,
    finalize_with_alpha,
    oprf_keygen,
    request,
)
from proofs import (
    MAX_OR_ELL,
    CcReveal,
    CutChooseProof,
    EncProof,
    prove_enc,
    prove_ywin,
    recover_witness,
    verify_enc,
    verify_ywin,
)
from twoparty import DkgResult, PresignOpening, PresignSession, Role, dkg_start, presign_start

logger = logging.getLogger(__name__)

DEALER = "dealer"
PARTY = "party"


class Scenario(str, Enum):
    HONEST = "honest"
    WITHHOLD_SIGMA = "withhold-sigma"
    MALFORMED_YWIN = "malformed-ywin"
    MALFORMED_CT = "malformed-ct"
    BAD_PRESIGN_PARTIAL = "bad-presign-partial"
    PREMATURE_REFUND = "premature-refund"
    POST_TIMEOUT_CLAIM = "post-timeout-claim"


@dataclass(frozen=True)
class SwapParams:
    nu_D: Fraction
    ell: int
    lam: int
    pk_D: GroupElement
    pk_P: GroupElement
    T_D: int
    T_P: int
    batched: bool = False

    def __post_init__(self):
        object.__setattr__(self, "nu_D", Fraction(self.nu_D))
        if self.T_D <= self.T_P:
            raise InvalidParameter(f"T_D ({self.T_D}) must exceed T_P ({self.T_P})")
        if self.T_P < 0:
            raise InvalidParameter("timeouts must be non-negative")
        if not 0 <= self.ell <= MAX_OR_ELL:
            raise InvalidParameter(f"ell must be in [0, {MAX_OR_ELL}], got {self.ell}")
        if self.lam < 2 or self.lam % 2:
            raise InvalidParameter(f"lambda must be even and at least 2, got {self.lam}")
        if self.nu_D <= 0:
            raise InvalidParameter("nu_D must be positive")

    @property
    def m(self) -> int:
        return domain_size(self.ell)

    @property
    def win_probability(self) -> Fraction:
        return Fraction(1, self.m)

    def fingerprint(self) -> bytes:
        return hashlib.sha256(encode_fields(
            b"proswap/params", str(self.nu_D).encode(), as_bytes(self.ell), as_bytes(self.lam),
            self.pk_D.to_bytes(), self.pk_P.to_bytes(), as_bytes(self.T_D), as_bytes(self.T_P),
            as_bytes(self.batched),
        )).digest()


class DealerPhase(str, Enum):
    SETUP = "setup"
    FUNDED = "funded"
    SERVED = "served"
    CLAIMED = "claimed"
    REFUNDED = "refunded"
    DONE = "done"
    ABORTED = "aborted"


class PartyPhase(str, Enum):
    AWAIT_SETUP = "await-setup"
    FUNDED = "funded"
    GUESSED = "guessed"
    DECIDED = "decided"
    WON = "won"
    LOST = "lost"
    REFUNDED = "refunded"
    ABORTED = "aborted"


@dataclass(frozen=True)
class SetupMsg:
    oprf_pk: OprfPublicKey
    Y_win: GroupElement
    cc_proof: CutChooseProof
    ell: int
    lam: int


@dataclass(frozen=True)
class SwapLedgers:
    """Where each side's box lives. Pass the same ledger twice for a same-chain swap."""
    dealer_chain: LedgerState
    party_chain: LedgerState

    @classmethod
    def single(cls, ledger: LedgerState) -> "SwapLedgers":
        return cls(ledger, ledger)

    @property
    def cross_chain(self) -> bool:
        return self.dealer_chain is not self.party_chain

    def distinct(self) -> List[LedgerState]:
        return [self.dealer_chain] if not self.cross_chain else [self.dealer_chain, self.party_chain]

    def tick(self, delta: int = 1) -> None:
        for ledger in self.distinct():
            ledger.tick(delta)

    def advance_to(self, height: int) -> None:
        for ledger in self.distinct():
            ledger.advance_to(height)


@dataclass(frozen=True)
class SwapEvent:
    height: int
    actor: str
    event: str


@dataclass
class DealerState:
    params: SwapParams
    key: SigKeyPair
    oprf_kp: OprfKeyPair
    y_tgt: int
    w_win: Scalar
    Y_win: GroupElement
    cc_proof: CutChooseProof
    phase: DealerPhase = DealerPhase.SETUP
    tmp: Optional[DkgResult] = None
    z: Optional[Scalar] = None
    Z: Optional[GroupElement] = None
    presig_DP: Optional[PreSignature] = None
    presig_PD: Optional[PreSignature] = None
    box: Optional[LockBox] = None
    party_box: Optional[LockBox] = None
    tx_PD: Optional[LedgerTx] = None
    rng: Rng = field(default=None, repr=False)


@dataclass
class PartyState:
    params: SwapParams
    key: SigKeyPair
    y_gss: int
    phase: PartyPhase = PartyPhase.AWAIT_SETUP
    setup: Optional[SetupMsg] = None
    oprf_state: Optional[OprfClientState] = None
    tmp: Optional[DkgResult] = None
    Z: Optional[GroupElement] = None
    ct: Optional[ElGamalCiphertext] = None
    enc_proof: Optional[EncProof] = None
    presig_DP: Optional[PreSignature] = None
    presig_PD: Optional[PreSignature] = None
    box: Optional[LockBox] = None
    dealer_box: Optional[LockBox] = None
    tx_DP: Optional[LedgerTx] = None
    tx_PD: Optional[LedgerTx] = None
    recovered_w: Optional[Scalar] = None
    rng: Rng = field(default=None, repr=False)


@dataclass
class SwapOutcome:
    scenario: Scenario
    seed: Optional[int]
    dealer_paid: bool = False
    party_won: bool = False
    funded: bool = False
    aborted: Optional[str] = None
    y_tgt: Optional[int] = None
    y_gss: Optional[int] = None
    initial_balances: Dict[str, Fraction] = field(default_factory=dict)
    final_balances: Dict[str, Fraction] = field(default_factory=dict)
    chain_totals: Dict[str, Tuple[Fraction, Fraction]] = field(default_factory=dict)
    tx_ids: Dict[str, str] = field(default_factory=dict)
    rejections: Dict[str, str] = field(default_factory=dict)
    history: List[SwapEvent] = field(default_factory=list)

    def record(self, height: int, actor: str, event: str) -> None:
        self.history.append(SwapEvent(height, actor, event))
        logger.debug("[h=%d] %s: %s", height, actor, event)

    def event_index(self, event: str) -> int:
        for i, e in enumerate(self.history):
            if e.event == event:
                return i
        return -1

    def to_lines(self) -> str:
        """Line-delimited key=value export."""
        lines = [
            f"scenario={self.scenario.value}",
            f"seed={'' if self.seed is None else self.seed}",
            f"funded={str(self.funded).lower()}",
            f"dealer_paid={str(self.dealer_paid).lower()}",
            f"party_won={str(self.party_won).lower()}",
            f"aborted={self.aborted or ''}",
        ]
        lines += [f"tx.{name}={txid}" for name, txid in self.tx_ids.items()]
        lines += [f"rejected.{name}={reason}" for name, reason in self.rejections.items()]
        lines += [f"balance.initial.{role}={value}" for role, value in self.initial_balances.items()]
        lines += [f"balance.final.{role}={value}" for role, value in self.final_balances.items()]
        lines += [f"event.{i}={e.height} {e.actor} {e.event}" for i, e in enumerate(self.history)]
        return "\n".join(lines) + "\n"


def setup_context(params: SwapParams) -> Transcript:
    return Transcript(b"proswap/setup").absorb(b"params", params.fingerprint())


def claim_context(params: SwapParams, Y_win: GroupElement) -> Transcript:
    return Transcript(b"proswap/claim-dealer").absorb(b"params", params.fingerprint()).absorb(b"Y_win", Y_win)


def _session_id(params: SwapParams, Y_win: GroupElement) -> bytes:
    return hashlib.sha256(params.fingerprint() + Y_win.to_bytes()).digest()


def dealer_setup(
    params: SwapParams, key: SigKeyPair, rng: Rng = None, y_tgt: Optional[int] = None
) -> Tuple[DealerState, SetupMsg]:
    if y_tgt is None:
        y_tgt = random_below(params.m, rng)
    check_guess(y_tgt, params.ell)
    oprf_kp = oprf_keygen(params.lam, rng)
    w_win = random_scalar(rng)
    Y_win = G ** w_win
    cc_proof = prove_ywin(oprf_kp, y_tgt, w_win, Y_win, params.ell, setup_context(params), rng, params.batched)
    dealer = DealerState(params, key, oprf_kp, y_tgt, w_win, Y_win, cc_proof, rng=rng)
    return dealer, SetupMsg(oprf_kp.public(), Y_win, cc_proof, params.ell, params.lam)


def party_check_setup(params: SwapParams, msg: SetupMsg) -> bool:
    if msg.ell != params.ell or msg.lam != params.lam or len(msg.oprf_pk.A) != params.lam:
        logger.warning("setup parameters do not match the agreed swap")
        return False
    if msg.cc_proof.batched != params.batched:
        logger.warning("setup proof layout does not match the agreed swap")
        return False
    if not verify_ywin(msg.oprf_pk, msg.Y_win, params.ell, msg.cc_proof, setup_context(params)):
        logger.warning("well-formedness proof for Y_win rejected")
        return False
    return True


def new_party(params: SwapParams, key: SigKeyPair, rng: Rng = None, y_gss: Optional[int] = None) -> PartyState:
    if y_gss is None:
        y_gss = random_below(params.m, rng)
    check_guess(y_gss, params.ell)
    return PartyState(params, key, y_gss, rng=rng)


def _fund(ledger: LedgerState, key: SigKeyPair, amount: Fraction, condition, rng: Rng) -> LockBox:
    """Lock ``amount`` of key's coins under ``condition``, returning change to key."""
    boxes = ledger.boxes_for(key.pk)
    if not boxes:
        raise LedgerRejection(RejectReason.UNKNOWN_OUTPOINT, f"no spendable boxes on {ledger.chain}")
    total = sum((b.value for b in boxes), Fraction(0))
    outputs = [TxOutput(amount, condition)]
    if total > amount:
        outputs.append(TxOutput(total - amount, SingleKey(key.pk)))
    tx = LedgerTx(tuple(b.id for b in boxes), tuple(outputs))
    tx = tx.with_witness(*(sign(key, tx.message, rng) for _ in boxes))
    ledger.post(tx)
    return LockBox(tx.outpoint(0), Fraction(amount), condition)


def run_funding(dealer: DealerState, party: PartyState, ledgers: SwapLedgers) -> Tuple[LockBox, LockBox]:
    """Joint key generation, then both lock boxes. The dealer funds first."""
    if party.setup is None:
        raise ProtocolStateError("party has not accepted a setup message")
    params = dealer.params
    sid = _session_id(params, dealer.Y_win)
    dealer_sess, commit = dkg_start(Role.P0, dealer.rng, sid)
    party_sess, _ = dkg_start(Role.P1, party.rng, sid)
    party_share, _ = party_sess.step(commit)
    dealer_share, dealer.tmp = dealer_sess.step(party_share)
    _, party.tmp = party_sess.step(dealer_share)
    if dealer.tmp.joint_pk != party.tmp.joint_pk:
        raise InvariantViolation("key generation produced different joint keys")

    pk_tmp = dealer.tmp.joint_pk
    dealer.box = _fund(ledgers.dealer_chain, dealer.key, params.nu_D,
                       TimeLocked(pk_tmp, params.T_D, params.pk_D), dealer.rng)
    party.dealer_box = dealer.box
    dealer.phase = DealerPhase.FUNDED
    party.box = _fund(ledgers.party_chain, party.key, Fraction(1),
                      TimeLocked(pk_tmp, params.T_P, params.pk_P), party.rng)
    dealer.party_box = party.box
    party.phase = PartyPhase.FUNDED
    logger.info("swap funded: dealer locks %s on %s, party locks 1 on %s",
                params.nu_D, ledgers.dealer_chain.chain, ledgers.party_chain.chain)
    return dealer.box, party.box


Tamper = Callable[[PresignOpening], PresignOpening]


def _run_presign(
    p0: PresignSession, first, p1: PresignSession, tamper: Optional[Tamper] = None
) -> Tuple[PreSignature, PreSignature]:
    """Drive one pre-signing session to completion. Returns (P0's, P1's) pre-signature."""
    share, _ = p1.step(first)
    opening, _ = p0.step(share)
    if tamper is not None:
        opening = tamper(opening)
    partial, presig1 = p1.step(opening)
    _, presig0 = p0.step(partial)
    return presig0, presig1


def _bump_partial(opening: PresignOpening) -> PresignOpening:
    return replace(opening, partial=opening.partial + 1)


def claim_dealer(
    dealer: DealerState, party: PartyState, ledgers: SwapLedgers, scenario: Scenario = Scenario.HONEST
) -> Optional[str]:
    """Blinded evaluation, both pre-signatures, then the dealer's claim.

    Returns the id of the dealer's claim tx, or None when the dealer stalls.
    """
    params = dealer.params
    if ledgers.party_chain.height >= params.T_P:
        raise ProtocolAbort("claim window has closed")
    if party.phase is not PartyPhase.FUNDED or dealer.phase is not DealerPhase.FUNDED:
        raise ProtocolStateError("both boxes must be funded before claiming")
    ctx = claim_context(params, dealer.Y_win)

    party.oprf_state, req = request(party.y_gss, params.ell, party.rng)
    party.phase = PartyPhase.GUESSED

    res = blind_eval(dealer.oprf_kp.sk, req)
    dealer.Z, dealer.z = eg_keygen(dealer.rng)
    ct, alpha = eg_enc(dealer.Z, res.res, dealer.rng)
    enc_proof = prove_enc(dealer.oprf_kp.X, dealer.Z, req.req, ct, dealer.oprf_kp.sk, alpha, ctx, dealer.rng)
    if scenario is Scenario.MALFORMED_CT:
        ct = ElGamalCiphertext(ct.c1, ct.c2 * G)
    dealer.phase = DealerPhase.SERVED

    if not verify_enc(party.setup.oprf_pk.X, dealer.Z, req.req, ct, enc_proof, ctx):
        party.phase = PartyPhase.ABORTED
        raise ProtocolAbort("encryption proof rejected")
    party.Z, party.ct, party.enc_proof = dealer.Z, ct, enc_proof

    tx_DP = transfer(party.dealer_box, SingleKey(params.pk_P))
    tx_PD = transfer(dealer.party_box, SingleKey(params.pk_D))
    sid = _session_id(params, dealer.Y_win)

    # dealer -> party under Y_win; the dealer (P1) learns it first
    party_sess, first = presign_start(Role.P0, party.tmp.sk_share, party.tmp.joint_pk, tx_DP.message,
                                      Statement(party.setup.Y_win), party.rng, sid + b"/DP")
    dealer_sess, _ = presign_start(Role.P1, dealer.tmp.sk_share, dealer.tmp.joint_pk, tx_DP.message,
                                   Statement(dealer.Y_win), dealer.rng, sid + b"/DP")
    party.presig_DP, dealer.presig_DP = _run_presign(party_sess, first, dealer_sess)

    # party -> dealer under Z
    tamper = _bump_partial if scenario is Scenario.BAD_PRESIGN_PARTIAL else None
    dealer_sess, first = presign_start(Role.P0, dealer.tmp.sk_share, dealer.tmp.joint_pk, tx_PD.message,
                                       Statement(dealer.Z), dealer.rng, sid + b"/PD")
    party_sess, _ = presign_start(Role.P1, party.tmp.sk_share, party.tmp.joint_pk, tx_PD.message,
                                  Statement(party.Z), party.rng, sid + b"/PD")
    try:
        dealer.presig_PD, party.presig_PD = _run_presign(dealer_sess, first, party_sess, tamper)
    except ProtocolAbort:
        party.phase = PartyPhase.ABORTED
        raise

    party.tx_DP, party.tx_PD, dealer.tx_PD = tx_DP, tx_PD, tx_PD
    party.phase = PartyPhase.DECIDED
    if scenario in (Scenario.WITHHOLD_SIGMA, Scenario.POST_TIMEOUT_CLAIM):
        logger.info("dealer withholds its claim")
        return None
    return dealer_post_claim(dealer, ledgers)


def dealer_post_claim(dealer: DealerState, ledgers: SwapLedgers, enforce_deadline: bool = True) -> str:
    """Complete σ̃_PD with z and post it. Posting reveals z to the party."""
    if dealer.presig_PD is None or dealer.z is None:
        raise ProtocolStateError("dealer holds no pre-signature to complete")
    chain = ledgers.party_chain
    if enforce_deadline and chain.height >= dealer.params.T_P:
        raise ProtocolAbort("dealer missed the claim window")
    sigma = adapt(dealer.presig_PD, dealer.z)
    if not vrfy(dealer.tmp.joint_pk, dealer.tx_PD.message, sigma):
        raise InvariantViolation("adapted claim signature does not verify")
    txid = chain.post(dealer.tx_PD.with_witness(sigma))
    dealer.phase = DealerPhase.CLAIMED
    logger.info("dealer claimed the party's coin at height %d", chain.height)
    return txid


def _find_claim(ledger: LedgerState, tx: LedgerTx) -> Optional[Signature]:
    message = tx.message
    for entry in ledger.read():
        if entry.tx.message == message and entry.tx.witness:
            return entry.tx.witness[0]
    return None


def claim_party(party: PartyState, ledgers: SwapLedgers, outcome: Optional[SwapOutcome] = None) -> Optional[str]:
    """Watch for σ_PD, extract z and try to claim ν_D. Returns the claim tx id on a win."""
    if party.phase is not PartyPhase.DECIDED:
        raise ProtocolStateError(f"party cannot claim in phase {party.phase.value}")
    params = party.params
    sigma_pd = _find_claim(ledgers.party_chain, party.tx_PD)
    if sigma_pd is None:
        return None
    if outcome is not None:
        outcome.record(ledgers.party_chain.height, PARTY, "sigma_pd_seen")

    try:
        z = extract(party.presig_PD, sigma_pd)
    except ExtractionMismatch as e:
        raise InvariantViolation(f"cannot extract z from the posted claim: {e}") from e
    if G ** z != party.Z:
        raise InvariantViolation("extracted witness does not open Z")
    if outcome is not None:
        outcome.record(ledgers.party_chain.height, PARTY, "z_extracted")

    res = OprfResponse(eg_dec(z, party.ct))
    proof = party.setup.cc_proof
    pk_bytes = party.setup.oprf_pk.to_bytes()
    finalized = {
        k: finalize_with_alpha(pk_bytes, party.oprf_state, res, rv.alpha) for k, rv in proof.unopened.items()
    }
    w = recover_witness(proof, finalized, party.setup.Y_win)
    if w is None:
        party.phase = PartyPhase.LOST
        logger.info("party guess %d lost", party.y_gss)
        return None
    party.recovered_w = w

    sigma_dp = adapt(party.presig_DP, w)
    if not vrfy(party.tmp.joint_pk, party.tx_DP.message, sigma_dp):
        raise InvariantViolation("recovered witness does not complete the reward pre-signature")
    chain = ledgers.dealer_chain
    if chain.height >= params.T_D:
        raise ProtocolAbort("reward window has closed")
    try:
        txid = chain.post(party.tx_DP.with_witness(sigma_dp))
    except LedgerRejection as e:
        raise InvariantViolation(f"winning claim rejected before T_D: {e}") from e
    party.phase = PartyPhase.WON
    logger.info("party guess %d won %s", party.y_gss, params.nu_D)
    return txid


def refund(state, ledgers: SwapLedgers) -> str:
    """Spend the owner's lock box back to it through the fallback branch."""
    if isinstance(state, DealerState):
        chain, phase = ledgers.dealer_chain, DealerPhase.REFUNDED
    else:
        chain, phase = ledgers.party_chain, PartyPhase.REFUNDED
    if state.box is None:
        raise ProtocolStateError("nothing to refund")
    tx = transfer(state.box, SingleKey(state.key.pk))
    txid = chain.post(tx.with_witness(sign(state.key, tx.message, state.rng)))
    state.phase = phase
    return txid


def _box_live(ledger: LedgerState, box: Optional[LockBox]) -> bool:
    return box is not None and box.id in ledger.boxes


def _balances(ledgers: SwapLedgers, roles: Dict[str, GroupElement]) -> Dict[str, Fraction]:
    return {role: sum((l.balance(pk) for l in ledgers.distinct()), Fraction(0)) for role, pk in roles.items()}


def _tamper_reveal(proof: CutChooseProof) -> CutChooseProof:
    k = min(proof.unopened)
    unopened = dict(proof.unopened)
    unopened[k] = CcReveal(unopened[k].alpha, unopened[k].s + 1)
    return replace(proof, unopened=unopened)


def _try(outcome: SwapOutcome, name: str, action: Callable[[], str]) -> Optional[str]:
    try:
        txid = action()
    except LedgerRejection as e:
        outcome.rejections[name] = e.reason.value
        return None
    outcome.tx_ids[name] = txid
    return txid


def run_swap(
    params: SwapParams,
    dealer_key: SigKeyPair,
    party_key: SigKeyPair,
    ledgers: SwapLedgers,
    scenario: Scenario = Scenario.HONEST,
    rng: Rng = None,
    seed: Optional[int] = None,
    y_tgt: Optional[int] = None,
    y_gss: Optional[int] = None,
) -> SwapOutcome:
    """Run one swap end to end on the given ledgers and return what happened."""
    scenario = Scenario(scenario)
    outcome = SwapOutcome(scenario, seed)
    roles = {DEALER: dealer_key.pk, PARTY: party_key.pk}
    outcome.initial_balances = _balances(ledgers, roles)
    totals = {l.chain: l.total_value() for l in ledgers.distinct()}
    height = lambda: ledgers.party_chain.height  # noqa: E731

    dealer, msg = dealer_setup(params, dealer_key, rng, y_tgt)
    if scenario is Scenario.MALFORMED_YWIN:
        msg = replace(msg, cc_proof=_tamper_reveal(msg.cc_proof))
    party = new_party(params, party_key, rng, y_gss)
    outcome.y_tgt, outcome.y_gss = dealer.y_tgt, party.y_gss
    outcome.record(height(), DEALER, "setup_sent")

    if not party_check_setup(params, msg):
        party.phase, dealer.phase = PartyPhase.ABORTED, DealerPhase.ABORTED
        outcome.aborted = "setup proof rejected"
        outcome.record(height(), PARTY, "setup_rejected")
        return _finish(outcome, ledgers, roles, totals)
    party.setup = msg

    try:
        run_funding(dealer, party, ledgers)
    except (LedgerRejection, ProtocolAbort) as e:
        outcome.aborted = f"funding failed: {e}"
    else:
        outcome.funded = True
        outcome.record(height(), DEALER, "funded")

    if outcome.funded:
        ledgers.tick()
        try:
            txid = claim_dealer(dealer, party, ledgers, scenario)
        except ProtocolAbort as e:
            outcome.aborted = f"claim aborted: {e.reason}"
            outcome.record(height(), PARTY, "claim_aborted")
            txid = None
        if txid is not None:
            outcome.tx_ids["claim_dealer"] = txid
            outcome.dealer_paid = True
            outcome.record(height(), DEALER, "claimed")

        if scenario is Scenario.PREMATURE_REFUND:
            _try(outcome, "premature_refund", lambda: refund(dealer, ledgers))

        ledgers.tick()
        if outcome.dealer_paid:
            try:
                won = claim_party(party, ledgers, outcome)
            except ProtocolAbort as e:
                outcome.aborted = f"party claim aborted: {e.reason}"
                won = None
            if won is not None:
                outcome.tx_ids["claim_party"] = won
                outcome.party_won = True
                outcome.record(height(), PARTY, "won")
            else:
                outcome.record(height(), PARTY, "lost")

    # a failed funding may still leave the dealer's box locked
    if _box_live(ledgers.party_chain, party.box):
        ledgers.advance_to(params.T_P)
        if _try(outcome, "refund_party", lambda: refund(party, ledgers)):
            outcome.record(height(), PARTY, "refunded")
        if scenario is Scenario.POST_TIMEOUT_CLAIM and dealer.presig_PD is not None:
            if _try(outcome, "late_claim", lambda: dealer_post_claim(dealer, ledgers, enforce_deadline=False)):
                outcome.dealer_paid = True
    if _box_live(ledgers.dealer_chain, dealer.box):
        ledgers.advance_to(params.T_D)
        if _try(outcome, "refund_dealer", lambda: refund(dealer, ledgers)):
            outcome.record(ledgers.dealer_chain.height, DEALER, "refunded")

    if outcome.party_won and not outcome.dealer_paid:
        raise InvariantViolation("party won without the dealer being paid")
    return _finish(outcome, ledgers, roles, totals)


def _finish(
    outcome: SwapOutcome, ledgers: SwapLedgers, roles: Dict[str, GroupElement], totals: Dict[str, Fraction]
) -> SwapOutcome:
    outcome.final_balances = _balances(ledgers, roles)
    for ledger in ledgers.distinct():
        outcome.chain_totals[ledger.chain] = (totals[ledger.chain], ledger.total_value())
        if totals[ledger.chain] != ledger.total_value():
            raise InvariantViolation(f"value on {ledger.chain} changed during the swap")
    logger.info("swap finished (%s): funded=%s dealer_paid=%s party_won=%s",
                outcome.scenario.value, outcome.funded, outcome.dealer_paid, outcome.party_won)
    return outcome
