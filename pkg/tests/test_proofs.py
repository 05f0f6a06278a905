"""
Tests for the sigma protocols and the cut-and-choose proof of Y_win
"""
import numpy as np
import pytest

from algebra import G, U, Scalar, Transcript, fs_subset, make_rng, random_below, random_scalar
from encryption import ElGamalCiphertext, eg_enc, eg_keygen
from errors import InvalidParameter, InvalidStatement, InvalidWitness, MalformedEncoding
from oprf import blind_eval, finalize_with_alpha, guess_base, oprf_keygen, request
from proofs import (
    CcReveal,
    CutChooseProof,
    DleqProof,
    DlProof,
    EncProof,
    HiddenBaseProof,
    OpenProof,
    OrProof,
    OrWfProof,
    cc_transcript,
    proof_size,
    prove_dl,
    prove_dleq,
    prove_enc,
    prove_hidden,
    prove_open,
    prove_or,
    prove_orwf,
    prove_ywin,
    recover_witness,
    simulate_or_branch,
    unopened_indices,
    verify_dl,
    verify_dleq,
    verify_enc,
    verify_hidden,
    verify_open,
    verify_or,
    verify_orwf,
    verify_ywin,
    witness_candidates,
)

from cheating import cheating_ywin_proof, out_of_domain_base

CTX = Transcript(b"test/proofs")


def mutants(data: bytes, count: int, seed: int):
    """Copies of data with one byte flipped at distinct seeded positions."""
    rng = np.random.default_rng(seed)
    positions = rng.choice(len(data), size=min(count, len(data)), replace=False)
    for pos in positions:
        mutated = bytearray(data)
        mutated[pos] ^= 1 << int(rng.integers(0, 8))
        yield bytes(mutated)


def assert_mutants_rejected(proof, decode, verify, count=30, seed=0):
    """Every single-byte mutation either fails to decode or fails to verify."""
    for data in mutants(proof.to_bytes(), count, seed):
        try:
            mutated = decode(data)
        except MalformedEncoding:
            continue
        assert not verify(mutated)


# --- statement builders ----------------------------------------------------------


def dl_case(rng):
    sk = random_scalar(rng)
    pk = G ** sk
    return pk, prove_dl(pk, sk, CTX, rng)


def open_case(rng):
    h = G ** random_scalar(rng)
    sk, omega = random_scalar(rng), random_scalar(rng)
    C = (G ** sk) * (h ** omega)
    return (C, G, h), prove_open(C, G, h, sk, omega, CTX, rng)


def enc_case(rng):
    kp = oprf_keygen(2, rng)
    _, req = request(1, 2, rng)
    res = blind_eval(kp.sk, req)
    Z, _ = eg_keygen(rng)
    ct, alpha = eg_enc(Z, res.res, rng)
    return (kp.X, Z, req.req, ct), prove_enc(kp.X, Z, req.req, ct, kp.sk, alpha, CTX, rng)


def or_case(rng, ell=2, y=1):
    sk, alpha = random_scalar(rng), random_scalar(rng)
    T = guess_base(y, ell) ** (sk * alpha)
    statement = (G ** sk, G ** alpha, T, ell)
    return statement, prove_or(*statement, sk, alpha, y, CTX, rng)


def orwf_case(rng, ell=2, y=2):
    sk, rho = random_scalar(rng), random_scalar(rng)
    statement = (G ** sk, U ** rho, (guess_base(y, ell) ** sk) * (G ** rho), ell)
    return statement, prove_orwf(*statement, sk, rho, y, CTX, rng)


def hidden_case(rng):
    h = G ** random_scalar(rng)
    rho, alpha = random_scalar(rng), random_scalar(rng)
    statement = (h * (G ** rho), h ** alpha, U ** rho, U ** alpha, U ** (rho * alpha))
    return statement, prove_hidden(*statement, h, rho, alpha, CTX, rng)


def ywin_case(rng, lam=4, ell=2, y_tgt=1, batched=False):
    kp = oprf_keygen(lam, rng)
    w = random_scalar(rng)
    proof = prove_ywin(kp, y_tgt, w, G ** w, ell, CTX, rng, batched)
    return kp, w, proof


class TestSchnorrDl:
    """Proof of knowledge of a discrete log"""

    def test_completeness(self, rng):
        for _ in range(10):
            pk, proof = dl_case(rng)
            assert verify_dl(pk, proof, CTX)

    def test_context_binding(self, rng):
        pk, proof = dl_case(rng)
        assert not verify_dl(pk, proof, Transcript(b"other"))

    def test_bad_witness(self, rng):
        with pytest.raises(InvalidWitness):
            prove_dl(G ** 5, Scalar(6), CTX, rng)

    def test_mutations(self, rng):
        pk, proof = dl_case(rng)
        assert_mutants_rejected(proof, DlProof.from_bytes, lambda p: verify_dl(pk, p, CTX))


class TestSchnorrCom:
    """Opening of a two-base commitment"""

    def test_completeness(self, rng):
        for _ in range(10):
            statement, proof = open_case(rng)
            assert verify_open(*statement, proof, CTX)

    def test_bad_witness(self, rng):
        with pytest.raises(InvalidWitness):
            prove_open(G, G, U, Scalar(2), Scalar(3), CTX, rng)

    def test_mutations(self, rng):
        statement, proof = open_case(rng)
        assert_mutants_rejected(proof, OpenProof.from_bytes, lambda p: verify_open(*statement, p, CTX))


class TestSchnorrEnc:
    """Ciphertext encrypts req^sk under Z"""

    def test_completeness(self, rng):
        for _ in range(5):
            statement, proof = enc_case(rng)
            assert verify_enc(*statement, proof, CTX)

    def test_tampered_ciphertext(self, rng):
        (pk, Z, req, ct), proof = enc_case(rng)
        bad = ElGamalCiphertext(ct.c1, ct.c2 * G)
        assert not verify_enc(pk, Z, req, bad, proof, CTX)

    def test_wrong_plaintext_witness(self, rng):
        (pk, Z, req, ct), _ = enc_case(rng)
        with pytest.raises(InvalidWitness):
            prove_enc(pk, Z, req, ct, random_scalar(rng), Scalar(1), CTX, rng)

    def test_non_ciphertext_statement(self, rng):
        (pk, Z, req, ct), proof = enc_case(rng)
        with pytest.raises(InvalidStatement):
            verify_enc(pk, Z, req, (ct.c1, ct.c2), proof, CTX)

    def test_mutations(self, rng):
        statement, proof = enc_case(rng)
        assert_mutants_rejected(proof, EncProof.from_bytes, lambda p: verify_enc(*statement, p, CTX))


class TestDleq:
    """Equality of discrete logs"""

    def test_completeness_and_soundness(self, rng):
        x = random_scalar(rng)
        proof = prove_dleq(G, G ** x, U, U ** x, x, CTX, rng)
        assert verify_dleq(G, G ** x, U, U ** x, proof, CTX)
        assert not verify_dleq(G, G ** x, U, U ** (x + 1), proof, CTX)

    def test_bad_witness(self, rng):
        with pytest.raises(InvalidWitness):
            prove_dleq(G, G ** 2, U, U ** 3, Scalar(2), CTX, rng)

    def test_mutations(self, rng):
        x = random_scalar(rng)
        proof = prove_dleq(G, G ** x, U, U ** x, x, CTX, rng)
        assert_mutants_rejected(proof, DleqProof.from_bytes, lambda p: verify_dleq(G, G ** x, U, U ** x, p, CTX))


class TestOrSchnorr:
    """One-of-2^ell proof that T hides a domain element"""

    @pytest.mark.parametrize("ell,y", [(0, 0), (1, 1), (2, 0), (3, 5)])
    def test_completeness(self, rng, ell, y):
        statement, proof = or_case(rng, ell, y)
        assert len(proof.branches) == 2 ** ell
        assert verify_or(*statement, proof, CTX)

    def test_rejects_out_of_domain_witness(self, rng):
        sk, alpha = random_scalar(rng), random_scalar(rng)
        T = out_of_domain_base(4) ** (sk * alpha)
        with pytest.raises(InvalidWitness):
            prove_or(G ** sk, G ** alpha, T, 2, sk, alpha, 4, CTX, rng)

    def test_rejects_wrong_ell(self, rng):
        statement, proof = or_case(rng, 2, 1)
        pk, A, T, _ = statement
        assert not verify_or(pk, A, T, 3, proof, CTX)

    def test_ell_beyond_cap(self, rng):
        with pytest.raises(InvalidParameter):
            prove_or(G, G, G, 17, Scalar(1), Scalar(1), 0, CTX, rng)

    def test_all_simulated_branches_fail(self, rng):
        sk, alpha = random_scalar(rng), random_scalar(rng)
        T = out_of_domain_base(9) ** (sk * alpha)
        forged = OrProof(tuple(
            simulate_or_branch(G ** sk, G ** alpha, T, guess_base(y, 2), rng) for y in range(4)
        ))
        assert not verify_or(G ** sk, G ** alpha, T, 2, forged, CTX)

    def test_mutations(self, rng):
        statement, proof = or_case(rng)
        assert_mutants_rejected(proof, OrProof.from_bytes, lambda p: verify_or(*statement, p, CTX))


class TestOrWf:
    """One-of-2^ell well-formedness of (U, V)"""

    @pytest.mark.parametrize("ell,y", [(0, 0), (2, 2), (3, 7)])
    def test_completeness(self, rng, ell, y):
        statement, proof = orwf_case(rng, ell, y)
        assert verify_orwf(*statement, proof, CTX)

    def test_bad_witness(self, rng):
        sk, rho = random_scalar(rng), random_scalar(rng)
        with pytest.raises(InvalidWitness):
            prove_orwf(G ** sk, U ** rho, guess_base(1, 2) ** sk, 2, sk, rho, 1, CTX, rng)

    def test_mutations(self, rng):
        statement, proof = orwf_case(rng)
        assert_mutants_rejected(proof, OrWfProof.from_bytes, lambda p: verify_orwf(*statement, p, CTX))


class TestHiddenBase:
    """Y = h^alpha for the hidden h inside X = h g^rho"""

    def test_completeness(self, rng):
        for _ in range(5):
            statement, proof = hidden_case(rng)
            assert verify_hidden(*statement, proof, CTX)

    def test_wrong_exponent_rejected(self, rng):
        (X, Y, U_rho, U_alpha, T_u), proof = hidden_case(rng)
        assert not verify_hidden(X, Y * G, U_rho, U_alpha, T_u, proof, CTX)

    def test_bad_witness(self, rng):
        (X, Y, U_rho, U_alpha, T_u), _ = hidden_case(rng)
        with pytest.raises(InvalidWitness):
            prove_hidden(X, Y, U_rho, U_alpha, T_u, G, Scalar(1), Scalar(1), CTX, rng)

    def test_mutations(self, rng):
        statement, proof = hidden_case(rng)
        assert_mutants_rejected(proof, HiddenBaseProof.from_bytes, lambda p: verify_hidden(*statement, p, CTX))


class TestCutAndChoose:
    """Well-formedness of Y_win, both layouts"""

    @pytest.mark.parametrize("batched", [False, True])
    def test_completeness(self, rng, batched):
        kp, w, proof = ywin_case(rng, batched=batched)
        assert proof.batched is batched
        assert len(proof.opened) == len(proof.unopened) == 2
        assert verify_ywin(kp.public(), G ** w, 2, proof, CTX)

    @pytest.mark.parametrize("batched", [False, True])
    def test_opened_subset_comes_from_the_commitments(self, rng, batched):
        """The helpers the cheating prover reuses pick the same split as the verifier"""
        kp, w, proof = ywin_case(rng, batched=batched)
        t = cc_transcript(CTX, kp.public(), G ** w, 2, proof.commitments)
        opened = fs_subset(t, kp.lam, kp.lam // 2)
        assert set(proof.opened) == opened
        assert unopened_indices(kp.lam, opened) == sorted(proof.unopened)

    @pytest.mark.parametrize("batched", [False, True])
    def test_serialization_round_trip(self, rng, batched):
        kp, w, proof = ywin_case(rng, batched=batched)
        decoded = CutChooseProof.from_bytes(proof.to_bytes())
        assert decoded.to_bytes() == proof.to_bytes()
        assert verify_ywin(kp.public(), G ** w, 2, decoded, CTX)

    def test_wrong_y_win(self, rng):
        kp, w, proof = ywin_case(rng)
        assert not verify_ywin(kp.public(), G ** (w + 1), 2, proof, CTX)

    def test_tampered_reveal(self, rng):
        kp, w, proof = ywin_case(rng)
        k = min(proof.unopened)
        unopened = dict(proof.unopened)
        unopened[k] = CcReveal(unopened[k].alpha, unopened[k].s + 1)
        bad = CutChooseProof(proof.commitments, proof.opened, unopened)
        assert not verify_ywin(kp.public(), G ** w, 2, bad, CTX)

    def test_layout_mismatch(self, rng):
        kp, w, proof = ywin_case(rng, batched=True)
        stripped = CutChooseProof(proof.commitments, proof.opened, proof.unopened)
        assert not verify_ywin(kp.public(), G ** w, 2, stripped, CTX)

    def test_prover_refuses_out_of_domain_target(self, rng):
        kp = oprf_keygen(4, rng)
        w = random_scalar(rng)
        with pytest.raises(InvalidWitness):
            prove_ywin(kp, 4, w, G ** w, 2, CTX, rng)

    def test_prover_refuses_wrong_witness(self, rng):
        kp = oprf_keygen(4, rng)
        with pytest.raises(InvalidWitness):
            prove_ywin(kp, 1, Scalar(3), G ** 4, 2, CTX, rng)

    def test_cheating_dealer_rejected(self, rng):
        for i in range(20):
            kp = oprf_keygen(4, rng)
            w = random_scalar(rng)
            proof = cheating_ywin_proof(kp, 4 + i, w, 2, CTX, rng)
            assert not verify_ywin(kp.public(), G ** w, 2, proof, CTX)

    @pytest.mark.parametrize("batched", [False, True])
    def test_mutations(self, rng, batched):
        kp, w, proof = ywin_case(rng, batched=batched)
        assert_mutants_rejected(
            proof, CutChooseProof.from_bytes, lambda p: verify_ywin(kp.public(), G ** w, 2, p, CTX), count=40
        )

    def test_truncated_encoding(self, rng):
        _, _, proof = ywin_case(rng)
        with pytest.raises(MalformedEncoding):
            CutChooseProof.from_bytes(proof.to_bytes()[:-3])

    def test_batched_is_smaller(self, rng):
        _, _, per_index = ywin_case(rng, lam=8, ell=3, y_tgt=2)
        _, _, batched = ywin_case(rng, lam=8, ell=3, y_tgt=2, batched=True)
        assert proof_size(batched) < proof_size(per_index)


def finalize_all(kp, proof, guess, ell, rng):
    st_, req = request(guess, ell, rng)
    res = blind_eval(kp.sk, req)
    return {k: finalize_with_alpha(kp.pk_bytes, st_, res, rv.alpha) for k, rv in proof.unopened.items()}


class TestWitnessRecovery:
    """Party-side recovery of w_win from the unopened instances"""

    @pytest.mark.parametrize("batched", [False, True])
    def test_winning_guess(self, rng, batched):
        kp, w, proof = ywin_case(rng, y_tgt=3, batched=batched)
        finalized = finalize_all(kp, proof, 3, 2, rng)
        assert recover_witness(proof, finalized, G ** w) == w
        assert set(witness_candidates(proof, finalized).values()) == {w}

    def test_losing_guess(self, rng):
        kp, w, proof = ywin_case(rng, y_tgt=3)
        for guess in range(3):
            assert recover_witness(proof, finalize_all(kp, proof, guess, 2, rng), G ** w) is None

    def test_random_targets(self):
        rng = make_rng(31)
        for _ in range(10):
            y_tgt = random_below(2, rng)
            kp, w, proof = ywin_case(rng, lam=2, ell=1, y_tgt=y_tgt)
            assert recover_witness(proof, finalize_all(kp, proof, y_tgt, 1, rng), G ** w) == w
            assert recover_witness(proof, finalize_all(kp, proof, 1 - y_tgt, 1, rng), G ** w) is None


SIGMA_CASES = [
    (dl_case, DlProof.from_bytes, verify_dl),
    (open_case, OpenProof.from_bytes, verify_open),
    (enc_case, EncProof.from_bytes, verify_enc),
    (or_case, OrProof.from_bytes, verify_or),
    (orwf_case, OrWfProof.from_bytes, verify_orwf),
    (hidden_case, HiddenBaseProof.from_bytes, verify_hidden),
]


@pytest.mark.slow
class TestProofAcceptance:
    """Hundreds of honest, mutated and cheating runs"""

    @pytest.mark.parametrize("case,decode,verify", SIGMA_CASES)
    def test_hundred_honest_and_mutated(self, case, decode, verify):
        rng = make_rng(500)
        for _ in range(100):
            statement, proof = case(rng)
            args = statement if isinstance(statement, tuple) else (statement,)
            assert verify(*args, proof, CTX)
        assert_mutants_rejected(proof, decode, lambda p: verify(*args, p, CTX), count=100)

    def test_hundred_cut_and_choose(self):
        rng = make_rng(501)
        for _ in range(100):
            kp, w, proof = ywin_case(rng)
            assert verify_ywin(kp.public(), G ** w, 2, proof, CTX)
        assert_mutants_rejected(
            proof, CutChooseProof.from_bytes, lambda p: verify_ywin(kp.public(), G ** w, 2, p, CTX), count=100
        )

    def test_cheat_detection_lambda_16(self):
        rng = make_rng(502)
        for i in range(500):
            kp = oprf_keygen(16, rng)
            w = random_scalar(rng)
            proof = cheating_ywin_proof(kp, 16 + i, w, 4, CTX, rng)
            assert not verify_ywin(kp.public(), G ** w, 4, proof, CTX)

    def test_recovery_five_hundred_runs(self):
        rng = make_rng(503)
        for _ in range(500):
            kp, w, proof = ywin_case(rng, lam=4, ell=1, y_tgt=1)
            finalized = finalize_all(kp, proof, 1, 1, rng)
            assert recover_witness(proof, finalized, G ** w) == w
            assert set(witness_candidates(proof, finalized).values()) == {w}
            assert recover_witness(proof, finalize_all(kp, proof, 0, 1, rng), G ** w) is None
