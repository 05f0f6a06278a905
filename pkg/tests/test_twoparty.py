"""
Tests for two-party key generation and two-party pre-signing
"""
from dataclasses import replace
from unittest.mock import patch

import pytest

from adaptor import Statement, adapt, extract, pvrfy, vrfy
from algebra import G, Scalar, random_scalar
from errors import ProtocolAbort, ProtocolStateError
from proofs import DlProof
from twoparty import (
    DkgCommit,
    DkgPhase,
    DkgShare,
    PresignOpening,
    PresignPartial,
    PresignPhase,
    Role,
    dkg_start,
    dkg_step,
    presign_start,
    presign_step,
)

TX = b"spend lock box 0"


def run_dkg(rng, context=b"sid"):
    s0, commit = dkg_start(Role.P0, rng, context)
    s1, nothing = dkg_start(Role.P1, rng, context)
    assert nothing is None
    s1, share1, out1 = dkg_step(s1, commit)
    assert out1 is None
    s0, share0, out0 = dkg_step(s0, share1)
    s1, last, out1 = dkg_step(s1, share0)
    assert last is None
    return (s0, out0), (s1, out1)


def run_presign(rng, Y, context=b"sid", tamper_p0=None, tamper_p1=None):
    (_, k0), (_, k1) = run_dkg(rng, context)
    p0, commit = presign_start(Role.P0, k0.sk_share, k0.joint_pk, TX, Y, rng, context)
    p1, nothing = presign_start(Role.P1, k1.sk_share, k1.joint_pk, TX, Y, rng, context)
    assert nothing is None
    p1, share, _ = presign_step(p1, commit)
    p0, opening, _ = presign_step(p0, share)
    if tamper_p0:
        opening = tamper_p0(opening)
    p1, partial, presig1 = presign_step(p1, opening)
    if tamper_p1:
        partial = tamper_p1(partial)
    p0, _, presig0 = presign_step(p0, partial)
    return k0.joint_pk, presig0, presig1, (p0, p1)


class TestKeyGeneration:
    """Commit-then-reveal DLog key generation"""

    def test_joint_key_agrees(self, rng):
        (s0, out0), (s1, out1) = run_dkg(rng)
        assert out0.joint_pk == out1.joint_pk
        assert out0.joint_pk == G ** (out0.sk_share + out1.sk_share)
        assert s0.phase is DkgPhase.DONE and s1.phase is DkgPhase.DONE

    def test_p0_speaks_first_with_a_commitment(self, rng):
        _, commit = dkg_start(Role.P0, rng)
        assert isinstance(commit, DkgCommit)

    def test_invalid_pok_from_p1(self, rng):
        s0, commit = dkg_start(Role.P0, rng)
        s1, _ = dkg_start(Role.P1, rng)
        _, share1, _ = dkg_step(s1, commit)
        forged = DkgShare(share1.pk, DlProof(share1.proof.R, share1.proof.z + 1))
        with pytest.raises(ProtocolAbort):
            dkg_step(s0, forged)
        assert s0.phase is DkgPhase.ABORTED
        with pytest.raises(ProtocolStateError):
            dkg_step(s0, share1)

    def test_patched_prover_is_caught(self, rng):
        s0, commit = dkg_start(Role.P0, rng)
        s1, _ = dkg_start(Role.P1, rng)
        with patch("twoparty.prove_dl", return_value=DlProof(G, Scalar(1))) as fake:
            _, share1, _ = dkg_step(s1, commit)
        fake.assert_called_once()
        with pytest.raises(ProtocolAbort, match="proof of knowledge"):
            dkg_step(s0, share1)

    def test_p0_equivocation(self, rng):
        _, commit = dkg_start(Role.P0, rng)
        s1, _ = dkg_start(Role.P1, rng)
        dkg_step(s1, commit)

        other, _ = dkg_start(Role.P0, rng)
        other_share = other._share()
        with pytest.raises(ProtocolAbort, match="commitment"):
            dkg_step(s1, other_share)
        assert s1.phase is DkgPhase.ABORTED

    def test_context_separates_sessions(self, rng):
        s0, commit = dkg_start(Role.P0, rng, b"session-a")
        s1, _ = dkg_start(Role.P1, rng, b"session-b")
        _, share1, _ = dkg_step(s1, commit)
        with pytest.raises(ProtocolAbort):
            dkg_step(s0, share1)

    def test_out_of_order_message(self, rng):
        s0, commit = dkg_start(Role.P0, rng)
        with pytest.raises(ProtocolStateError):
            dkg_step(s0, commit)
        s1, _ = dkg_start(Role.P1, rng)
        with pytest.raises(ProtocolStateError):
            dkg_step(s1, DkgShare(G, DlProof(G, Scalar(1))))

    def test_start_twice(self, rng):
        s0, _ = dkg_start(Role.P0, rng)
        with pytest.raises(ProtocolStateError):
            s0.start()

    def test_role_peer(self):
        assert Role.P0.peer is Role.P1
        assert Role.P1.peer is Role.P0


class TestPresign:
    """Joint pre-signatures under the joint key"""

    def test_both_parties_hold_the_same_presignature(self, rng):
        Y = Statement(G ** 77)
        joint_pk, presig0, presig1, (p0, p1) = run_presign(rng, Y)
        assert presig0 == presig1
        assert pvrfy(joint_pk, TX, Y, presig0)
        assert p0.phase is PresignPhase.DONE and p1.phase is PresignPhase.DONE

    def test_adapt_and_extract_under_joint_key(self, rng):
        y = random_scalar(rng)
        Y = Statement(G ** y)
        joint_pk, presig, _, _ = run_presign(rng, Y)
        sig = adapt(presig, y)
        assert vrfy(joint_pk, TX, sig)
        assert extract(presig, sig) == y

    def test_identity_statement_gives_plain_signature(self, rng):
        joint_pk, presig, _, _ = run_presign(rng, Statement.identity())
        assert vrfy(joint_pk, TX, adapt(presig, Scalar(0)))

    def test_bad_partial_from_p0(self, rng):
        def bump(opening: PresignOpening) -> PresignOpening:
            return replace(opening, partial=opening.partial + 1)

        with pytest.raises(ProtocolAbort, match="does not verify"):
            run_presign(rng, Statement(G ** 5), tamper_p0=bump)

    def test_bad_partial_from_p1(self, rng):
        with pytest.raises(ProtocolAbort):
            run_presign(rng, Statement(G ** 5), tamper_p1=lambda m: PresignPartial(m.partial + 1))

    def test_bad_nonce_pok_from_p0(self, rng):
        def forge(opening: PresignOpening) -> PresignOpening:
            share = opening.share
            return replace(opening, share=DkgShare(share.pk, DlProof(share.proof.R, share.proof.z + 1)))

        with pytest.raises(ProtocolAbort):
            run_presign(rng, Statement(G ** 5), tamper_p0=forge)

    def test_finished_session_refuses_messages(self, rng):
        _, _, _, (p0, p1) = run_presign(rng, Statement(G ** 5))
        with pytest.raises(ProtocolStateError):
            presign_step(p0, PresignPartial(Scalar(1)))
        with pytest.raises(ProtocolStateError):
            presign_step(p1, PresignPartial(Scalar(1)))

    def test_unexpected_message_kind(self, rng):
        (_, k0), _ = run_dkg(rng)
        p0, _ = presign_start(Role.P0, k0.sk_share, k0.joint_pk, TX, Statement(G), rng)
        with pytest.raises(ProtocolStateError):
            presign_step(p0, PresignPartial(Scalar(1)))

    def test_messages_serialize(self, rng):
        (_, k0), (_, k1) = run_dkg(rng)
        p0, commit = presign_start(Role.P0, k0.sk_share, k0.joint_pk, TX, Statement(G), rng)
        p1, _ = presign_start(Role.P1, k1.sk_share, k1.joint_pk, TX, Statement(G), rng)
        _, share, _ = presign_step(p1, commit)
        assert DkgShare.from_bytes(share.to_bytes()) == share
        _, opening, _ = presign_step(p0, share)
        assert len(opening.to_bytes()) > len(share.to_bytes())
