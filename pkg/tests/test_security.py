"""
Security tests for ProSwap
Tests that secrets stay secret, cheaters are caught and no party loses coins
"""
import logging
from pathlib import Path

import pytest

from adaptor import keygen
from algebra import G, Transcript, make_rng, random_scalar
from experiments import RunConfig, run_scenario, swap_once
from oprf import oprf_keygen
from proofs import verify_ywin
from swap import Scenario, SwapParams, dealer_setup

from cheating import cheating_ywin_proof

PROJECT_ROOT = Path(__file__).parent.parent


class TestSecurity:
    """Test security aspects of the protocol and the tooling around it"""

    def test_env_file_not_committed(self):
        """Verify .env is in .gitignore so local settings never leak"""
        gitignore_content = (PROJECT_ROOT / ".gitignore").read_text()
        assert ".env" in gitignore_content, ".env should be listed in .gitignore"

    def test_no_secrets_in_logs(self, caplog):
        """Dealer witness, OPRF key and target never reach the log"""
        rng = make_rng(21)
        dealer_key, party_key = keygen(rng), keygen(rng)
        params = SwapParams(8, 2, 4, dealer_key.pk, party_key.pk, 20, 10)
        with caplog.at_level(logging.DEBUG):
            dealer, _ = dealer_setup(params, dealer_key, rng)
            swap_once(RunConfig(ell=2, lam=4, seed=21), seed=21)
        secrets = [
            str(int(dealer.w_win)), hex(int(dealer.w_win)), dealer.w_win.to_bytes().hex(),
            str(int(dealer.oprf_kp.sk)), dealer.oprf_kp.sk.to_bytes().hex(),
            str(int(dealer_key.sk)), dealer_key.sk.to_bytes().hex(),
        ]
        for record in caplog.records:
            message = record.getMessage()
            for secret in secrets:
                assert secret not in message, "secret value leaked in logs"

    def test_reprs_hide_randomness(self):
        """Session reprs leave the generator out"""
        rng = make_rng(1)
        key = keygen(rng)
        params = SwapParams(8, 1, 2, key.pk, key.pk, 20, 10)
        dealer, _ = dealer_setup(params, key, rng)
        assert "Generator" not in repr(dealer)


class TestCheatingDealer:
    """A dealer who hides w_win behind an unreachable target is rejected"""

    def test_out_of_domain_target_rejected(self):
        rng = make_rng(99)
        ctx = Transcript(b"security")
        for i in range(10):
            kp = oprf_keygen(4, rng)
            w = random_scalar(rng)
            proof = cheating_ywin_proof(kp, 4 + i, w, 2, ctx, rng)
            assert not verify_ywin(kp.public(), G ** w, 2, proof, ctx)


class TestNoLoss:
    """Every scripted misbehaviour leaves the honest side whole"""

    @pytest.mark.parametrize("scenario", [s for s in Scenario if s is not Scenario.HONEST])
    def test_adversary_scenarios(self, scenario):
        verdict = run_scenario(RunConfig(ell=1, lam=2, trials=3, seed=4242), scenario)
        assert verdict.passed, verdict.failures

    @pytest.mark.parametrize("scenario", [Scenario.WITHHOLD_SIGMA, Scenario.MALFORMED_CT])
    def test_cross_chain_scenarios(self, scenario):
        verdict = run_scenario(RunConfig(ell=1, lam=2, trials=2, seed=11, cross_chain=True), scenario)
        assert verdict.passed, verdict.failures

    def test_dealer_cannot_claim_after_refund(self):
        outcome, ledgers = swap_once(RunConfig(ell=1, lam=2, seed=5), scenario=Scenario.POST_TIMEOUT_CLAIM, seed=5)
        assert outcome.rejections["late_claim"] == "unknown-outpoint"
        assert len(ledgers.dealer_chain.read()) == 4
