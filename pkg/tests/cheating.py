"""Dishonest provers used by the soundness tests.

These reuse cc_transcript, simulate_or_branch and unopened_indices from proofs,
so they stay in step with how the verifier picks the opened subset.
"""
from typing import Dict

from algebra import G, Rng, Scalar, Transcript, fs_subset, hash_to_group, random_scalar
from oprf import OprfKeyPair, guess_base, hash_p
from proofs import (
    CcCommitment,
    CcOpening,
    CcReveal,
    CutChooseProof,
    OrProof,
    cc_transcript,
    simulate_or_branch,
    unopened_indices,
)


def out_of_domain_base(y: int):
    """Base for a target the honest encoder refuses to produce."""
    return hash_to_group(b"out-of-domain" + y.to_bytes(8, "big"))


def cheating_ywin_proof(
    kp: OprfKeyPair, y_bad: int, w_win: Scalar, ell: int, ctx: Transcript, rng: Rng = None
) -> CutChooseProof:
    """Every instance hides w_win behind an out-of-domain target.

    Unopened instances are internally consistent, so only the OR proofs on the
    opened side can catch the lie. With no real branch available, all 2^ell
    branches are simulated and their challenges will not add up.
    """
    pk = kp.public()
    pk_bytes = pk.to_bytes()
    base = out_of_domain_base(y_bad)
    rs = [random_scalar(rng) for _ in range(kp.lam)]
    Ts = [base ** (kp.sk * a) for a in kp.alphas]
    commitments = tuple(CcCommitment(hash_p(pk_bytes, T) + r, G ** r, A) for T, r, A in zip(Ts, rs, kp.A))
    t = cc_transcript(ctx, pk, G ** w_win, ell, commitments)
    opened_idx = fs_subset(t, kp.lam, kp.lam // 2)

    opened: Dict[int, CcOpening] = {}
    for j in sorted(opened_idx):
        i = j - 1
        branches = tuple(
            simulate_or_branch(kp.X, kp.A[i], Ts[i], guess_base(y_hat, ell), rng) for y_hat in range(2 ** ell)
        )
        opened[j] = CcOpening(rs[i], Ts[i], OrProof(branches))
    unopened = {k: CcReveal(kp.alphas[k - 1], rs[k - 1] + w_win) for k in unopened_indices(kp.lam, opened_idx)}
    return CutChooseProof(commitments, opened, unopened)
