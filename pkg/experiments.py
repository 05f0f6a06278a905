# experiments.py
"""Seeded experiment drivers behind the CLI: Monte-Carlo win rates,
scripted adversary runs checked against the ideal model, proof benchmarks
and building-block timings."""
import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from adaptor import SigKeyPair, Statement, adapt, extract, keygen, psign, pvrfy, sign, vrfy
from algebra import G, Rng, Transcript, make_rng, random_below, random_scalar
from encryption import eg_dec, eg_enc, eg_keygen
from errors import InvalidParameter, InvariantViolation
from ideal import expected_balances
from ledger import LedgerState
from oprf import blind_eval, finalize_with_alpha, oprf_keygen, request
from proofs import (
    MAX_OR_ELL,
    proof_size,
    prove_dl,
    prove_enc,
    prove_ywin,
    verify_dl,
    verify_enc,
    verify_ywin,
)
from swap import Scenario, SwapLedgers, SwapOutcome, SwapParams, run_swap

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunConfig:
    ell: int = 3
    lam: int = 16
    nu: Fraction = Fraction(8)
    t_p: int = 10
    t_d: int = 20
    seed: Optional[int] = None
    trials: int = 1
    scenario: str = Scenario.HONEST.value
    cross_chain: bool = False
    output: Optional[Path] = None
    batched: bool = False

    def __post_init__(self):
        object.__setattr__(self, "nu", Fraction(self.nu))
        if self.trials < 1:
            raise InvalidParameter(f"trials must be at least 1, got {self.trials}")
        if self.seed is not None and not 0 <= self.seed < 2 ** 64:
            raise InvalidParameter("seed must be a 64-bit unsigned integer")
        Scenario(self.scenario)
        # same checks as the swap itself, with throwaway keys
        self.params(G, G)

    def params(self, pk_D, pk_P) -> SwapParams:
        return SwapParams(self.nu, self.ell, self.lam, pk_D, pk_P, self.t_d, self.t_p, self.batched)


def make_ledgers(cfg: RunConfig, dealer: SigKeyPair, party: SigKeyPair) -> SwapLedgers:
    """Genesis ledgers holding exactly the coins each side needs."""
    if cfg.cross_chain:
        return SwapLedgers(
            LedgerState.genesis([(dealer.pk, cfg.nu), (party.pk, 0)], chain="dealer-chain"),
            LedgerState.genesis([(dealer.pk, 0), (party.pk, 1)], chain="party-chain"),
        )
    return SwapLedgers.single(LedgerState.genesis([(dealer.pk, cfg.nu), (party.pk, 1)]))


def swap_once(
    cfg: RunConfig,
    rng: Rng = None,
    scenario: Optional[Scenario] = None,
    seed: Optional[int] = None,
    y_tgt: Optional[int] = None,
    y_gss: Optional[int] = None,
) -> Tuple[SwapOutcome, SwapLedgers]:
    """Fresh keys and ledgers, then one full swap."""
    if rng is None and seed is not None:
        rng = make_rng(seed)
    dealer, party = keygen(rng), keygen(rng)
    ledgers = make_ledgers(cfg, dealer, party)
    outcome = run_swap(
        cfg.params(dealer.pk, party.pk), dealer, party, ledgers,
        scenario=Scenario(scenario or cfg.scenario), rng=rng, seed=seed, y_tgt=y_tgt, y_gss=y_gss,
    )
    return outcome, ledgers


def _child_seed(seq: np.random.SeedSequence) -> int:
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def trial_seeds(seed: Optional[int], count: int) -> List[int]:
    """Independent per-trial seeds; the same (seed, count) always gives the same list."""
    return [_child_seed(child) for child in np.random.SeedSequence(seed).spawn(count)]


@dataclass(frozen=True)
class TrialRow:
    trial: int
    seed: int
    y_tgt: int
    y_gss: int
    dealer_paid: bool
    party_won: bool


def _trial(args: Tuple[RunConfig, int, int]) -> TrialRow:
    cfg, index, seed = args
    outcome, _ = swap_once(cfg, scenario=Scenario.HONEST, seed=seed)
    if not outcome.dealer_paid:
        raise InvariantViolation(f"honest trial {index} ended without the dealer being paid: {outcome.aborted}")
    return TrialRow(index, seed, outcome.y_tgt, outcome.y_gss, outcome.dealer_paid, outcome.party_won)


@dataclass
class MonteCarloResult:
    ell: int
    trials: int
    wins: int
    p: float
    p_hat: float
    ci_low: float
    ci_high: float
    rows: List[TrialRow] = field(default_factory=list, repr=False)

    @property
    def within_bound(self) -> bool:
        return self.ci_low <= self.p_hat <= self.ci_high


def three_sigma(p: float, trials: int) -> Tuple[float, float]:
    sigma = math.sqrt(p * (1 - p) / trials)
    return max(0.0, p - 3 * sigma), min(1.0, p + 3 * sigma)


def montecarlo(cfg: RunConfig, workers: int = 1) -> MonteCarloResult:
    """Run cfg.trials honest swaps and compare the win frequency with 2^-ell."""
    if workers < 1:
        raise InvalidParameter("workers must be at least 1")
    jobs = [(cfg, i, s) for i, s in enumerate(trial_seeds(cfg.seed, cfg.trials))]
    if workers == 1:
        rows = [_trial(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_trial, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    wins = sum(r.party_won for r in rows)
    p = 1.0 / 2 ** cfg.ell
    low, high = three_sigma(p, cfg.trials)
    result = MonteCarloResult(cfg.ell, cfg.trials, wins, p, wins / cfg.trials, low, high, rows)
    logger.info("montecarlo ell=%d: %d/%d wins (p_hat=%.4f, band [%.4f, %.4f])",
                cfg.ell, wins, cfg.trials, result.p_hat, low, high)
    return result


@dataclass
class ScenarioVerdict:
    scenario: Scenario
    passed: bool
    runs: int
    failures: List[str] = field(default_factory=list)


def _expectations(scenario: Scenario, outcome: SwapOutcome) -> List[str]:
    problems = []

    def need(cond: bool, text: str):
        if not cond:
            problems.append(text)

    refunds = {"refund_party", "refund_dealer"}
    if scenario is Scenario.HONEST:
        need(outcome.dealer_paid and outcome.aborted is None, "honest run did not complete")
        need(outcome.party_won == (outcome.y_gss == outcome.y_tgt), "win bit disagrees with the guess")
    elif scenario is Scenario.MALFORMED_YWIN:
        need(not outcome.funded, "party funded against a malformed setup proof")
    elif scenario in (Scenario.WITHHOLD_SIGMA, Scenario.MALFORMED_CT, Scenario.BAD_PRESIGN_PARTIAL):
        need(outcome.funded and not outcome.dealer_paid, "dealer was paid")
        need(refunds <= set(outcome.tx_ids), "both sides should have refunded")
    elif scenario is Scenario.PREMATURE_REFUND:
        need(outcome.rejections.get("premature_refund") == "timelock", "early refund was not stopped by the timelock")
    elif scenario is Scenario.POST_TIMEOUT_CLAIM:
        need(not outcome.dealer_paid, "late claim went through")
        need(outcome.rejections.get("late_claim") == "unknown-outpoint", "late claim was not rejected")
        need("refund_party" in outcome.tx_ids, "party did not refund")
    return problems


def check_outcome(outcome: SwapOutcome, nu: Fraction) -> List[str]:
    """Properties every run must satisfy, whatever the scenario."""
    problems = _expectations(outcome.scenario, outcome)
    if outcome.party_won and not outcome.dealer_paid:
        problems.append("party won without paying")
    ideal = expected_balances(outcome.initial_balances, nu, outcome.funded, outcome.dealer_paid, outcome.party_won)
    if outcome.final_balances != ideal:
        problems.append(f"balances {outcome.final_balances} differ from the ideal {ideal}")
    for chain, (before, after) in outcome.chain_totals.items():
        if before != after:
            problems.append(f"value on {chain} changed from {before} to {after}")
    return problems


def run_scenario(cfg: RunConfig, scenario: Optional[Scenario] = None) -> ScenarioVerdict:
    scenario = Scenario(scenario or cfg.scenario)
    verdict = ScenarioVerdict(scenario, True, cfg.trials)
    for i, seed in enumerate(trial_seeds(cfg.seed, cfg.trials)):
        try:
            outcome, _ = swap_once(cfg, scenario=scenario, seed=seed)
            problems = check_outcome(outcome, cfg.nu)
        except InvariantViolation as e:
            problems = [f"invariant violation: {e}"]
        if problems:
            verdict.passed = False
            verdict.failures.extend(f"run {i} (seed {seed}): {p}" for p in problems)
    level = logging.INFO if verdict.passed else logging.ERROR
    logger.log(level, "scenario %s: %s over %d runs", scenario.value, "pass" if verdict.passed else "FAIL", cfg.trials)
    return verdict


@dataclass(frozen=True)
class BenchRow:
    ell: int
    prove_s: float
    verify_s: float
    proof_bytes: int
    size_kb: float


def bench(ell_values: Iterable[int], lam: int = 80, batched: bool = True, rng: Rng = None) -> List[BenchRow]:
    """Prove and verify the cut-and-choose statement once per ell."""
    ell_values = list(ell_values)
    for ell in ell_values:
        if not 0 <= ell <= MAX_OR_ELL:
            raise InvalidParameter(f"ell must be in [0, {MAX_OR_ELL}], got {ell}")
    rows = []
    for ell in ell_values:
        kp = oprf_keygen(lam, rng)
        y_tgt = random_below(2 ** ell, rng)
        w = random_scalar(rng)
        ctx = Transcript(b"proswap/bench").absorb(b"ell", ell)
        start = time.perf_counter()
        proof = prove_ywin(kp, y_tgt, w, G ** w, ell, ctx, rng, batched)
        prove_s = time.perf_counter() - start
        start = time.perf_counter()
        ok = verify_ywin(kp.public(), G ** w, ell, proof, ctx)
        verify_s = time.perf_counter() - start
        if not ok:
            raise InvariantViolation(f"benchmark proof for ell={ell} failed to verify")
        size = proof_size(proof)
        rows.append(BenchRow(ell, round(prove_s, 4), round(verify_s, 4), size, round(size / 1000, 1)))
        logger.info("bench ell=%d lam=%d: prove %.3fs verify %.3fs %d bytes", ell, lam, prove_s, verify_s, size)
    return rows


@dataclass(frozen=True)
class MicroRow:
    operation: str
    mean_ms: float


def _time(op: Callable[[], object], repeat: int) -> float:
    start = time.perf_counter()
    for _ in range(repeat):
        op()
    return (time.perf_counter() - start) * 1000 / repeat


def microbench(repeat: int = 10, rng: Rng = None) -> List[MicroRow]:
    """Mean wall time of each building block."""
    if repeat < 1:
        raise InvalidParameter("repeat must be at least 1")
    kp = keygen(rng)
    ctx = Transcript(b"proswap/microbench")
    dl = prove_dl(kp.pk, kp.sk, ctx, rng)

    oprf = oprf_keygen(2, rng)
    pk_bytes = oprf.public().to_bytes()
    st, req = request(1, 4, rng)
    res = blind_eval(oprf.sk, req)

    Z, z = eg_keygen(rng)
    ct, alpha = eg_enc(Z, res.res, rng)
    enc = prove_enc(oprf.X, Z, req.req, ct, oprf.sk, alpha, ctx, rng)

    msg = b"microbench"
    y = random_scalar(rng)
    Y = Statement(G ** y)
    presig = psign(kp, msg, Y, rng)
    sig = adapt(presig, y)

    ops: Dict[str, Callable[[], object]] = {
        "dkg prove": lambda: prove_dl(kp.pk, kp.sk, ctx, rng),
        "dkg verify": lambda: verify_dl(kp.pk, dl, ctx),
        "oprf request": lambda: request(1, 4, rng),
        "oprf blind-eval": lambda: blind_eval(oprf.sk, req),
        "oprf finalize": lambda: finalize_with_alpha(pk_bytes, st, res, oprf.alphas[0]),
        "elgamal enc": lambda: eg_enc(Z, res.res, rng),
        "elgamal dec": lambda: eg_dec(z, ct),
        "enc prove": lambda: prove_enc(oprf.X, Z, req.req, ct, oprf.sk, alpha, ctx, rng),
        "enc verify": lambda: verify_enc(oprf.X, Z, req.req, ct, enc, ctx),
        "psign": lambda: psign(kp, msg, Y, rng),
        "pvrfy": lambda: pvrfy(kp.pk, msg, Y, presig),
        "adapt": lambda: adapt(presig, y),
        "extract": lambda: extract(presig, sig),
        "sign": lambda: sign(kp, msg, rng),
        "vrfy": lambda: vrfy(kp.pk, msg, sig),
    }
    return [MicroRow(name, round(_time(op, repeat), 3)) for name, op in ops.items()]


def write_csv(path: Path, rows: Sequence) -> None:
    """Dataclass rows to CSV, header from the first row's field names."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        if not rows:
            return
        writer = csv.DictWriter(f, fieldnames=list(asdict(rows[0])))
        writer.writeheader()
        for row in rows:
            writer.writerow(asdict(row))
    logger.info("wrote %d rows to %s", len(rows), path)
