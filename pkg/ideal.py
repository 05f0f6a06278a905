# ideal.py
"""Reference model of the ideal probabilistic swap.

A trusted party freezes ν_D of the dealer's coins and one of the party's,
pays the dealer one coin when it claims (fixing the win bit b at that moment),
pays the party ν_D if b = 1, and hands frozen coins back after the timeouts.
Tests and the adversary command compare real runs against this model.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Mapping, Optional

from errors import ProtocolStateError

DEALER = "dealer"
PARTY = "party"


@dataclass
class IdealSwap:
    nu_D: Fraction
    balances: Dict[str, Fraction]
    frozen: Dict[str, Fraction] = field(default_factory=lambda: {DEALER: Fraction(0), PARTY: Fraction(0)})
    phase: str = "setup"
    b: Optional[bool] = None

    def fund(self) -> None:
        if self.phase != "setup":
            raise ProtocolStateError(f"cannot fund in phase {self.phase}")
        for role, amount in ((DEALER, self.nu_D), (PARTY, Fraction(1))):
            if self.balances[role] < amount:
                raise ProtocolStateError(f"{role} cannot cover {amount}")
            self.balances[role] -= amount
            self.frozen[role] += amount
        self.phase = "funded"

    def claim_dealer(self, b: bool) -> None:
        if self.phase != "funded" or not self.frozen[PARTY]:
            raise ProtocolStateError("dealer can only claim a funded, unrefunded swap")
        self.frozen[PARTY] -= 1
        self.balances[DEALER] += 1
        self.b = b
        self.phase = "claimed"

    def claim_party(self) -> None:
        if self.phase != "claimed":
            raise ProtocolStateError("party can only claim after the dealer")
        if self.b and self.frozen[DEALER]:
            self.balances[PARTY] += self.frozen[DEALER]
            self.frozen[DEALER] = Fraction(0)
        self.phase = "done"

    def unfreeze(self, role: str) -> None:
        self.balances[role] += self.frozen[role]
        self.frozen[role] = Fraction(0)


def expected_balances(
    initial: Mapping[str, Fraction], nu_D: Fraction, funded: bool, dealer_paid: bool, party_won: bool
) -> Dict[str, Fraction]:
    """Terminal per-role balances the ideal swap produces for the observed outcome."""
    ideal = IdealSwap(Fraction(nu_D), {role: Fraction(v) for role, v in initial.items()})
    if funded:
        ideal.fund()
        if dealer_paid:
            ideal.claim_dealer(party_won)
            ideal.claim_party()
        ideal.unfreeze(PARTY)
        ideal.unfreeze(DEALER)
    return dict(ideal.balances)
