"""Expected-payoff calculators for the three parties (plus the charity sink).

Two independent routes to every expectation: a closed-form calculation over
the outcome distribution, and a brute-force enumeration of the full outcome
tree. Both are exact rational arithmetic, so they must agree to equality,
not within a tolerance. Payoffs are nets: what each party walks away with
minus what they put in, so the four components always sum to zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .protocol import Outcome, PayoutSchedule, TransactionParams, Variant, settle

Probability = Union[int, float, str, Fraction]


def _as_fraction(value: Probability, what: str) -> Fraction:
    # Floats go through their decimal literal so 0.9 means 9/10, not the
    # nearest binary float; expectations stay exactly rational.
    frac = Fraction(str(value)) if isinstance(value, float) else Fraction(value)
    if not 0 <= frac <= 1:
        raise ValueError(f"{what} must lie in [0, 1], got {value!r}")
    return frac


@dataclass(frozen=True)
class BeliefProfile:
    """Subjective probabilities driving the outcome distribution.

    p_correct: the answerer's own probability that her answer is right.
    q_verifies: the asker completes a convincing claim before the deadline.
    x_approves: the broker finds the evidence sufficient.
    """

    p_correct: Fraction
    q_verifies: Fraction = Fraction(1)
    x_approves: Fraction = Fraction(1)

    @classmethod
    def of(cls, p_correct: Probability, q_verifies: Probability = 1,
           x_approves: Probability = 1) -> "BeliefProfile":
        return cls(_as_fraction(p_correct, "p_correct"),
                   _as_fraction(q_verifies, "q_verifies"),
                   _as_fraction(x_approves, "x_approves"))


class Party:
    ASKER = "asker"
    ANSWERER = "answerer"
    BROKER = "broker"
    CHARITY = "charity"
    ALL = (ASKER, ANSWERER, BROKER, CHARITY)


@dataclass(frozen=True)
class PayoffVector:
    """Signed nets per beneficiary for one settled outcome; sums to zero."""

    asker: int
    answerer: int
    broker: int
    charity: int

    def get(self, party: str) -> int:
        return getattr(self, party)

    def total(self) -> int:
        return self.asker + self.answerer + self.broker + self.charity


def _payoffs_from_schedule(params: TransactionParams, schedule: PayoutSchedule) -> PayoffVector:
    """Net each party's disbursement against what they paid in.

    In the procedure variant the asker's deposit went in and came back before
    settlement, so her inflow nets to the price alone.
    """
    asker_in = params.price
    if params.variant is Variant.POST_HOC_CLAIM:
        asker_in += params.asker_deposit
    vector = PayoffVector(
        asker=schedule.to_asker - asker_in,
        answerer=schedule.to_answerer - params.answerer_stake,
        broker=schedule.to_broker,
        charity=schedule.to_charity,
    )
    assert vector.total() == 0
    return vector


def outcome_payoffs(params: TransactionParams) -> dict[Outcome, PayoffVector]:
    """Per-outcome signed nets, derived purely from the settlement schedules."""
    outcomes = (
        (Outcome.VERIFIED_CORRECT, Outcome.VERIFIED_WRONG, Outcome.EXPIRED)
        if params.variant is Variant.POST_HOC_CLAIM
        else (Outcome.VERIFIED_CORRECT, Outcome.VERIFIED_WRONG)
    )
    return {outcome: _payoffs_from_schedule(params, settle(params, outcome))
            for outcome in outcomes}


def outcome_distribution(params: TransactionParams,
                         beliefs: BeliefProfile) -> dict[Outcome, Fraction]:
    """Probability of each outcome under the beliefs.

    Claim variant: a settled verdict needs the asker to verify and the broker
    to approve; otherwise the deadline passes. Procedure variant: the
    committed procedure always runs, so the verdict tracks correctness alone.
    """
    p = beliefs.p_correct
    if params.variant is Variant.PRESPECIFIED_PROCEDURE:
        return {Outcome.VERIFIED_CORRECT: p, Outcome.VERIFIED_WRONG: 1 - p}
    reaches_verdict = beliefs.q_verifies * beliefs.x_approves
    return {
        Outcome.VERIFIED_CORRECT: p * reaches_verdict,
        Outcome.VERIFIED_WRONG: (1 - p) * reaches_verdict,
        Outcome.EXPIRED: 1 - reaches_verdict,
    }


def expected_payoff(params: TransactionParams, beliefs: BeliefProfile,
                    party: str) -> Fraction:
    """Closed-form expected net for one party, in exact cents."""
    payoffs = outcome_payoffs(params)
    return sum(
        (prob * payoffs[outcome].get(party)
         for outcome, prob in outcome_distribution(params, beliefs).items()),
        Fraction(0),
    )


def brute_force_ev(params: TransactionParams, beliefs: BeliefProfile,
                   party: str) -> Fraction:
    """Independent oracle: walk every leaf of the outcome tree.

    Branches on (answer actually correct) x (asker verifies) x (broker
    approves) with exact leaf probabilities, maps each leaf to its outcome,
    and nets payoffs from the settlement schedules. Must equal
    expected_payoff exactly.
    """
    payoffs = outcome_payoffs(params)
    p, qv, xa = beliefs.p_correct, beliefs.q_verifies, beliefs.x_approves
    total = Fraction(0)
    if params.variant is Variant.PRESPECIFIED_PROCEDURE:
        for correct, prob in ((True, p), (False, 1 - p)):
            outcome = Outcome.VERIFIED_CORRECT if correct else Outcome.VERIFIED_WRONG
            total += prob * payoffs[outcome].get(party)
        return total
    for correct, p_c in ((True, p), (False, 1 - p)):
        for verifies, p_v in ((True, qv), (False, 1 - qv)):
            for approves, p_a in ((True, xa), (False, 1 - xa)):
                if verifies and approves:
                    outcome = (Outcome.VERIFIED_CORRECT if correct
                               else Outcome.VERIFIED_WRONG)
                else:
                    outcome = Outcome.EXPIRED
                total += p_c * p_v * p_a * payoffs[outcome].get(party)
    return total


def entry_threshold(params: TransactionParams) -> Fraction:
    """The correctness probability above which entering pays for the answerer.

    Solves 0 = p * reward - (1 - p) * stake, assuming the claim path always
    completes: p* = stake / (stake + reward).
    """
    return Fraction(params.answerer_stake,
                    params.answerer_stake + params.answerer_reward)


def sweep_expected_payoffs(params: TransactionParams, party: str = Party.ANSWERER,
                           steps: int = 100, q_verifies: Probability = 1,
                           x_approves: Probability = 1) -> list[tuple[Fraction, Fraction]]:
    """Expected net for `party` across a grid of p values; rows for plotting."""
    rows = []
    for k in range(steps + 1):
        p = Fraction(k, steps)
        beliefs = BeliefProfile.of(p, q_verifies, x_approves)
        rows.append((p, expected_payoff(params, beliefs, party)))
    return rows
