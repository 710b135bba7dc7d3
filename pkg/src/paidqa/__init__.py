"""Escrow-brokered paid Q&A engine.

A three-party exchange: an asker pays a price and posts a reporting deposit,
an answerer stakes money on her answer, and a broker holds everything in
escrow, forwards the answer pseudonymously, adjudicates the correctness
claim, and settles — with any residue the rules forbid returning to a party
going to a charity sink.
"""

from .incentives import (
    BeliefProfile,
    Party,
    PayoffVector,
    brute_force_ev,
    entry_threshold,
    expected_payoff,
    outcome_payoffs,
)
from .ledger import AccountKind, Ledger, Memo, Posting
from .protocol import (
    Outcome,
    PayoutSchedule,
    Phase,
    ProtocolError,
    TransactionParams,
    TransactionState,
    Variant,
    Verdict,
    advance,
    escrowed_inflow,
    initial_state,
    settle,
    validate_params,
)

__all__ = [
    "AccountKind",
    "BeliefProfile",
    "Ledger",
    "Memo",
    "Outcome",
    "Party",
    "PayoffVector",
    "PayoutSchedule",
    "Phase",
    "Posting",
    "ProtocolError",
    "TransactionParams",
    "TransactionState",
    "Variant",
    "Verdict",
    "advance",
    "brute_force_ev",
    "entry_threshold",
    "escrowed_inflow",
    "expected_payoff",
    "initial_state",
    "outcome_payoffs",
    "settle",
    "validate_params",
]

__version__ = "0.1.0"
