"""Pure rules of the escrow-brokered question-and-answer protocol.

Three things live here: validation of the economic terms a transaction is
created with, the lifecycle state machine that orders who may do what and
when, and the settlement arithmetic that drains the escrow across the
outcome branches. Every function is a pure function of its inputs; parties,
persistence, and transport are other modules' problems.

Two protocol variants exist:

* post-hoc claim: the asker inspects the delivered answer, then files a
  claim (correct/wrong) with evidence before the deadline; the broker
  approves or denies it. Residues that may not flow back to any party go
  to a charity sink.
* prespecified procedure: the verification procedure is fixed before the
  answer is accepted and executed by the broker, so the asker plays no
  adjudication role, no charity sink is needed, and the asker is made
  whole when the answer is wrong.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from datetime import datetime
from typing import TYPE_CHECKING

from .money import require_amount

if TYPE_CHECKING:
    from .adjudication import CategorySpec


# --- Errors ---------------------------------------------------------------

class ProtocolError(Exception):
    """Base for all rule violations; `category` is the machine-readable name."""

    category = "ProtocolError"


class SplitMismatch(ProtocolError):
    category = "SplitMismatch"


class NonPositiveAmount(ProtocolError):
    category = "NonPositiveAmount"


class DeadlineInPast(ProtocolError):
    category = "DeadlineInPast"


class VariantStakeMismatch(ProtocolError):
    category = "VariantStakeMismatch"


class IllegalTransition(ProtocolError):
    category = "IllegalTransition"


class DeadlineExceeded(ProtocolError):
    category = "DeadlineExceeded"


class UnreachableOutcome(ProtocolError):
    category = "UnreachableOutcome"


# --- Domain enums ----------------------------------------------------------

class Variant(enum.Enum):
    POST_HOC_CLAIM = "post_hoc_claim"
    PRESPECIFIED_PROCEDURE = "prespecified_procedure"


class Phase(enum.Enum):
    DRAFT = "Draft"
    TERMS_AGREED = "TermsAgreed"
    Q_FUNDED = "AskerFunded"
    FULLY_FUNDED = "FullyFunded"
    ANSWER_DELIVERED = "AnswerDelivered"
    CLAIM_SUBMITTED = "ClaimSubmitted"
    SETTLED_CORRECT = "SettledCorrect"
    SETTLED_WRONG = "SettledWrong"
    SETTLED_EXPIRED = "SettledExpired"


TERMINAL_PHASES = frozenset(
    {Phase.SETTLED_CORRECT, Phase.SETTLED_WRONG, Phase.SETTLED_EXPIRED}
)

EXPIRABLE_PHASES = frozenset({Phase.ANSWER_DELIVERED, Phase.CLAIM_SUBMITTED})


class Verdict(enum.Enum):
    CORRECT = "Correct"
    WRONG = "Wrong"


class Outcome(enum.Enum):
    VERIFIED_CORRECT = "VerifiedCorrect"
    VERIFIED_WRONG = "VerifiedWrong"
    EXPIRED = "Expired"


PHASE_FOR_OUTCOME = {
    Outcome.VERIFIED_CORRECT: Phase.SETTLED_CORRECT,
    Outcome.VERIFIED_WRONG: Phase.SETTLED_WRONG,
    Outcome.EXPIRED: Phase.SETTLED_EXPIRED,
}

OUTCOME_FOR_PHASE = {phase: outcome for outcome, phase in PHASE_FOR_OUTCOME.items()}

VERDICT_OUTCOME = {
    Verdict.CORRECT: Outcome.VERIFIED_CORRECT,
    Verdict.WRONG: Outcome.VERIFIED_WRONG,
}


class EventKind(enum.Enum):
    AGREE_TERMS = "AgreeTerms"
    Q_DEPOSIT = "AskerDeposit"
    A_STAKE_AND_ANSWER = "StakeAndAnswer"
    DELIVER_ANSWER = "DeliverAnswer"
    SUBMIT_CLAIM = "SubmitClaim"
    X_APPROVE_CLAIM = "ApproveClaim"
    X_DENY_CLAIM = "DenyClaim"
    DEADLINE_PASSED = "DeadlinePassed"
    # Post-delivery settlement path of the prespecified-procedure variant;
    # the claim/approve/deny events are illegal there.
    PROCEDURE_RESULT = "ProcedureResult"


EVENTS_WITH_VERDICT = frozenset({EventKind.SUBMIT_CLAIM, EventKind.PROCEDURE_RESULT})


@dataclass(frozen=True)
class ProtocolEvent:
    kind: EventKind
    verdict: Verdict | None = None

    def __post_init__(self):
        if self.kind in EVENTS_WITH_VERDICT and self.verdict is None:
            raise ValueError(f"{self.kind.value} event requires a verdict")
        if self.kind not in EVENTS_WITH_VERDICT and self.verdict is not None:
            raise ValueError(f"{self.kind.value} event carries no verdict")


# --- Core data -------------------------------------------------------------

@dataclass(frozen=True)
class TransactionParams:
    """The agreed economic terms, in integer cents.

    The asker pays `price`, split in full between the broker's fixed fee and
    the answerer's reward, and posts `asker_deposit` to back her duty to
    report. The answerer risks `answerer_stake`. `deadline` is the UTC
    instant by which correctness must be established.
    """

    price: int
    asker_deposit: int
    answerer_stake: int
    broker_fee: int
    answerer_reward: int
    deadline: datetime
    variant: Variant = Variant.POST_HOC_CLAIM


def validate_params(params: TransactionParams, *, now: datetime) -> TransactionParams:
    """Check every structural invariant of the terms; return them unchanged.

    Raises NonPositiveAmount, SplitMismatch, VariantStakeMismatch, or
    DeadlineInPast. `now` is the transaction's creation instant.
    """
    for name in ("price", "asker_deposit", "answerer_stake", "broker_fee", "answerer_reward"):
        value = getattr(params, name)
        require_amount(value, name)
        if value == 0:
            raise NonPositiveAmount(f"{name} must be > 0")
    if params.price != params.broker_fee + params.answerer_reward:
        raise SplitMismatch(
            f"price {params.price} != broker_fee {params.broker_fee}"
            f" + answerer_reward {params.answerer_reward}"
        )
    if params.variant is Variant.PRESPECIFIED_PROCEDURE:
        # With no charity sink, making the asker whole on a wrong answer
        # balances only if the stake equals the fee.
        if params.answerer_stake != params.broker_fee:
            raise VariantStakeMismatch(
                f"prespecified-procedure variant requires answerer_stake"
                f" ({params.answerer_stake}) == broker_fee ({params.broker_fee})"
            )
    if params.deadline.tzinfo is None:
        raise ValueError("deadline must be timezone-aware (UTC)")
    if now.tzinfo is None:
        raise ValueError("now must be timezone-aware (UTC)")
    if params.deadline <= now:
        raise DeadlineInPast(f"deadline {params.deadline.isoformat()} is not after {now.isoformat()}")
    return params


@dataclass(frozen=True)
class QuestionSpec:
    question_text: str
    answer_category: "CategorySpec"
    clarifying_paragraphs: tuple[str, ...] = ()

    def __post_init__(self):
        if self.answer_category is None:
            raise ValueError("answer_category is required")


@dataclass(frozen=True)
class TransactionState:
    """Lifecycle position of one exchange. Immutable; `advance` returns a copy."""

    phase: Phase
    variant: Variant
    deadline: datetime
    history: tuple[tuple[EventKind, datetime], ...] = ()
    # Verdict carried by the claim currently awaiting the broker's decision.
    pending_verdict: Verdict | None = None

    @property
    def settled(self) -> bool:
        return self.phase in TERMINAL_PHASES

    @property
    def outcome(self) -> Outcome | None:
        return OUTCOME_FOR_PHASE.get(self.phase)


def initial_state(params: TransactionParams) -> TransactionState:
    return TransactionState(phase=Phase.DRAFT, variant=params.variant, deadline=params.deadline)


def advance(state: TransactionState, event: ProtocolEvent, now: datetime) -> TransactionState:
    """Apply one protocol event, returning the successor state.

    The full transition graph (claim variant):

        Draft -> TermsAgreed -> AskerFunded -> FullyFunded -> AnswerDelivered
        AnswerDelivered -> ClaimSubmitted          (SubmitClaim, now <= deadline)
        ClaimSubmitted  -> SettledCorrect/Wrong    (ApproveClaim, per claimed verdict)
        ClaimSubmitted  -> AnswerDelivered         (DenyClaim; resubmission allowed)
        AnswerDelivered | ClaimSubmitted -> SettledExpired  (DeadlinePassed, now > deadline)

    In the procedure variant, AnswerDelivered settles via ProcedureResult and
    the claim events (and expiry) are illegal. Settled phases are terminal.
    """
    phase, kind = state.phase, event.kind
    if phase in TERMINAL_PHASES:
        raise IllegalTransition(f"{phase.value} is terminal; {kind.value} rejected")

    def step(new_phase: Phase, pending: Verdict | None = None) -> TransactionState:
        return replace(
            state,
            phase=new_phase,
            history=state.history + ((kind, now),),
            pending_verdict=pending,
        )

    if kind is EventKind.AGREE_TERMS and phase is Phase.DRAFT:
        return step(Phase.TERMS_AGREED)
    if kind is EventKind.Q_DEPOSIT and phase is Phase.TERMS_AGREED:
        return step(Phase.Q_FUNDED)
    if kind is EventKind.A_STAKE_AND_ANSWER and phase is Phase.Q_FUNDED:
        return step(Phase.FULLY_FUNDED)
    if kind is EventKind.DELIVER_ANSWER and phase is Phase.FULLY_FUNDED:
        return step(Phase.ANSWER_DELIVERED)

    if kind is EventKind.SUBMIT_CLAIM and phase is Phase.ANSWER_DELIVERED:
        if state.variant is not Variant.POST_HOC_CLAIM:
            raise IllegalTransition("claims are illegal under a prespecified procedure")
        if now > state.deadline:
            raise DeadlineExceeded(
                f"claim at {now.isoformat()} is after deadline {state.deadline.isoformat()}"
            )
        return step(Phase.CLAIM_SUBMITTED, pending=event.verdict)

    if kind is EventKind.X_APPROVE_CLAIM and phase is Phase.CLAIM_SUBMITTED:
        assert state.pending_verdict is not None
        return step(PHASE_FOR_OUTCOME[VERDICT_OUTCOME[state.pending_verdict]])
    if kind is EventKind.X_DENY_CLAIM and phase is Phase.CLAIM_SUBMITTED:
        return step(Phase.ANSWER_DELIVERED)

    if kind is EventKind.DEADLINE_PASSED and phase in EXPIRABLE_PHASES:
        if state.variant is not Variant.POST_HOC_CLAIM:
            raise IllegalTransition("expiry is unreachable under a prespecified procedure")
        if now <= state.deadline:
            raise IllegalTransition(f"deadline {state.deadline.isoformat()} has not passed")
        return step(Phase.SETTLED_EXPIRED)

    if kind is EventKind.PROCEDURE_RESULT and phase is Phase.ANSWER_DELIVERED:
        if state.variant is not Variant.PRESPECIFIED_PROCEDURE:
            raise IllegalTransition("procedure results apply only to the procedure variant")
        return step(PHASE_FOR_OUTCOME[VERDICT_OUTCOME[event.verdict]])

    raise IllegalTransition(f"{kind.value} is illegal in phase {phase.value}")


# --- Settlement ------------------------------------------------------------

@dataclass(frozen=True)
class PayoutSchedule:
    """Per-beneficiary disbursements draining one transaction's escrow."""

    to_asker: int
    to_answerer: int
    to_broker: int
    to_charity: int

    def total(self) -> int:
        return self.to_asker + self.to_answerer + self.to_broker + self.to_charity


def escrowed_inflow(params: TransactionParams) -> int:
    """Total escrow held at settlement time.

    In the procedure variant the asker's deposit has already been returned
    at delivery, so only price + stake remain in escrow.
    """
    if params.variant is Variant.POST_HOC_CLAIM:
        return params.price + params.asker_deposit + params.answerer_stake
    return params.price + params.answerer_stake


def settle(params: TransactionParams, outcome: Outcome) -> PayoutSchedule:
    """Compute the disbursements for a fixed outcome. Exact; never rounds.

    Claim variant (escrow = price + deposit + stake):
      correct -> deposit back to asker, stake + reward to answerer, fee to
                 broker, any residue to charity (zero when reward = price - fee)
      wrong   -> deposit back to asker, fee to broker, everything else to charity
      expired -> stake back to answerer, fee to broker, rest to charity

    Procedure variant (escrow = price + stake; deposit already returned):
      correct -> stake + reward to answerer, fee to broker, nothing to charity
      wrong   -> full price back to asker, fee to broker, nothing to charity
      expired -> unreachable
    """
    p, dq = params.price, params.asker_deposit
    sa, f, ra = params.answerer_stake, params.broker_fee, params.answerer_reward
    inflow = escrowed_inflow(params)

    if params.variant is Variant.POST_HOC_CLAIM:
        if outcome is Outcome.VERIFIED_CORRECT:
            schedule = PayoutSchedule(dq, sa + ra, f, inflow - dq - sa - ra - f)
        elif outcome is Outcome.VERIFIED_WRONG:
            schedule = PayoutSchedule(dq, 0, f, p - f + sa)
        else:
            schedule = PayoutSchedule(0, sa, f, p - f + dq)
    else:
        if outcome is Outcome.VERIFIED_CORRECT:
            schedule = PayoutSchedule(0, sa + ra, f, 0)
        elif outcome is Outcome.VERIFIED_WRONG:
            schedule = PayoutSchedule(p, 0, f, 0)
        else:
            raise UnreachableOutcome("expiry is unreachable under a prespecified procedure")

    assert schedule.total() == inflow, "settlement must conserve the escrow"
    return schedule


# --- Exhaustive lifecycle safety check --------------------------------------

@dataclass
class SafetyViolation:
    sequence: tuple[str, ...]
    detail: str


@dataclass
class SafetyReport:
    variant: Variant
    max_len: int
    strings_covered: int
    nodes_visited: int
    violations: list[SafetyViolation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def exhaustive_safety_check(variant: Variant, max_len: int = 10) -> SafetyReport:
    """Cover every event string up to `max_len` and confirm lifecycle safety.

    Each event in a string is attempted either before or after the deadline
    (time only moves forward); rejected events leave the state unchanged and
    the string continues. Because `advance` depends only on (phase, pending
    verdict, variant) and the side of the deadline, strings that reach the
    same configuration share all continuations, so memoizing on
    (configuration, remaining length) covers the full string space exactly.

    Checks: a settled transaction never settles again, and no settlement
    happens unless the asker-funding and stake events both succeeded earlier.
    """
    from datetime import timedelta, timezone

    deadline = datetime(2030, 1, 1, tzinfo=timezone.utc)
    before, after = deadline - timedelta(seconds=1), deadline + timedelta(seconds=1)

    base_events = [
        ProtocolEvent(EventKind.AGREE_TERMS),
        ProtocolEvent(EventKind.Q_DEPOSIT),
        ProtocolEvent(EventKind.A_STAKE_AND_ANSWER),
        ProtocolEvent(EventKind.DELIVER_ANSWER),
        ProtocolEvent(EventKind.SUBMIT_CLAIM, Verdict.CORRECT),
        ProtocolEvent(EventKind.SUBMIT_CLAIM, Verdict.WRONG),
        ProtocolEvent(EventKind.X_APPROVE_CLAIM),
        ProtocolEvent(EventKind.X_DENY_CLAIM),
        ProtocolEvent(EventKind.DEADLINE_PASSED),
        ProtocolEvent(EventKind.PROCEDURE_RESULT, Verdict.CORRECT),
        ProtocolEvent(EventKind.PROCEDURE_RESULT, Verdict.WRONG),
    ]

    # Node: (phase, pending_verdict, past_deadline, asker_funded, staked, settled)
    start = (Phase.DRAFT, None, False, False, False, False)
    report = SafetyReport(variant=variant, max_len=max_len, strings_covered=0, nodes_visited=0)
    seen_nodes: set[tuple] = set()
    transitions: dict[tuple, list[tuple]] = {}

    def successors(node: tuple) -> list[tuple]:
        cached = transitions.get(node)
        if cached is not None:
            return cached
        phase, pending, past, funded, staked, settled = node
        succs = []
        for event in base_events:
            # DeadlinePassed asserts the deadline has passed; other events may
            # arrive on either side, but never earlier than a previous event.
            times = [after] if event.kind is EventKind.DEADLINE_PASSED or past else [before, after]
            for now in times:
                state = TransactionState(
                    phase=phase, variant=variant, deadline=deadline, pending_verdict=pending
                )
                now_past = past or now > deadline
                try:
                    new = advance(state, event, now)
                except ProtocolError:
                    succs.append((phase, pending, now_past, funded, staked, settled))
                    continue
                new_funded = funded or event.kind is EventKind.Q_DEPOSIT
                new_staked = staked or event.kind is EventKind.A_STAKE_AND_ANSWER
                if new.phase in TERMINAL_PHASES:
                    if settled:
                        report.violations.append(
                            SafetyViolation((event.kind.value,), "second settlement accepted")
                        )
                    if not (funded and staked):
                        report.violations.append(
                            SafetyViolation(
                                (event.kind.value,),
                                f"settlement reached without full funding (phase {phase.value})",
                            )
                        )
                succs.append(
                    (new.phase, new.pending_verdict, now_past, new_funded, new_staked,
                     new.phase in TERMINAL_PHASES or settled)
                )
        transitions[node] = succs
        return succs

    # Count the distinct event strings covered: every string corresponds to a
    # path through `successors`, legal and rejected steps alike.
    counts: dict[tuple[tuple, int], int] = {}

    def count_strings(node: tuple, remaining: int) -> int:
        if remaining == 0:
            return 1
        key = (node, remaining)
        if key in counts:
            return counts[key]
        seen_nodes.add(node)
        total = sum(count_strings(s, remaining - 1) for s in successors(node))
        counts[key] = total
        return total

    total = sum(count_strings(start, k) for k in range(1, max_len + 1))
    report.strings_covered = total
    report.nodes_visited = len(seen_nodes)
    return report
