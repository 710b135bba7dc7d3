"""The broker service: role-scoped operations over the protocol engine.

Event-sourced: every successful operation appends exactly one record to the
log and then applies it to in-memory state; replaying the log from empty
rebuilds that state identically, which is what makes settlement atomic —
a crash anywhere leaves either a complete record (the operation happened,
ledger postings and all) or no record (it did not).

Pseudonymity: each party gets an opaque per-transaction pseudonym at the
moment they join. Everything a counterparty ever sees — receipts, status
views, delivered answers — carries pseudonyms only; the identity mapping
is readable solely through the broker's views.
"""

from __future__ import annotations

import secrets
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable

from . import adjudication as adj
from .config import Identity, ServiceConfig
from .eventlog import EventLog, EventRecord
from .incentives import outcome_payoffs
from .ledger import AccountKind, Ledger, Memo
from .protocol import (
    EXPIRABLE_PHASES,
    EventKind,
    Outcome,
    PayoutSchedule,
    Phase,
    ProtocolError,
    ProtocolEvent,
    QuestionSpec,
    TransactionParams,
    TransactionState,
    Variant,
    Verdict,
    advance,
    initial_state,
    settle,
    validate_params,
)


class ServiceError(ProtocolError):
    category = "ServiceError"


class RoleViolation(ServiceError):
    category = "RoleViolation"


class UnknownToken(ServiceError):
    category = "UnknownToken"


class UnknownTransaction(ServiceError):
    category = "UnknownTransaction"


class FundingMismatch(ServiceError):
    category = "FundingMismatch"


class CategoryCheckFailed(ServiceError):
    category = "CategoryCheckFailed"

    def __init__(self, check: adj.CategoryCheck):
        super().__init__(
            f"answer outside the agreed category"
            f" (missing: {list(check.missing)}, mismatched: {list(check.mismatched)})"
        )
        self.check = check


class ProcedureMissing(ServiceError):
    category = "ProcedureMissing"


class HashMismatch(ServiceError):
    category = "HashMismatch"


ROLE_ASKER, ROLE_ANSWERER, ROLE_BROKER = "asker", "answerer", "broker"


@dataclass
class Exchange:
    """Live state of one brokered transaction inside the service."""

    txn_id: str
    created_at: str
    params: TransactionParams
    question: QuestionSpec
    procedure: adj.VerificationProcedure | None
    state: TransactionState
    asker_id: str
    pseudonyms: dict[str, str]                 # identity id -> per-txn pseudonym
    answerer_id: str | None = None
    price_paid: bool = False
    deposit_paid: bool = False
    answer: adj.Answer | None = None
    claims: list[adj.Claim] = field(default_factory=list)
    outcome: Outcome | None = None
    schedule: PayoutSchedule | None = None

    @property
    def phase(self) -> Phase:
        return self.state.phase

    def pseudonym_of(self, identity_id: str) -> str | None:
        return self.pseudonyms.get(identity_id)


def _params_to_dict(params: TransactionParams) -> dict:
    return {
        "price": params.price,
        "asker_deposit": params.asker_deposit,
        "answerer_stake": params.answerer_stake,
        "broker_fee": params.broker_fee,
        "answerer_reward": params.answerer_reward,
        "deadline": params.deadline.isoformat(),
        "variant": params.variant.value,
    }


def params_from_dict(raw: dict) -> TransactionParams:
    return TransactionParams(
        price=int(raw["price"]),
        asker_deposit=int(raw["asker_deposit"]),
        answerer_stake=int(raw["answerer_stake"]),
        broker_fee=int(raw["broker_fee"]),
        answerer_reward=int(raw["answerer_reward"]),
        deadline=parse_ts(raw["deadline"]),
        variant=Variant(raw["variant"]),
    )


def parse_ts(text: str) -> datetime:
    return datetime.fromisoformat(text.replace("Z", "+00:00"))


def _schedule_to_dict(schedule: PayoutSchedule) -> dict:
    return {"to_asker": schedule.to_asker, "to_answerer": schedule.to_answerer,
            "to_broker": schedule.to_broker, "to_charity": schedule.to_charity}


class ExchangeService:
    """Single-process broker engine; every mutation flows through the event log."""

    def __init__(self, config: ServiceConfig,
                 clock: Callable[[], datetime] | None = None,
                 token_factory: Callable[[], str] | None = None,
                 test_hook: Callable[[str], None] | None = None):
        self.config = config
        self.clock = clock or (lambda: datetime.now(timezone.utc))
        self._new_token = token_factory or (lambda: secrets.token_hex(6))
        self._test_hook = test_hook or (lambda point: None)
        self._lock = threading.RLock()
        self.txns: dict[str, Exchange] = {}
        self.ledger = Ledger()
        self._seq = 0
        for record in EventLog.read_records(config.log_path):
            self._apply(record)
            self._seq = record.seq
        self._log = EventLog(config.log_path, fsync=config.fsync)

    def close(self) -> None:
        self._log.close()

    # -- auth ------------------------------------------------------------------

    def authenticate(self, token: str | None) -> Identity:
        identity = self.config.tokens.get(token or "")
        if identity is None:
            raise UnknownToken("unknown or missing bearer token")
        return identity

    def _require(self, identity: Identity, role: str) -> Identity:
        if identity.role != role:
            raise RoleViolation(f"{identity.role} may not perform a {role} operation")
        return identity

    def _get(self, txn_id: str) -> Exchange:
        txn = self.txns.get(txn_id)
        if txn is None:
            raise UnknownTransaction(f"no such transaction: {txn_id}")
        return txn

    def _party_account(self, identity_id: str) -> str:
        return f"party:{identity_id}"

    # -- commit pipeline ---------------------------------------------------------

    def _commit(self, kind: str, txn_id: str | None, actor: str | None,
                payload: dict) -> EventRecord:
        record = EventRecord(seq=self._seq + 1, kind=kind, txn_id=txn_id,
                             actor=actor, ts=self.clock().isoformat(), payload=payload)
        self._test_hook("before_append")
        self._log.append(record)
        self._test_hook("after_append")
        self._apply(record)
        self._seq = record.seq
        return record

    def _apply(self, record: EventRecord) -> None:
        handler = getattr(self, f"_apply_{record.kind}")
        handler(record)

    # -- operations ----------------------------------------------------------------

    def create_transaction(self, token: str, question: dict, params: TransactionParams,
                           procedure: adj.VerificationProcedure | None = None) -> dict:
        """Asker opens a transaction with agreed terms and an answer category."""
        with self._lock:
            identity = self._require(self.authenticate(token), ROLE_ASKER)
            now = self.clock()
            validate_params(params, now=now)
            category = adj.CategorySpec.from_dict(question["answer_category"])
            if params.variant is Variant.PRESPECIFIED_PROCEDURE and procedure is None:
                raise ProcedureMissing("the procedure variant needs its procedure up front")
            if params.variant is Variant.POST_HOC_CLAIM and procedure is not None:
                raise ProcedureMissing("claims variant does not take a procedure")
            if procedure is not None and procedure.hash_name != self.config.hash_name:
                raise HashMismatch(
                    f"procedure uses {procedure.hash_name}; this service is configured"
                    f" for {self.config.hash_name}")
            txn_id = f"txn-{self._new_token()}"
            while txn_id in self.txns:
                txn_id = f"txn-{self._new_token()}"
            pseudonym = f"asker-{self._new_token()}"
            record = self._commit("txn_created", txn_id, pseudonym, {
                "asker_id": identity.id,
                "asker_pseudonym": pseudonym,
                "params": _params_to_dict(params),
                "question_text": question.get("question_text", ""),
                "answer_category": category.to_dict(),
                "clarifying_paragraphs": list(question.get("clarifying_paragraphs", [])),
                "procedure": procedure.to_dict() if procedure else None,
            })
            return {"txn_id": txn_id, "seq": record.seq, "phase": self._get(txn_id).phase.value,
                    "pseudonym": pseudonym}

    def _apply_txn_created(self, record: EventRecord) -> None:
        p = record.payload
        params = params_from_dict(p["params"])
        state = advance(initial_state(params), ProtocolEvent(EventKind.AGREE_TERMS),
                        parse_ts(record.ts))
        txn = Exchange(
            txn_id=record.txn_id,
            created_at=record.ts,
            params=params,
            question=QuestionSpec(
                question_text=p["question_text"],
                answer_category=adj.CategorySpec.from_dict(p["answer_category"]),
                clarifying_paragraphs=tuple(p.get("clarifying_paragraphs", [])),
            ),
            procedure=(adj.VerificationProcedure.from_dict(p["procedure"])
                       if p.get("procedure") else None),
            state=state,
            asker_id=p["asker_id"],
            pseudonyms={p["asker_id"]: p["asker_pseudonym"]},
        )
        self.txns[txn.txn_id] = txn
        self.ledger.register_account(self._party_account(txn.asker_id), AccountKind.ASKER)

    def fund(self, token: str, txn_id: str, amount: int) -> dict:
        """Asker escrows the price, then the deposit, in that order, exactly."""
        with self._lock:
            identity = self.authenticate(token)
            txn = self._get(txn_id)
            if identity.role != ROLE_ASKER or identity.id != txn.asker_id:
                raise RoleViolation("only this transaction's asker funds it")
            if txn.phase is not Phase.TERMS_AGREED:
                raise FundingMismatch(f"funding not accepted in phase {txn.phase.value}")
            expected, memo = (
                (txn.params.price, Memo.Q_PAYMENT) if not txn.price_paid
                else (txn.params.asker_deposit, Memo.Q_DEPOSIT)
            )
            if amount != expected:
                raise FundingMismatch(
                    f"expected {memo.value} of {expected} cents, got {amount}")
            record = self._commit("asker_funded", txn_id, txn.pseudonym_of(identity.id), {
                "amount": amount, "memo": memo.value,
            })
            return {"txn_id": txn_id, "seq": record.seq, "memo": memo.value,
                    "phase": txn.phase.value, "escrow": self.ledger.escrow_balance(txn_id)}

    def _apply_asker_funded(self, record: EventRecord) -> None:
        txn = self.txns[record.txn_id]
        memo = Memo(record.payload["memo"])
        self.ledger.post_deposit(txn.txn_id, self._party_account(txn.asker_id),
                                 record.payload["amount"], memo)
        if memo is Memo.Q_PAYMENT:
            txn.price_paid = True
        else:
            txn.deposit_paid = True
        if txn.price_paid and txn.deposit_paid:
            txn.state = advance(txn.state, ProtocolEvent(EventKind.Q_DEPOSIT),
                                parse_ts(record.ts))

    def submit_answer(self, token: str, txn_id: str, body: dict) -> dict:
        """Answerer stakes and answers in one move, gated on the category check.

        A failing check rejects the answer before any money moves and leaves
        no trace in the log.
        """
        with self._lock:
            identity = self._require(self.authenticate(token), ROLE_ANSWERER)
            txn = self._get(txn_id)
            if txn.phase is not Phase.Q_FUNDED:
                raise adj.WrongPhase(f"answers are not accepted in phase {txn.phase.value}")
            now = self.clock()
            answer = adj.Answer(txn_id=txn_id, body=body, submitted_at=now)
            check = adj.check_category(answer, txn.question.answer_category)
            if not check.passed:
                raise CategoryCheckFailed(check)
            pseudonym = f"answerer-{self._new_token()}"
            record = self._commit("answer_submitted", txn_id, pseudonym, {
                "answerer_id": identity.id,
                "answerer_pseudonym": pseudonym,
                "body": body,
                "stake": txn.params.answerer_stake,
            })
            return {"txn_id": txn_id, "seq": record.seq, "phase": txn.phase.value,
                    "pseudonym": pseudonym, "staked": txn.params.answerer_stake}

    def _apply_answer_submitted(self, record: EventRecord) -> None:
        txn = self.txns[record.txn_id]
        p = record.payload
        txn.answerer_id = p["answerer_id"]
        txn.pseudonyms[p["answerer_id"]] = p["answerer_pseudonym"]
        account = self._party_account(p["answerer_id"])
        self.ledger.register_account(account, AccountKind.ANSWERER)
        self.ledger.post_deposit(txn.txn_id, account, p["stake"], Memo.A_STAKE)
        txn.answer = adj.Answer(txn_id=txn.txn_id, body=p["body"],
                                submitted_at=parse_ts(record.ts))
        txn.state = advance(txn.state, ProtocolEvent(EventKind.A_STAKE_AND_ANSWER),
                            parse_ts(record.ts))

    def deliver_answer(self, token: str, txn_id: str) -> dict:
        """Broker forwards the answer to the asker, pseudonymously.

        Under the procedure variant the asker's deposit goes back to her here:
        she plays no further adjudication role.
        """
        with self._lock:
            self._require(self.authenticate(token), ROLE_BROKER)
            txn = self._get(txn_id)
            if txn.phase is not Phase.FULLY_FUNDED:
                raise adj.WrongPhase(f"cannot deliver in phase {txn.phase.value}")
            record = self._commit("answer_delivered", txn_id, "broker", {
                "refund_deposit": txn.params.variant is Variant.PRESPECIFIED_PROCEDURE,
            })
            return {
                "txn_id": txn_id, "seq": record.seq, "phase": txn.phase.value,
                "delivery": {
                    "answer": txn.answer.body,
                    "answerer_pseudonym": txn.pseudonym_of(txn.answerer_id),
                },
            }

    def _apply_answer_delivered(self, record: EventRecord) -> None:
        txn = self.txns[record.txn_id]
        txn.state = advance(txn.state, ProtocolEvent(EventKind.DELIVER_ANSWER),
                            parse_ts(record.ts))
        if record.payload.get("refund_deposit"):
            self.ledger.post_refund(txn.txn_id, self._party_account(txn.asker_id),
                                    txn.params.asker_deposit)

    def file_claim(self, token: str, txn_id: str, verdict: str,
                   evidence: list[dict] | None = None) -> dict:
        """Asker reports the answer correct or wrong, with evidence, before the deadline."""
        with self._lock:
            identity = self.authenticate(token)
            txn = self._get(txn_id)
            if identity.role != ROLE_ASKER or identity.id != txn.asker_id:
                raise RoleViolation("only this transaction's asker files claims")
            now = self.clock()
            claim = adj.Claim(
                txn_id=txn_id,
                verdict=Verdict(verdict),
                evidence=tuple(adj.EvidenceDoc.from_dict(doc) for doc in evidence or []),
                submitted_at=now,
            )
            adj.submit_claim(txn.state, claim, now)  # raises WrongPhase / PastDeadline
            record = self._commit("claim_filed", txn_id, txn.pseudonym_of(identity.id), {
                "verdict": claim.verdict.value,
                "evidence": [doc.to_dict() for doc in claim.evidence],
            })
            return {"txn_id": txn_id, "seq": record.seq, "phase": txn.phase.value,
                    "claim_index": len(txn.claims) - 1}

    def _apply_claim_filed(self, record: EventRecord) -> None:
        txn = self.txns[record.txn_id]
        p = record.payload
        claim = adj.Claim(
            txn_id=txn.txn_id,
            verdict=Verdict(p["verdict"]),
            evidence=tuple(adj.EvidenceDoc.from_dict(doc) for doc in p["evidence"]),
            submitted_at=parse_ts(record.ts),
        )
        txn.state = adj.submit_claim(txn.state, claim, parse_ts(record.ts))
        txn.claims.append(claim)

    def decide(self, token: str, txn_id: str, decision: str, rationale: str = "") -> dict:
        """Broker adjudicates: approve/deny the pending claim, or run the procedure.

        Approval settles per the claimed verdict; denial reopens the claim
        window until the deadline. `decision="procedure"` executes the
        committed verification procedure against the delivered answer.
        """
        with self._lock:
            self._require(self.authenticate(token), ROLE_BROKER)
            txn = self._get(txn_id)
            now = self.clock()

            if decision == "procedure":
                if txn.params.variant is not Variant.PRESPECIFIED_PROCEDURE:
                    raise adj.WrongPhase("no procedure was prespecified for this transaction")
                if txn.phase is not Phase.ANSWER_DELIVERED:
                    raise adj.WrongPhase(f"cannot run the procedure in phase {txn.phase.value}")
                result = adj.run_procedure(txn.procedure, txn.answer)
                verdict = (Verdict.CORRECT if result is Outcome.VERIFIED_CORRECT
                           else Verdict.WRONG)
                record = self._commit("procedure_settled", txn_id, "broker", {
                    "verdict": verdict.value, "rationale": rationale,
                })
            elif decision in ("approve", "deny"):
                mapped = (adj.ClaimDecision.APPROVED if decision == "approve"
                          else adj.ClaimDecision.DENIED)
                adj.decide_claim(txn.state, mapped, now)  # raises WrongPhase
                record = self._commit("claim_decided", txn_id, "broker", {
                    "decision": mapped.value, "rationale": rationale,
                })
            else:
                raise ValueError(f"decision must be approve, deny, or procedure: {decision!r}")

            out = {"txn_id": txn_id, "seq": record.seq, "phase": txn.phase.value}
            if txn.outcome is not None:
                out["outcome"] = txn.outcome.value
                out["schedule"] = _schedule_to_dict(txn.schedule)
            return out

    def _settle_txn(self, txn: Exchange, outcome: Outcome) -> None:
        txn.outcome = outcome
        txn.schedule = settle(txn.params, outcome)
        self.ledger.apply_settlement(txn.txn_id, txn.schedule)

    def _apply_claim_decided(self, record: EventRecord) -> None:
        txn = self.txns[record.txn_id]
        decision = adj.ClaimDecision(record.payload["decision"])
        now = parse_ts(record.ts)
        txn.state = adj.decide_claim(txn.state, decision, now)
        txn.claims[-1] = txn.claims[-1].with_decision(
            decision, now, record.payload.get("rationale", ""))
        if decision is adj.ClaimDecision.APPROVED:
            self._settle_txn(txn, txn.state.outcome)

    def _apply_procedure_settled(self, record: EventRecord) -> None:
        txn = self.txns[record.txn_id]
        verdict = Verdict(record.payload["verdict"])
        txn.state = advance(txn.state, ProtocolEvent(EventKind.PROCEDURE_RESULT, verdict),
                            parse_ts(record.ts))
        self._settle_txn(txn, txn.state.outcome)

    def expire_sweep(self, token: str | None = None, now: datetime | None = None) -> list[str]:
        """Settle every claim-variant transaction whose deadline has passed.

        Transactions still inside their window are skipped silently; the
        sweep is safe to run any time. Callable by the broker role or
        internally by the timer (token=None).
        """
        with self._lock:
            if token is not None:
                self._require(self.authenticate(token), ROLE_BROKER)
            now = now or self.clock()
            expired = []
            for txn in list(self.txns.values()):
                if (txn.phase in EXPIRABLE_PHASES
                        and txn.params.variant is Variant.POST_HOC_CLAIM
                        and now > txn.params.deadline):
                    self._commit("txn_expired", txn.txn_id, "system",
                                 {"swept_at": now.isoformat()})
                    expired.append(txn.txn_id)
            return expired

    def _apply_txn_expired(self, record: EventRecord) -> None:
        txn = self.txns[record.txn_id]
        txn.state = advance(txn.state, ProtocolEvent(EventKind.DEADLINE_PASSED),
                            parse_ts(record.payload["swept_at"]))
        self._settle_txn(txn, Outcome.EXPIRED)

    # -- read views -----------------------------------------------------------------

    def txn_view(self, token: str, txn_id: str) -> dict:
        """Role-scoped status: counterparties appear as pseudonyms only."""
        with self._lock:
            identity = self.authenticate(token)
            txn = self._get(txn_id)
            return self._view(txn, identity)

    def _view(self, txn: Exchange, identity: Identity) -> dict:
        base = {
            "txn_id": txn.txn_id,
            "phase": txn.phase.value,
            "variant": txn.params.variant.value,
            "params": _params_to_dict(txn.params),
            "deadline": txn.params.deadline.isoformat(),
            "created_at": txn.created_at,
            "question_text": txn.question.question_text,
            "answer_category": txn.question.answer_category.to_dict(),
            "outcome": txn.outcome.value if txn.outcome else None,
            "schedule": _schedule_to_dict(txn.schedule) if txn.schedule else None,
        }
        if identity.role == ROLE_BROKER:
            base["asker_identity"] = {
                "id": txn.asker_id,
                "pseudonym": txn.pseudonym_of(txn.asker_id),
                **_identity_fields(self._identity_by_id(txn.asker_id)),
            }
            if txn.answerer_id:
                base["answerer_identity"] = {
                    "id": txn.answerer_id,
                    "pseudonym": txn.pseudonym_of(txn.answerer_id),
                    **_identity_fields(self._identity_by_id(txn.answerer_id)),
                }
            base["answer"] = txn.answer.body if txn.answer else None
            base["claims"] = [claim.to_dict() for claim in txn.claims]
            base["escrow"] = self.ledger.escrow_balance(txn.txn_id)
            return base

        if identity.role == ROLE_ASKER and identity.id == txn.asker_id:
            base["my_pseudonym"] = txn.pseudonym_of(identity.id)
            base["counterparty"] = txn.pseudonym_of(txn.answerer_id) if txn.answerer_id else None
            delivered = txn.phase in (Phase.ANSWER_DELIVERED, Phase.CLAIM_SUBMITTED) \
                or txn.state.settled
            base["answer"] = txn.answer.body if (txn.answer and delivered) else None
            base["claims"] = [claim.to_dict() for claim in txn.claims]
            base["funding"] = {"price_paid": txn.price_paid, "deposit_paid": txn.deposit_paid}
            return base

        if identity.role == ROLE_ANSWERER and identity.id == txn.answerer_id:
            base["my_pseudonym"] = txn.pseudonym_of(identity.id)
            base["counterparty"] = txn.pseudonym_of(txn.asker_id)
            base["answer"] = txn.answer.body if txn.answer else None
            return base

        raise UnknownTransaction(f"no such transaction: {txn.txn_id}")

    def _identity_by_id(self, identity_id: str) -> Identity | None:
        for identity in self.config.tokens.values():
            if identity.id == identity_id:
                return identity
        return None

    def my_transactions(self, token: str) -> list[dict]:
        with self._lock:
            identity = self.authenticate(token)
            views = []
            for txn in self.txns.values():
                if identity.role == ROLE_BROKER or identity.id in (txn.asker_id, txn.answerer_id):
                    views.append(self._view(txn, identity))
            return views

    def open_questions(self, token: str) -> list[dict]:
        """Questions still waiting for an answerer; terms and pseudonym only."""
        with self._lock:
            self.authenticate(token)
            return [
                {
                    "txn_id": txn.txn_id,
                    "question_text": txn.question.question_text,
                    "answer_category": txn.question.answer_category.to_dict(),
                    "clarifying_paragraphs": list(txn.question.clarifying_paragraphs),
                    "params": _params_to_dict(txn.params),
                    "asker_pseudonym": txn.pseudonym_of(txn.asker_id),
                    "phase": txn.phase.value,
                }
                for txn in self.txns.values()
                if txn.phase in (Phase.TERMS_AGREED, Phase.Q_FUNDED)
            ]

    def payoffs_view(self, token: str, txn_id: str) -> dict:
        """Signed nets per outcome, for stake banners and what-if displays."""
        with self._lock:
            identity = self.authenticate(token)
            txn = self._get(txn_id)
            if identity.role != ROLE_BROKER and identity.id not in (txn.asker_id, txn.answerer_id):
                raise UnknownTransaction(f"no such transaction: {txn_id}")
            return {
                outcome.value: {"asker": vec.asker, "answerer": vec.answerer,
                                "broker": vec.broker, "charity": vec.charity}
                for outcome, vec in outcome_payoffs(txn.params).items()
            }

    def ledger_audit(self, token: str) -> dict:
        with self._lock:
            self._require(self.authenticate(token), ROLE_BROKER)
            report = self.ledger.audit()
            return {
                "healthy": report.healthy,
                "violations": [
                    {"seq": v.seq, "code": v.code, "detail": v.detail}
                    for v in report.violations
                ],
                "account_nets": report.account_nets,
                "settled_txns": sorted(report.settled_txns),
                "postings": self.ledger.to_lines(),
            }

    # -- introspection ----------------------------------------------------------------

    def snapshot(self) -> dict:
        """Canonical dump of all derived state, for replay-equality checks."""
        with self._lock:
            return {
                "seq": self._seq,
                "txns": {
                    txn.txn_id: {
                        "phase": txn.phase.value,
                        "params": _params_to_dict(txn.params),
                        "asker_id": txn.asker_id,
                        "answerer_id": txn.answerer_id,
                        "pseudonyms": dict(txn.pseudonyms),
                        "price_paid": txn.price_paid,
                        "deposit_paid": txn.deposit_paid,
                        "answer": txn.answer.body if txn.answer else None,
                        "claims": [claim.to_dict() for claim in txn.claims],
                        "outcome": txn.outcome.value if txn.outcome else None,
                        "schedule": _schedule_to_dict(txn.schedule) if txn.schedule else None,
                        "history": [(kind.value, ts.isoformat()) for kind, ts in txn.state.history],
                    }
                    for txn in self.txns.values()
                },
                "postings": self.ledger.to_lines(),
                "balances": self.ledger.snapshot_balances(),
            }


def _identity_fields(identity: Identity | None) -> dict:
    if identity is None:
        return {}
    return {"contact_handle": identity.contact_handle,
            "payment_handle": identity.payment_handle}
