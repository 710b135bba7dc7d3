"""Shared machinery for exercising the broker service in tests.

Builds configured services with deterministic clocks/tokens, and a random
operation driver that hammers the full API surface (valid and invalid calls
interleaved) while collecting every role-visible response body for the
anonymity sweep.
"""

from __future__ import annotations

import itertools
import json
import random
from datetime import datetime, timedelta, timezone

from paidqa.adjudication import CategorySpec, FieldKind, FieldSpec
from paidqa.config import Identity, ServiceConfig
from paidqa.protocol import ProtocolError, TransactionParams, Variant
from paidqa.service import ExchangeService

UTC = timezone.utc
START = datetime(2026, 3, 1, 9, 0, 0, tzinfo=UTC)

ASKER_TOKEN = "tok-asker"
ANSWERER_TOKEN = "tok-answerer"
BROKER_TOKEN = "tok-broker"

# Distinctive identity markers the anonymity sweep greps for.
ASKER_IDENTITY = Identity(id="alice-e6051b", role="asker",
                          contact_handle="alice@secret-lab.example",
                          payment_handle="iban-alice-9911")
ANSWERER_IDENTITY = Identity(id="bob-f22c84", role="answerer",
                             contact_handle="bob@hidden-bench.example",
                             payment_handle="iban-bob-4410")
BROKER_IDENTITY = Identity(id="xavier-broker", role="broker",
                           contact_handle="desk@broker.example",
                           payment_handle="iban-broker-0001")


class FakeClock:
    def __init__(self, start: datetime = START):
        self.now = start

    def __call__(self) -> datetime:
        return self.now

    def advance(self, **kwargs) -> None:
        self.now += timedelta(**kwargs)


def make_config(tmp_path, fsync: bool = False, extra_tokens: dict | None = None) -> ServiceConfig:
    tokens = {
        ASKER_TOKEN: ASKER_IDENTITY,
        ANSWERER_TOKEN: ANSWERER_IDENTITY,
        BROKER_TOKEN: BROKER_IDENTITY,
    }
    tokens.update(extra_tokens or {})
    return ServiceConfig(log_path=str(tmp_path / "events.log"), fsync=fsync, tokens=tokens)


def make_service(tmp_path, clock: FakeClock | None = None, fsync: bool = False,
                 config: ServiceConfig | None = None, **kwargs) -> tuple[ExchangeService, FakeClock]:
    clock = clock or FakeClock()
    config = config or make_config(tmp_path, fsync=fsync)
    counter = itertools.count(1)
    service = ExchangeService(config, clock=clock,
                              token_factory=lambda: f"{next(counter):06x}", **kwargs)
    return service, clock


CATEGORY = CategorySpec(
    description="a molecule, fully specified in its structure",
    schema=(FieldSpec("structure", FieldKind.TEXT),),
)

QUESTION = {
    "question_text": "What molecule enables the target reaction?",
    "answer_category": CATEGORY.to_dict(),
    "clarifying_paragraphs": ["Reaction conditions are ambient."],
}

GOOD_ANSWER = {"structure": "C8H10N4O2 with a cyclopentane bridge"}
BAD_ANSWER = {"hint": "something an insect might excrete"}


def make_params(deadline: datetime, variant: Variant = Variant.POST_HOC_CLAIM) -> TransactionParams:
    return TransactionParams(price=100_00, asker_deposit=100_00, answerer_stake=50_00,
                             broker_fee=50_00, answerer_reward=50_00,
                             deadline=deadline, variant=variant)


def run_full_lifecycle(service: ExchangeService, clock: FakeClock,
                       verdict: str = "Correct", decision: str = "approve",
                       variant: Variant = Variant.POST_HOC_CLAIM) -> tuple[str, list[dict]]:
    """Happy-path lifecycle; returns (txn_id, every response body seen by anyone)."""
    from paidqa.adjudication import VerificationProcedure, exact_match_step

    bodies = []
    deadline = clock.now + timedelta(days=7)
    procedure = None
    if variant is Variant.PRESPECIFIED_PROCEDURE:
        procedure = VerificationProcedure(steps=(exact_match_step("structure", GOOD_ANSWER["structure"]),))
    created = service.create_transaction(ASKER_TOKEN, QUESTION,
                                         make_params(deadline, variant), procedure=procedure)
    txn_id = created["txn_id"]
    bodies.append(("asker", created))
    bodies.append(("answerer", service.open_questions(ANSWERER_TOKEN)))
    bodies.append(("asker", service.fund(ASKER_TOKEN, txn_id, 100_00)))
    bodies.append(("asker", service.fund(ASKER_TOKEN, txn_id, 100_00)))
    bodies.append(("answerer", service.submit_answer(ANSWERER_TOKEN, txn_id, dict(GOOD_ANSWER))))
    bodies.append(("broker", service.deliver_answer(BROKER_TOKEN, txn_id)))
    if variant is Variant.PRESPECIFIED_PROCEDURE:
        bodies.append(("broker", service.decide(BROKER_TOKEN, txn_id, "procedure")))
    else:
        bodies.append(("asker", service.file_claim(ASKER_TOKEN, txn_id, verdict,
                                                   evidence=[{"summary": "lab replication", "blob_hex": "00ff"}])))
        bodies.append(("broker", service.decide(BROKER_TOKEN, txn_id, decision, "weighed the evidence")))
    bodies.append(("asker", service.txn_view(ASKER_TOKEN, txn_id)))
    bodies.append(("answerer", service.txn_view(ANSWERER_TOKEN, txn_id)))
    bodies.append(("asker", service.my_transactions(ASKER_TOKEN)))
    bodies.append(("answerer", service.my_transactions(ANSWERER_TOKEN)))
    bodies.append(("asker", service.payoffs_view(ASKER_TOKEN, txn_id)))
    bodies.append(("answerer", service.payoffs_view(ANSWERER_TOKEN, txn_id)))
    return txn_id, bodies


def random_operations(service: ExchangeService, clock: FakeClock, n_ops: int,
                      seed: int) -> list[tuple[str, dict | list]]:
    """Fire n_ops random calls at the service; protocol rejections are expected.

    Returns every successful role-visible response body, tagged with the role
    that saw it.
    """
    rng = random.Random(seed)
    bodies: list[tuple[str, dict | list]] = []
    txn_ids: list[str] = []

    def record(role, outcome):
        bodies.append((role, outcome))

    ops = ["create", "fund", "answer", "deliver", "claim", "decide", "sweep",
           "view", "listing", "payoffs", "tick", "progress"]
    weights = [10, 12, 8, 7, 7, 7, 4, 10, 4, 6, 4, 21]

    def pick_txn():
        # bias toward recent transactions so lifecycles actually complete
        pool = txn_ids[-8:] if rng.random() < 0.8 else txn_ids
        return rng.choice(pool)

    def take_next_step(txn_id: str):
        """Advance a transaction by whatever its phase actually needs."""
        txn = service.txns[txn_id]
        phase = txn.phase.value
        if phase == "TermsAgreed":
            amount = txn.params.price if not txn.price_paid else txn.params.asker_deposit
            record("asker", service.fund(ASKER_TOKEN, txn_id, amount))
        elif phase == "AskerFunded":
            record("answerer", service.submit_answer(ANSWERER_TOKEN, txn_id, dict(GOOD_ANSWER)))
        elif phase == "FullyFunded":
            record("broker", service.deliver_answer(BROKER_TOKEN, txn_id))
        elif phase == "AnswerDelivered":
            if txn.params.variant is Variant.PRESPECIFIED_PROCEDURE:
                record("broker", service.decide(BROKER_TOKEN, txn_id, "procedure"))
            else:
                record("asker", service.file_claim(
                    ASKER_TOKEN, txn_id, rng.choice(["Correct", "Wrong"]),
                    evidence=[{"summary": "notes", "blob_hex": "ab"}]))
        elif phase == "ClaimSubmitted":
            record("broker", service.decide(
                BROKER_TOKEN, txn_id, rng.choice(["approve", "approve", "deny"]), "ok"))

    for _ in range(n_ops):
        op = rng.choices(ops, weights)[0]
        try:
            if op == "create":
                variant = rng.choice(list(Variant))
                deadline = clock.now + timedelta(minutes=rng.randint(-5, 240))
                procedure = None
                if variant is Variant.PRESPECIFIED_PROCEDURE:
                    from paidqa.adjudication import VerificationProcedure, exact_match_step
                    procedure = VerificationProcedure(
                        steps=(exact_match_step("structure", GOOD_ANSWER["structure"]),))
                created = service.create_transaction(
                    ASKER_TOKEN, QUESTION, make_params(deadline, variant), procedure=procedure)
                txn_ids.append(created["txn_id"])
                record("asker", created)
            elif op == "tick":
                clock.advance(minutes=rng.randint(1, 90))
            elif not txn_ids:
                continue
            elif op == "fund":
                amount = rng.choice([100_00, 100_00, 100_00, 50_00, 1])
                record("asker", service.fund(ASKER_TOKEN, pick_txn(), amount))
            elif op == "answer":
                body = dict(rng.choice([GOOD_ANSWER, GOOD_ANSWER, BAD_ANSWER]))
                record("answerer",
                       service.submit_answer(ANSWERER_TOKEN, pick_txn(), body))
            elif op == "deliver":
                record("broker", service.deliver_answer(BROKER_TOKEN, pick_txn()))
            elif op == "claim":
                record("asker", service.file_claim(
                    ASKER_TOKEN, pick_txn(), rng.choice(["Correct", "Wrong"]),
                    evidence=[{"summary": "notes", "blob_hex": "ab"}]))
            elif op == "decide":
                record("broker", service.decide(
                    BROKER_TOKEN, pick_txn(),
                    rng.choice(["approve", "deny", "procedure"]), "assessed"))
            elif op == "sweep":
                service.expire_sweep(BROKER_TOKEN)
            elif op == "view":
                txn = pick_txn()
                role, token = rng.choice([("asker", ASKER_TOKEN),
                                          ("answerer", ANSWERER_TOKEN),
                                          ("broker", BROKER_TOKEN)])
                record(role, service.txn_view(token, txn))
            elif op == "listing":
                record("answerer", service.open_questions(ANSWERER_TOKEN))
            elif op == "payoffs":
                role, token = rng.choice([("asker", ASKER_TOKEN), ("answerer", ANSWERER_TOKEN)])
                record(role, service.payoffs_view(token, pick_txn()))
            elif op == "progress":
                take_next_step(pick_txn())
        except ProtocolError:
            continue
    return bodies


def assert_no_identity_leak(bodies: list[tuple[str, dict | list]]) -> int:
    """Grep every asker/answerer-visible body for counterparty identity fields."""
    leak_targets = {
        "asker": [ANSWERER_IDENTITY.id, ANSWERER_IDENTITY.contact_handle,
                  ANSWERER_IDENTITY.payment_handle],
        "answerer": [ASKER_IDENTITY.id, ASKER_IDENTITY.contact_handle,
                     ASKER_IDENTITY.payment_handle],
    }
    checked = 0
    for role, body in bodies:
        if role not in leak_targets:
            continue
        text = json.dumps(body)
        for marker in leak_targets[role]:
            assert marker not in text, f"{role}-visible body leaks {marker!r}: {text[:200]}"
        checked += 1
    return checked
