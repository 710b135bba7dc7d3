"""Agent-based Monte Carlo harness for the exchange protocol.

Runs many independent transactions with strategic agents — an answerer who
enters only when confident enough, an asker who completes the claim path
with some probability, a broker who approves when the evidence-quality draw
clears the bar — and pushes every entered transaction through the real
lifecycle state machine and the real ledger. No shortcut arithmetic: money
totals come out of the book, so the aggregate statistics double-check the
closed-form incentive model.

A run is reproducible byte for byte from its seed, and its transcript (one
record per line, digest-sealed) can be replayed into the identical report.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from datetime import timedelta
from typing import Iterable

import numpy as np

from .incentives import entry_threshold, outcome_payoffs
from .ledger import AccountKind, Ledger, Memo
from .protocol import (
    EventKind,
    Outcome,
    ProtocolEvent,
    TransactionParams,
    Variant,
    Verdict,
    advance,
    initial_state,
    settle,
)

ASKER_ACCOUNT = "askers"
ANSWERER_ACCOUNT = "answerers"


class CorruptTranscript(Exception):
    category = "CorruptTranscript"


def resolve_threshold(name: str, params: TransactionParams) -> float:
    """Map a strategy name to the answerer's entry threshold on p."""
    if name == "rational":
        return float(entry_threshold(params))
    if name == "always-enter":
        return 0.0
    if name.startswith("threshold:"):
        value = float(name.split(":", 1)[1])
        if not 0 <= value <= 1:
            raise ValueError(f"threshold must lie in [0, 1]: {name}")
        return value
    raise ValueError(f"unknown answerer strategy: {name!r}")


@dataclass(frozen=True)
class SimulationConfig:
    n_transactions: int
    params: TransactionParams
    seed: int
    answerer_strategy: str = "rational"
    q_verifies: float = 1.0
    x_approves: float = 1.0
    p_low: float = 0.0
    p_high: float = 1.0

    def __post_init__(self):
        if self.n_transactions < 0:
            raise ValueError("n_transactions must be >= 0")
        if not 0 <= self.p_low <= self.p_high <= 1:
            raise ValueError("belief distribution bounds must satisfy 0 <= low <= high <= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["params"] = {
            "price": self.params.price,
            "asker_deposit": self.params.asker_deposit,
            "answerer_stake": self.params.answerer_stake,
            "broker_fee": self.params.broker_fee,
            "answerer_reward": self.params.answerer_reward,
            "deadline": self.params.deadline.isoformat(),
            "variant": self.params.variant.value,
        }
        return d


@dataclass(frozen=True, slots=True)
class TxnRecord:
    """One simulated transaction, as written to the transcript."""

    index: int
    p: float
    entered: bool
    correct: bool | None = None
    verified: bool | None = None
    approved: bool | None = None
    outcome: str | None = None
    asker_net: int = 0
    answerer_net: int = 0
    broker_net: int = 0
    charity_net: int = 0


@dataclass
class SimulationReport:
    n_transactions: int
    n_entered: int
    participation_rate: float | None
    outcome_counts: dict[str, int]
    charity_total: int
    broker_total: int
    mean_net: dict[str, float | None]          # per role, over entered transactions
    entrant_answerer_mean: float | None
    entrant_answerer_stderr: float | None

    def rows(self) -> list[tuple[str, str]]:
        """Flatten to (metric, value) rows for delimited output."""
        rows = [
            ("n_transactions", str(self.n_transactions)),
            ("n_entered", str(self.n_entered)),
            ("participation_rate",
             "" if self.participation_rate is None else repr(self.participation_rate)),
        ]
        for outcome in ("VerifiedCorrect", "VerifiedWrong", "Expired"):
            rows.append((f"outcome.{outcome}", str(self.outcome_counts.get(outcome, 0))))
        rows.append(("charity_total_cents", str(self.charity_total)))
        rows.append(("broker_total_cents", str(self.broker_total)))
        for role in ("asker", "answerer", "broker", "charity"):
            value = self.mean_net.get(role)
            rows.append((f"mean_net_cents.{role}", "" if value is None else repr(value)))
        rows.append(("entrant_answerer_mean_cents",
                     "" if self.entrant_answerer_mean is None else repr(self.entrant_answerer_mean)))
        rows.append(("entrant_answerer_stderr_cents",
                     "" if self.entrant_answerer_stderr is None else repr(self.entrant_answerer_stderr)))
        return rows

    def to_tsv(self) -> str:
        return "".join(f"{k}\t{v}\n" for k, v in self.rows())


@dataclass
class SimulationRun:
    config: SimulationConfig
    records: list[TxnRecord]
    report: SimulationReport
    ledger: Ledger

    def transcript_lines(self) -> list[str]:
        return build_transcript(self.config, self.records)


def _simulate_one(index: int, params: TransactionParams, threshold: float,
                  config: SimulationConfig, ledger: Ledger,
                  rng_answerer, rng_world, rng_asker, rng_broker,
                  payoffs_by_outcome) -> TxnRecord:
    p = config.p_low + (config.p_high - config.p_low) * rng_answerer.random()
    if p < threshold:
        return TxnRecord(index=index, p=p, entered=False)

    txn = f"s{index}"
    now = params.deadline  # claims land exactly on the deadline, which is legal
    state = initial_state(params)
    state = advance(state, ProtocolEvent(EventKind.AGREE_TERMS), now)
    ledger.post_deposit(txn, ASKER_ACCOUNT, params.price, Memo.Q_PAYMENT)
    ledger.post_deposit(txn, ASKER_ACCOUNT, params.asker_deposit, Memo.Q_DEPOSIT)
    state = advance(state, ProtocolEvent(EventKind.Q_DEPOSIT), now)
    ledger.post_deposit(txn, ANSWERER_ACCOUNT, params.answerer_stake, Memo.A_STAKE)
    state = advance(state, ProtocolEvent(EventKind.A_STAKE_AND_ANSWER), now)
    state = advance(state, ProtocolEvent(EventKind.DELIVER_ANSWER), now)

    correct = bool(rng_world.random() < p)
    verified = approved = None
    if params.variant is Variant.PRESPECIFIED_PROCEDURE:
        ledger.post_refund(txn, ASKER_ACCOUNT, params.asker_deposit)
        verdict = Verdict.CORRECT if correct else Verdict.WRONG
        state = advance(state, ProtocolEvent(EventKind.PROCEDURE_RESULT, verdict), now)
    else:
        verified = bool(rng_asker.random() < config.q_verifies)
        if verified:
            verdict = Verdict.CORRECT if correct else Verdict.WRONG
            state = advance(state, ProtocolEvent(EventKind.SUBMIT_CLAIM, verdict), now)
            evidence_quality = rng_broker.random()
            approved = bool(evidence_quality < config.x_approves)
            if approved:
                state = advance(state, ProtocolEvent(EventKind.X_APPROVE_CLAIM), now)
            else:
                state = advance(state, ProtocolEvent(EventKind.X_DENY_CLAIM), now)
        if not state.settled:
            state = advance(state, ProtocolEvent(EventKind.DEADLINE_PASSED),
                            params.deadline + timedelta(seconds=1))

    outcome = state.outcome
    ledger.apply_settlement(txn, settle(params, outcome))
    vector = payoffs_by_outcome[outcome]
    return TxnRecord(
        index=index, p=p, entered=True, correct=correct,
        verified=verified, approved=approved, outcome=outcome.value,
        asker_net=vector.asker, answerer_net=vector.answerer,
        broker_net=vector.broker, charity_net=vector.charity,
    )


def run(config: SimulationConfig) -> SimulationRun:
    """Run the simulation; deterministic for a given config."""
    params = config.params
    threshold = resolve_threshold(config.answerer_strategy, params)
    # One independent stream per agent (plus one for the world's coin),
    # all derived from the run seed.
    streams = np.random.SeedSequence(config.seed).spawn(4)
    rng_answerer, rng_world, rng_asker, rng_broker = (
        np.random.default_rng(s) for s in streams
    )

    ledger = Ledger()
    ledger.register_account(ASKER_ACCOUNT, AccountKind.ASKER)
    ledger.register_account(ANSWERER_ACCOUNT, AccountKind.ANSWERER)
    payoffs_by_outcome = outcome_payoffs(params)

    records = [
        _simulate_one(i, params, threshold, config, ledger,
                      rng_answerer, rng_world, rng_asker, rng_broker,
                      payoffs_by_outcome)
        for i in range(config.n_transactions)
    ]
    report = build_report(records, config.n_transactions)
    return SimulationRun(config=config, records=records, report=report, ledger=ledger)


def build_report(records: Iterable[TxnRecord], n_transactions: int) -> SimulationReport:
    """Order-independent aggregation shared by run() and replay()."""
    entered = [r for r in records if r.entered]
    n_entered = len(entered)
    counts: dict[str, int] = {}
    totals = {"asker": 0, "answerer": 0, "broker": 0, "charity": 0}
    for record in entered:
        counts[record.outcome] = counts.get(record.outcome, 0) + 1
        totals["asker"] += record.asker_net
        totals["answerer"] += record.answerer_net
        totals["broker"] += record.broker_net
        totals["charity"] += record.charity_net

    def mean(total: int) -> float | None:
        return None if n_entered == 0 else total / n_entered

    stderr = None
    answerer_mean = mean(totals["answerer"])
    if n_entered >= 2:
        m = totals["answerer"] / n_entered
        variance = sum((r.answerer_net - m) ** 2 for r in entered) / (n_entered - 1)
        stderr = (variance / n_entered) ** 0.5

    return SimulationReport(
        n_transactions=n_transactions,
        n_entered=n_entered,
        participation_rate=None if n_transactions == 0 else n_entered / n_transactions,
        outcome_counts=counts,
        charity_total=totals["charity"],
        broker_total=totals["broker"],
        mean_net={role: mean(total) for role, total in totals.items()},
        entrant_answerer_mean=answerer_mean,
        entrant_answerer_stderr=stderr,
    )


# --- Transcript ---------------------------------------------------------------

def _dump(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def build_transcript(config: SimulationConfig, records: list[TxnRecord]) -> list[str]:
    lines = [_dump({"kind": "header", "config": config.to_dict()})]
    lines += [_dump({"kind": "txn", **asdict(record)}) for record in records]
    digest = hashlib.sha256("\n".join(lines).encode()).hexdigest()
    lines.append(_dump({"kind": "trailer", "records": len(records), "sha256": digest}))
    return lines


def replay(lines: Iterable[str]) -> SimulationReport:
    """Rebuild the report from a transcript; any truncation or edit is fatal."""
    lines = [line.rstrip("\n") for line in lines if line.strip()]
    if len(lines) < 2:
        raise CorruptTranscript("transcript too short for header and trailer")
    try:
        header = json.loads(lines[0])
        trailer = json.loads(lines[-1])
        body = [json.loads(line) for line in lines[1:-1]]
    except json.JSONDecodeError as exc:
        raise CorruptTranscript(f"malformed transcript line: {exc}") from exc
    if header.get("kind") != "header" or trailer.get("kind") != "trailer":
        raise CorruptTranscript("missing header or trailer record")
    digest = hashlib.sha256("\n".join(lines[:-1]).encode()).hexdigest()
    if trailer.get("sha256") != digest:
        raise CorruptTranscript("transcript digest mismatch")
    if trailer.get("records") != len(body):
        raise CorruptTranscript(f"expected {trailer.get('records')} records, found {len(body)}")
    records = []
    for entry in body:
        if entry.get("kind") != "txn":
            raise CorruptTranscript(f"unexpected record kind {entry.get('kind')!r}")
        entry = {k: v for k, v in entry.items() if k != "kind"}
        records.append(TxnRecord(**entry))
    return build_report(records, header["config"]["n_transactions"])
