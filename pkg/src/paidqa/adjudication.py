"""Answer-category checking, evidence claims, and prespecified verification.

The category check is deliberately truth-blind: it confirms an answer has
the agreed shape (every required field present, of the right kind) and never
judges whether the answer is right. Correctness is established either by the
asker's evidence claim, decided by the broker, or — in the procedure
variant — by running a verification procedure whose expected values were
committed as salted digests before the answer was accepted, so the broker
cannot leak the answer key.
"""

from __future__ import annotations

import enum
import hashlib
import secrets
from dataclasses import dataclass, field
from datetime import datetime

from .protocol import (
    EventKind,
    Outcome,
    Phase,
    ProtocolError,
    ProtocolEvent,
    TransactionState,
    Variant,
    Verdict,
    advance,
)

DEFAULT_HASH = "sha256"


class PastDeadline(ProtocolError):
    category = "PastDeadline"


class WrongPhase(ProtocolError):
    category = "WrongPhase"


class NotBroker(ProtocolError):
    category = "NotBroker"


class CommitmentMismatch(ProtocolError):
    category = "CommitmentMismatch"


class DecisionAlreadySet(ProtocolError):
    category = "DecisionAlreadySet"


# --- Answer categories -------------------------------------------------------

class FieldKind(enum.Enum):
    TEXT = "text"
    NUMBER_WITH_UNITS = "number_with_units"
    ENUMERATED_CHOICE = "enumerated_choice"


@dataclass(frozen=True)
class FieldSpec:
    name: str
    kind: FieldKind
    units: str | None = None          # NUMBER_WITH_UNITS only
    choices: tuple[str, ...] = ()     # ENUMERATED_CHOICE only

    def to_dict(self) -> dict:
        return {"name": self.name, "kind": self.kind.value,
                "units": self.units, "choices": list(self.choices)}

    @classmethod
    def from_dict(cls, d: dict) -> "FieldSpec":
        return cls(name=d["name"], kind=FieldKind(d["kind"]),
                   units=d.get("units"), choices=tuple(d.get("choices") or ()))


@dataclass(frozen=True)
class CategorySpec:
    """Shape of an acceptable answer: the agreed category, not its truth."""

    description: str
    schema: tuple[FieldSpec, ...]

    def __post_init__(self):
        if not self.schema:
            raise ValueError("a category needs at least one required field")

    def to_dict(self) -> dict:
        return {"description": self.description,
                "schema": [f.to_dict() for f in self.schema]}

    @classmethod
    def from_dict(cls, d: dict) -> "CategorySpec":
        return cls(description=d["description"],
                   schema=tuple(FieldSpec.from_dict(f) for f in d["schema"]))


@dataclass(frozen=True)
class Answer:
    txn_id: str
    body: dict
    submitted_at: datetime

    def to_dict(self) -> dict:
        return {"txn_id": self.txn_id, "body": self.body,
                "submitted_at": self.submitted_at.isoformat()}


@dataclass(frozen=True)
class CategoryCheck:
    """Outcome of the structural category gate."""

    passed: bool
    missing: tuple[str, ...] = ()
    mismatched: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.passed


def _field_conforms(spec: FieldSpec, value: object) -> bool:
    if spec.kind is FieldKind.TEXT:
        return isinstance(value, str) and bool(value.strip())
    if spec.kind is FieldKind.NUMBER_WITH_UNITS:
        if not isinstance(value, dict):
            return False
        number, units = value.get("value"), value.get("units")
        ok_number = isinstance(number, (int, float)) and not isinstance(number, bool)
        return ok_number and units == spec.units
    if spec.kind is FieldKind.ENUMERATED_CHOICE:
        return isinstance(value, str) and value in spec.choices
    return False


def check_category(answer: Answer, spec: CategorySpec) -> CategoryCheck:
    """Pass iff every schema field is present and kind-correct.

    Purely structural: the same answer body always yields the same result,
    whatever the truth of its content.
    """
    missing, mismatched = [], []
    for fs in spec.schema:
        if fs.name not in answer.body:
            missing.append(fs.name)
        elif not _field_conforms(fs, answer.body[fs.name]):
            mismatched.append(fs.name)
    return CategoryCheck(passed=not missing and not mismatched,
                         missing=tuple(missing), mismatched=tuple(mismatched))


# --- Claims ------------------------------------------------------------------

class ClaimDecision(enum.Enum):
    APPROVED = "Approved"
    DENIED = "Denied"


@dataclass(frozen=True)
class EvidenceDoc:
    """Opaque evidence blob plus a human summary; the engine never parses it."""

    summary: str
    blob: bytes = b""

    def to_dict(self) -> dict:
        return {"summary": self.summary, "blob_hex": self.blob.hex()}

    @classmethod
    def from_dict(cls, d: dict) -> "EvidenceDoc":
        return cls(summary=d["summary"], blob=bytes.fromhex(d.get("blob_hex", "")))


@dataclass(frozen=True)
class Claim:
    txn_id: str
    verdict: Verdict
    evidence: tuple[EvidenceDoc, ...]
    submitted_at: datetime
    decision: ClaimDecision | None = None
    decided_at: datetime | None = None
    rationale: str = ""

    def with_decision(self, decision: ClaimDecision, decided_at: datetime,
                      rationale: str = "") -> "Claim":
        if self.decision is not None:
            raise DecisionAlreadySet(f"claim on {self.txn_id} already decided")
        return Claim(self.txn_id, self.verdict, self.evidence, self.submitted_at,
                     decision=decision, decided_at=decided_at, rationale=rationale)

    def to_dict(self) -> dict:
        return {
            "txn_id": self.txn_id,
            "verdict": self.verdict.value,
            "evidence": [doc.to_dict() for doc in self.evidence],
            "submitted_at": self.submitted_at.isoformat(),
            "decision": self.decision.value if self.decision else None,
            "decided_at": self.decided_at.isoformat() if self.decided_at else None,
            "rationale": self.rationale,
        }


def submit_claim(state: TransactionState, claim: Claim, now: datetime) -> TransactionState:
    """File the asker's verdict-plus-evidence claim; legal only before the deadline."""
    if state.phase is not Phase.ANSWER_DELIVERED or state.variant is not Variant.POST_HOC_CLAIM:
        raise WrongPhase(f"cannot submit a claim in phase {state.phase.value}")
    if now > state.deadline:
        raise PastDeadline(
            f"claim at {now.isoformat()} is after deadline {state.deadline.isoformat()}"
        )
    return advance(state, ProtocolEvent(EventKind.SUBMIT_CLAIM, claim.verdict), now)


def decide_claim(state: TransactionState, decision: ClaimDecision, now: datetime,
                 *, decider_is_broker: bool = True) -> TransactionState:
    """Approve (settling per the claimed verdict) or deny (reopening the claim window)."""
    if not decider_is_broker:
        raise NotBroker("only the broker decides claims")
    if state.phase is not Phase.CLAIM_SUBMITTED:
        raise WrongPhase(f"no claim pending in phase {state.phase.value}")
    kind = (EventKind.X_APPROVE_CLAIM if decision is ClaimDecision.APPROVED
            else EventKind.X_DENY_CLAIM)
    return advance(state, ProtocolEvent(kind), now)


# --- Prespecified verification procedures ------------------------------------

def _digest(hash_name: str, salt: bytes, value: str) -> str:
    h = hashlib.new(hash_name)
    h.update(salt)
    h.update(value.encode("utf-8"))
    return h.hexdigest()


@dataclass(frozen=True)
class Commitment:
    """Salted digest of an expected value, fixed before the answer is accepted."""

    salt_hex: str
    digest_hex: str

    @classmethod
    def commit(cls, value: str, *, hash_name: str = DEFAULT_HASH,
               salt: bytes | None = None) -> "Commitment":
        salt = secrets.token_bytes(16) if salt is None else salt
        return cls(salt_hex=salt.hex(), digest_hex=_digest(hash_name, salt, value))

    def matches(self, value: str, *, hash_name: str = DEFAULT_HASH) -> bool:
        return _digest(hash_name, bytes.fromhex(self.salt_hex), value) == self.digest_hex

    def open(self, revealed: str, *, hash_name: str = DEFAULT_HASH) -> str:
        """Check a revealed expected value against the digest; return it."""
        if not self.matches(revealed, hash_name=hash_name):
            raise CommitmentMismatch("revealed value does not hash to its commitment")
        return revealed

    def to_dict(self) -> dict:
        return {"salt": self.salt_hex, "digest": self.digest_hex}

    @classmethod
    def from_dict(cls, d: dict) -> "Commitment":
        return cls(salt_hex=d["salt"], digest_hex=d["digest"])


class StepKind(enum.Enum):
    EXACT_MATCH = "exact_match"
    NUMERIC_TOLERANCE = "numeric_tolerance"
    ENUMERATED_SET = "enumerated_set"


@dataclass(frozen=True)
class ProcedureStep:
    """One check of a verification procedure, applied to a named answer field.

    EXACT_MATCH and ENUMERATED_SET carry commitments of the acceptable
    value(s); NUMERIC_TOLERANCE carries its target in the clear, since a
    range test cannot be evaluated against a digest.
    """

    kind: StepKind
    answer_field: str
    commitments: tuple[Commitment, ...] = ()
    target: float | None = None
    tolerance: float | None = None
    units: str | None = None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "answer_field": self.answer_field,
            "commitments": [c.to_dict() for c in self.commitments],
            "target": self.target,
            "tolerance": self.tolerance,
            "units": self.units,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProcedureStep":
        return cls(
            kind=StepKind(d["kind"]),
            answer_field=d["answer_field"],
            commitments=tuple(Commitment.from_dict(c) for c in d.get("commitments", [])),
            target=d.get("target"),
            tolerance=d.get("tolerance"),
            units=d.get("units"),
        )


@dataclass(frozen=True)
class VerificationProcedure:
    steps: tuple[ProcedureStep, ...]
    hash_name: str = DEFAULT_HASH

    def __post_init__(self):
        if not self.steps:
            raise ValueError("a verification procedure needs at least one step")

    def to_dict(self) -> dict:
        return {"hash_name": self.hash_name, "steps": [s.to_dict() for s in self.steps]}

    @classmethod
    def from_dict(cls, d: dict) -> "VerificationProcedure":
        return cls(steps=tuple(ProcedureStep.from_dict(s) for s in d["steps"]),
                   hash_name=d.get("hash_name", DEFAULT_HASH))


def exact_match_step(answer_field: str, expected: str, *,
                     hash_name: str = DEFAULT_HASH, salt: bytes | None = None) -> ProcedureStep:
    return ProcedureStep(StepKind.EXACT_MATCH, answer_field,
                         commitments=(Commitment.commit(expected, hash_name=hash_name, salt=salt),))


def enumerated_set_step(answer_field: str, acceptable: list[str], *,
                        hash_name: str = DEFAULT_HASH) -> ProcedureStep:
    return ProcedureStep(
        StepKind.ENUMERATED_SET, answer_field,
        commitments=tuple(Commitment.commit(v, hash_name=hash_name) for v in acceptable),
    )


def numeric_tolerance_step(answer_field: str, target: float, tolerance: float,
                           units: str) -> ProcedureStep:
    return ProcedureStep(StepKind.NUMERIC_TOLERANCE, answer_field,
                         target=target, tolerance=tolerance, units=units)


def _step_passes(step: ProcedureStep, answer: Answer, hash_name: str,
                 reveals: dict[str, list[str]] | None) -> bool:
    value = answer.body.get(step.answer_field)
    if step.kind is StepKind.NUMERIC_TOLERANCE:
        if not isinstance(value, dict):
            return False
        number, units = value.get("value"), value.get("units")
        if not isinstance(number, (int, float)) or isinstance(number, bool):
            return False
        return units == step.units and abs(number - step.target) <= step.tolerance

    if not isinstance(value, str):
        return False
    if reveals and step.answer_field in reveals:
        # Audit path: expected values disclosed after the fact. Verify every
        # reveal hashes to a distinct commitment before comparing the answer.
        revealed = reveals[step.answer_field]
        if len(revealed) != len(step.commitments):
            raise CommitmentMismatch(
                f"{step.answer_field}: {len(revealed)} reveals for {len(step.commitments)} commitments"
            )
        remaining = list(step.commitments)
        for expected in revealed:
            match = next((c for c in remaining if c.matches(expected, hash_name=hash_name)), None)
            if match is None:
                raise CommitmentMismatch(
                    f"{step.answer_field}: revealed value does not hash to any commitment"
                )
            remaining.remove(match)
        return value in revealed
    return any(c.matches(value, hash_name=hash_name) for c in step.commitments)


def run_procedure(procedure: VerificationProcedure, answer: Answer,
                  reveals: dict[str, list[str]] | None = None) -> Outcome:
    """Execute the committed procedure against an answer. Deterministic.

    Without reveals, committed steps test the answer by hashing it against
    the commitments. With reveals (disclosed expected values), each reveal is
    first checked against its commitment — a tampered reveal raises
    CommitmentMismatch — and the answer is then compared in the clear.
    """
    for step in procedure.steps:
        if not _step_passes(step, answer, procedure.hash_name, reveals):
            return Outcome.VERIFIED_WRONG
    return Outcome.VERIFIED_CORRECT
