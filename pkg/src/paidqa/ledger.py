"""Double-entry book for escrowed funds.

The append-only posting log is the source of truth; balances are a derived
cache rebuilt identically by replay. Every posting moves a positive amount
from one account to another, so the book always nets to zero. Escrow is held
in one sub-account per transaction, which makes a short settlement, a double
settlement, or a leak detectable per transaction rather than only in the
pooled total.

Write paths validate strictly and raise; `audit` is the lenient read path
that re-derives everything from the log and reports violations as data, so a
doctored or corrupted log can be inspected instead of crashing the reader.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

from .money import require_amount
from .protocol import PayoutSchedule


class LedgerError(Exception):
    category = "LedgerError"


class ZeroAmount(LedgerError):
    category = "ZeroAmount"


class UnknownAccount(LedgerError):
    category = "UnknownAccount"


class EscrowMismatch(LedgerError):
    category = "EscrowMismatch"


class DoubleSettlement(LedgerError):
    category = "DoubleSettlement"


class AccountKind(enum.Enum):
    ASKER = "PartyQ"
    ANSWERER = "PartyA"
    BROKER = "BrokerX"
    ESCROW = "Escrow"
    CHARITY = "Charity"


class Memo(enum.Enum):
    Q_PAYMENT = "QPayment"
    Q_DEPOSIT = "QDeposit"
    A_STAKE = "AStake"
    FEE_TO_X = "FeeToX"
    REWARD_TO_A = "RewardToA"
    REFUND_TO_Q = "RefundToQ"
    STAKE_RETURN_TO_A = "StakeReturnToA"
    CHARITY_RESIDUAL = "CharityResidual"


DEPOSIT_MEMOS = frozenset({Memo.Q_PAYMENT, Memo.Q_DEPOSIT, Memo.A_STAKE})
PAYOUT_MEMOS = frozenset(
    {Memo.FEE_TO_X, Memo.REWARD_TO_A, Memo.REFUND_TO_Q,
     Memo.STAKE_RETURN_TO_A, Memo.CHARITY_RESIDUAL}
)

_MEMO_FOR_KIND = {AccountKind.ASKER: (Memo.Q_PAYMENT, Memo.Q_DEPOSIT),
                  AccountKind.ANSWERER: (Memo.A_STAKE,)}


@dataclass(frozen=True, slots=True)
class Posting:
    """One money movement: `amount` cents from account `debit` to account `credit`."""

    seq: int
    txn_id: str
    debit: str
    credit: str
    amount: int
    memo: Memo

    def to_line(self) -> str:
        return "\t".join(
            (str(self.seq), self.txn_id, self.debit, self.credit,
             str(self.amount), self.memo.value)
        )

    @classmethod
    def from_line(cls, line: str) -> "Posting":
        seq, txn_id, debit, credit, amount, memo = line.rstrip("\n").split("\t")
        return cls(int(seq), txn_id, debit, credit, int(amount), Memo(memo))


@dataclass
class Account:
    id: str
    kind: AccountKind
    balance: int = 0  # signed net position; deposit amounts themselves are never negative


def _check_id(account_id: str) -> str:
    if not account_id or "\t" in account_id or "\n" in account_id:
        raise ValueError(f"account/txn id must be non-empty and tab/newline-free: {account_id!r}")
    return account_id


@dataclass
class AuditViolation:
    seq: int
    code: str
    detail: str


@dataclass
class AuditReport:
    violations: list[AuditViolation]
    account_nets: dict[str, int]
    txn_escrow: dict[str, int]       # remaining escrow per transaction
    settled_txns: set[str]

    @property
    def healthy(self) -> bool:
        return not self.violations


class Ledger:
    """Single-writer account book; snapshot() for concurrent readers."""

    BROKER = "broker"
    CHARITY = "charity"

    def __init__(self, broker_account: str = BROKER, charity_account: str = CHARITY):
        self.accounts: dict[str, Account] = {}
        self.postings: list[Posting] = []
        self._next_seq = 1
        self._settled: set[str] = set()
        # txn_id -> (asker account, answerer account, total staked); kept in
        # step with the log so settlement never rescans it.
        self._txn_parties: dict[str, list] = {}
        self.broker_account = broker_account
        self.charity_account = charity_account
        self.register_account(broker_account, AccountKind.BROKER)
        self.register_account(charity_account, AccountKind.CHARITY)

    # -- accounts ------------------------------------------------------------

    def register_account(self, account_id: str, kind: AccountKind) -> Account:
        _check_id(account_id)
        existing = self.accounts.get(account_id)
        if existing is not None:
            if existing.kind is not kind:
                raise ValueError(f"account {account_id} already registered as {existing.kind.value}")
            return existing
        account = Account(id=account_id, kind=kind)
        self.accounts[account_id] = account
        return account

    def escrow_account(self, txn_id: str) -> str:
        account_id = f"escrow:{txn_id}"
        self.register_account(account_id, AccountKind.ESCROW)
        return account_id

    def balance(self, account_id: str) -> int:
        account = self.accounts.get(account_id)
        if account is None:
            raise UnknownAccount(f"no such account: {account_id}")
        return account.balance

    def escrow_balance(self, txn_id: str) -> int:
        account = self.accounts.get(f"escrow:{txn_id}")
        return account.balance if account else 0

    def is_settled(self, txn_id: str) -> bool:
        return txn_id in self._settled

    # -- write path ----------------------------------------------------------

    def _append(self, txn_id: str, debit: str, credit: str, amount: int, memo: Memo) -> Posting:
        require_amount(amount)
        if amount == 0:
            raise ZeroAmount(f"posting amount must be > 0 ({memo.value} on {txn_id})")
        if debit == credit:
            raise ValueError("debit and credit accounts must differ")
        for account_id in (debit, credit):
            if account_id not in self.accounts:
                raise UnknownAccount(f"no such account: {account_id}")
        debit_account, credit_account = self.accounts[debit], self.accounts[credit]
        if debit_account.kind is AccountKind.ESCROW and debit_account.balance < amount:
            raise EscrowMismatch(
                f"escrow {debit} holds {debit_account.balance}, cannot pay {amount}"
            )
        posting = Posting(self._next_seq, _check_id(txn_id), debit, credit, amount, memo)
        self.postings.append(posting)
        self._next_seq += 1
        debit_account.balance -= amount
        credit_account.balance += amount
        return posting

    def post_deposit(self, txn_id: str, from_account: str, amount: int, memo: Memo) -> Posting:
        """Escrow an inflow from the asker or the answerer."""
        if amount == 0:
            raise ZeroAmount("deposit amount must be > 0")
        account = self.accounts.get(from_account)
        if account is None:
            raise UnknownAccount(f"no such account: {from_account}")
        if account.kind not in (AccountKind.ASKER, AccountKind.ANSWERER):
            raise ValueError(f"deposits come from parties, not {account.kind.value}")
        if memo not in _MEMO_FOR_KIND[account.kind]:
            raise ValueError(f"memo {memo.value} does not match a {account.kind.value} deposit")
        if txn_id in self._settled:
            raise DoubleSettlement(f"transaction {txn_id} is already settled")
        posting = self._append(txn_id, from_account, self.escrow_account(txn_id), amount, memo)
        parties = self._txn_parties.setdefault(txn_id, [None, None, 0])
        if memo is Memo.A_STAKE:
            parties[1] = from_account
            parties[2] += amount
        else:
            parties[0] = from_account
        return posting

    def post_refund(self, txn_id: str, to_account: str, amount: int) -> Posting:
        """Return escrowed money to a party before settlement (procedure-variant
        deposit return at delivery)."""
        if txn_id in self._settled:
            raise DoubleSettlement(f"transaction {txn_id} is already settled")
        return self._append(txn_id, self.escrow_account(txn_id), to_account, amount,
                            Memo.REFUND_TO_Q)

    def apply_settlement(self, txn_id: str, schedule: PayoutSchedule) -> list[Posting]:
        """Drain the transaction's escrow to exactly zero, all-or-nothing.

        The asker/answerer beneficiary accounts are resolved from the
        transaction's own deposit postings; the answerer's payout is split
        into stake return and reward using the staked amount on record.
        """
        if txn_id in self._settled:
            raise DoubleSettlement(f"transaction {txn_id} is already settled")
        escrow = self.escrow_account(txn_id)
        held = self.accounts[escrow].balance
        if held != schedule.total():
            raise EscrowMismatch(
                f"escrow for {txn_id} holds {held}, schedule disburses {schedule.total()}"
            )

        asker, answerer, staked = self._txn_parties.get(txn_id, (None, None, 0))
        if schedule.to_asker and asker is None:
            raise UnknownAccount(f"no asker deposits on record for {txn_id}")
        if schedule.to_answerer and answerer is None:
            raise UnknownAccount(f"no answerer stake on record for {txn_id}")

        moves: list[tuple[str, int, Memo]] = []
        if schedule.to_asker:
            moves.append((asker, schedule.to_asker, Memo.REFUND_TO_Q))
        if schedule.to_answerer:
            stake_return = min(schedule.to_answerer, staked)
            if stake_return:
                moves.append((answerer, stake_return, Memo.STAKE_RETURN_TO_A))
            if schedule.to_answerer > stake_return:
                moves.append((answerer, schedule.to_answerer - stake_return, Memo.REWARD_TO_A))
        if schedule.to_broker:
            moves.append((self.broker_account, schedule.to_broker, Memo.FEE_TO_X))
        if schedule.to_charity:
            moves.append((self.charity_account, schedule.to_charity, Memo.CHARITY_RESIDUAL))

        # All-or-nothing: the amount checks above guarantee every move below
        # succeeds, and marking settled first blocks re-entry.
        self._settled.add(txn_id)
        applied = [self._append(txn_id, escrow, credit, amount, memo)
                   for credit, amount, memo in moves]
        assert self.accounts[escrow].balance == 0
        return applied

    # -- serialization / replay -----------------------------------------------

    def to_lines(self) -> list[str]:
        return [posting.to_line() for posting in self.postings]

    @classmethod
    def from_lines(cls, lines: Iterable[str],
                   kinds: dict[str, AccountKind] | None = None) -> "Ledger":
        """Rebuild a ledger from its serialized posting log.

        Lenient by design: postings are applied as recorded without write-path
        validation, so that `audit` can flag a broken log. Account kinds come
        from `kinds` where given, else from the built-in id conventions.
        """
        ledger = cls()
        for raw in lines:
            if not raw.strip():
                continue
            posting = Posting.from_line(raw)
            for account_id in (posting.debit, posting.credit):
                if account_id not in ledger.accounts:
                    ledger.register_account(account_id, _infer_kind(account_id, kinds))
            ledger.postings.append(posting)
            ledger.accounts[posting.debit].balance -= posting.amount
            ledger.accounts[posting.credit].balance += posting.amount
            ledger._next_seq = max(ledger._next_seq, posting.seq + 1)
            if posting.memo in DEPOSIT_MEMOS:
                parties = ledger._txn_parties.setdefault(posting.txn_id, [None, None, 0])
                if posting.memo is Memo.A_STAKE:
                    parties[1] = posting.debit
                    parties[2] += posting.amount
                else:
                    parties[0] = posting.debit
            if posting.memo in PAYOUT_MEMOS and posting.memo is not Memo.REFUND_TO_Q:
                ledger._settled.add(posting.txn_id)
        return ledger

    def snapshot_balances(self) -> dict[str, int]:
        return {account_id: account.balance for account_id, account in self.accounts.items()}

    # -- audit ----------------------------------------------------------------

    def audit(self) -> AuditReport:
        """Re-derive everything from the posting log and report breaches as data."""
        violations: list[AuditViolation] = []
        nets: dict[str, int] = {account_id: 0 for account_id in self.accounts}
        txn_escrow: dict[str, int] = {}
        settled: set[str] = set()
        charity_balance = 0
        last_seq = 0

        for posting in self.postings:
            if posting.seq <= last_seq:
                violations.append(AuditViolation(
                    posting.seq, "SeqNotIncreasing",
                    f"seq {posting.seq} follows {last_seq}"))
            last_seq = max(last_seq, posting.seq)
            if posting.amount <= 0:
                violations.append(AuditViolation(
                    posting.seq, "NonPositiveAmount", f"amount {posting.amount}"))
            if posting.debit == posting.credit:
                violations.append(AuditViolation(
                    posting.seq, "SelfTransfer", f"account {posting.debit}"))

            nets[posting.debit] = nets.get(posting.debit, 0) - posting.amount
            nets[posting.credit] = nets.get(posting.credit, 0) + posting.amount

            for account_id, delta in ((posting.debit, -posting.amount),
                                      (posting.credit, posting.amount)):
                kind = self._kind_of(account_id)
                if kind is AccountKind.ESCROW:
                    txn = account_id.split(":", 1)[1] if ":" in account_id else posting.txn_id
                    txn_escrow[txn] = txn_escrow.get(txn, 0) + delta
                    if txn_escrow[txn] < 0:
                        violations.append(AuditViolation(
                            posting.seq, "EscrowOverdraft",
                            f"escrow for {txn} at {txn_escrow[txn]}"))
                if kind is AccountKind.CHARITY:
                    charity_balance += delta
                    if delta < 0:
                        violations.append(AuditViolation(
                            posting.seq, "CharityDebit",
                            f"charity drained by {-delta}"))

            if posting.memo in PAYOUT_MEMOS and posting.memo is not Memo.REFUND_TO_Q:
                settled.add(posting.txn_id)

        if sum(nets.values()) != 0:
            violations.append(AuditViolation(last_seq, "Unbalanced",
                                             f"book nets to {sum(nets.values())}"))
        for txn in settled:
            if txn_escrow.get(txn, 0) != 0:
                violations.append(AuditViolation(
                    last_seq, "SettledEscrowNonZero",
                    f"settled {txn} still holds {txn_escrow.get(txn, 0)}"))

        return AuditReport(violations=violations, account_nets=nets,
                           txn_escrow=txn_escrow, settled_txns=settled)

    def _kind_of(self, account_id: str) -> AccountKind:
        account = self.accounts.get(account_id)
        if account is not None:
            return account.kind
        return _infer_kind(account_id, None)


def _infer_kind(account_id: str, kinds: dict[str, AccountKind] | None) -> AccountKind:
    if kinds and account_id in kinds:
        return kinds[account_id]
    if account_id.startswith("escrow:"):
        return AccountKind.ESCROW
    if account_id == Ledger.CHARITY:
        return AccountKind.CHARITY
    if account_id == Ledger.BROKER:
        return AccountKind.BROKER
    if account_id.startswith("answerer"):
        return AccountKind.ANSWERER
    return AccountKind.ASKER
