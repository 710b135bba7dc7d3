"""Append-only event log: the single durable artifact of the broker service.

One record per line, seq-prefixed, canonical JSON, so a log replays
bit-exactly into identical service state. The append is the linearization
point of every state change: a record fully on disk happened; anything less
did not. Recovery therefore tolerates exactly one torn line at the tail
(a write the crash interrupted) and treats damage anywhere else as real
corruption.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path


class CorruptLog(Exception):
    category = "CorruptLog"


@dataclass(frozen=True)
class EventRecord:
    seq: int
    kind: str
    txn_id: str | None
    actor: str | None  # pseudonym of the acting party, or "broker"/"system"
    ts: str            # ISO-8601 UTC, fixed at append time
    payload: dict

    def to_line(self) -> str:
        body = json.dumps(
            {"kind": self.kind, "txn_id": self.txn_id, "actor": self.actor,
             "ts": self.ts, "payload": self.payload},
            sort_keys=True, separators=(",", ":"),
        )
        return f"{self.seq}\t{body}"

    @classmethod
    def from_line(cls, line: str) -> "EventRecord":
        seq_text, _, body = line.partition("\t")
        data = json.loads(body)
        return cls(seq=int(seq_text), kind=data["kind"], txn_id=data["txn_id"],
                   actor=data["actor"], ts=data["ts"], payload=data["payload"])


class EventLog:
    def __init__(self, path: str | Path, fsync: bool = True):
        self.path = Path(path)
        self.fsync = fsync
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._repair_tail()
        self._fh = open(self.path, "a", encoding="utf-8")

    def _repair_tail(self) -> None:
        """Make the file newline-terminated before appending.

        A crash mid-append leaves a torn final line: unreadable tails are
        truncated away (the write never happened), a readable tail just lost
        its newline and gets it back.
        """
        if not self.path.exists():
            return
        raw = self.path.read_bytes()
        if not raw or raw.endswith(b"\n"):
            return
        head, _, tail = raw.rpartition(b"\n")
        try:
            EventRecord.from_line(tail.decode("utf-8"))
        except Exception:
            keep = head + b"\n" if head else b""
            self.path.write_bytes(keep)
        else:
            self.path.write_bytes(raw + b"\n")

    def append(self, record: EventRecord) -> None:
        self._fh.write(record.to_line() + "\n")
        self._fh.flush()
        if self.fsync:
            os.fsync(self._fh.fileno())

    def close(self) -> None:
        self._fh.close()

    @staticmethod
    def read_records(path: str | Path) -> list[EventRecord]:
        """Replay the log, dropping a torn final line, rejecting anything worse."""
        path = Path(path)
        if not path.exists():
            return []
        raw = path.read_text(encoding="utf-8")
        trailing_complete = raw.endswith("\n")
        lines = raw.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        records: list[EventRecord] = []
        for i, line in enumerate(lines):
            if not line:
                raise CorruptLog(f"blank line {i + 1} inside event log")
            try:
                record = EventRecord.from_line(line)
            except (ValueError, KeyError, json.JSONDecodeError) as exc:
                last = i == len(lines) - 1
                if last and not trailing_complete:
                    break  # torn tail from an interrupted append; discard
                raise CorruptLog(f"unreadable record at line {i + 1}: {exc}") from exc
            expected = records[-1].seq + 1 if records else 1
            if record.seq != expected:
                raise CorruptLog(
                    f"seq {record.seq} at line {i + 1}, expected {expected}"
                )
            records.append(record)
        return records
