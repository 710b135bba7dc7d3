"""Record real API responses as fixtures for the frontend contract tests.

Spins up the actual broker service behind uvicorn, walks one transaction to
each settlement outcome over plain HTTP, and snapshots every payload the
dashboards consume. Run from the repo root:

    python3 frontend/scripts/record_fixtures.py

Deterministic: fixed service clock, fixed token counter, fixed terms.
"""

import itertools
import json
import socket
import threading
import time
from datetime import datetime, timedelta, timezone
from pathlib import Path

import httpx
import uvicorn

from paidqa.api import create_app
from paidqa.config import Identity, ServiceConfig
from paidqa.service import ExchangeService

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

START = datetime(2026, 3, 1, 9, 0, 0, tzinfo=timezone.utc)
DEADLINE = datetime(2026, 3, 8, 9, 0, 0, tzinfo=timezone.utc)

TOKENS = {
    "tok-asker": Identity(id="alice-e6051b", role="asker",
                          contact_handle="alice@secret-lab.example",
                          payment_handle="iban-alice-9911"),
    "tok-answerer": Identity(id="bob-f22c84", role="answerer",
                             contact_handle="bob@hidden-bench.example",
                             payment_handle="iban-bob-4410"),
    "tok-broker": Identity(id="xavier-broker", role="broker",
                           contact_handle="desk@broker.example",
                           payment_handle="iban-broker-0001"),
}

PARAMS = {
    "price": 100_00, "asker_deposit": 100_00, "answerer_stake": 50_00,
    "broker_fee": 50_00, "answerer_reward": 50_00,
    "deadline": DEADLINE.isoformat(), "variant": "post_hoc_claim",
}

QUESTION = {
    "question_text": "What molecule enables the target reaction?",
    "answer_category": {
        "description": "a molecule, fully specified in its structure",
        "schema": [{"name": "structure", "kind": "text", "units": None, "choices": []}],
    },
    "clarifying_paragraphs": ["Reaction conditions are ambient."],
}

ANSWER = {"structure": "C8H10N4O2 with a cyclopentane bridge"}


class Clock:
    def __init__(self):
        self.now = START

    def __call__(self):
        return self.now


def main():
    clock = Clock()
    tmp_log = Path("/tmp/paidqa-fixtures-events.log")
    tmp_log.unlink(missing_ok=True)
    config = ServiceConfig(log_path=str(tmp_log), fsync=False, tokens=TOKENS)
    counter = itertools.count(1)
    service = ExchangeService(config, clock=clock,
                              token_factory=lambda: f"{next(counter):06x}")
    app = create_app(service)

    with socket.socket() as probe:
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]
    server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=port,
                                           log_level="error"))
    threading.Thread(target=server.run, daemon=True).start()
    base = f"http://127.0.0.1:{port}"
    for _ in range(100):
        try:
            if httpx.get(base + "/health", timeout=1).status_code == 200:
                break
        except Exception:
            time.sleep(0.05)

    def call(method, path, token, payload=None, expect_error=False):
        response = httpx.request(method, base + path, json=payload,
                                 headers={"Authorization": f"Bearer {token}"},
                                 timeout=10)
        if not expect_error:
            response.raise_for_status()
        return response.json()

    fixtures = {}

    def lifecycle(verdict=None, expire=False):
        created = call("POST", "/txns", "tok-asker",
                       {"params": PARAMS, "question": QUESTION, "procedure": None})
        txn = created["txn_id"]
        call("POST", f"/txns/{txn}/fund", "tok-asker", {"amount": 100_00})
        call("POST", f"/txns/{txn}/fund", "tok-asker", {"amount": 100_00})
        call("POST", f"/txns/{txn}/answer", "tok-answerer", {"body": ANSWER})
        call("POST", f"/txns/{txn}/deliver", "tok-broker")
        if expire:
            clock.now = DEADLINE + timedelta(hours=1)
            call("POST", "/expire-sweep", "tok-broker")
            clock.now = START + timedelta(days=4)  # fixtures read at a common instant
        else:
            call("POST", f"/txns/{txn}/claim", "tok-asker",
                 {"verdict": verdict,
                  "evidence": [{"summary": "independent replication", "blob_hex": ""}]})
            call("POST", f"/txns/{txn}/decide", "tok-broker",
                 {"decision": "approve", "rationale": "evidence convincing"})
        return txn

    # one open question for the answerer dashboard listing
    open_created = call("POST", "/txns", "tok-asker",
                        {"params": PARAMS, "question": QUESTION, "procedure": None})
    call("POST", f"/txns/{open_created['txn_id']}/fund", "tok-asker", {"amount": 100_00})
    call("POST", f"/txns/{open_created['txn_id']}/fund", "tok-asker", {"amount": 100_00})
    fixtures["open_questions"] = call("GET", "/questions/open", "tok-answerer")

    outcomes = {}
    correct_txn = lifecycle("Correct")
    wrong_txn = lifecycle("Wrong")
    expired_txn = lifecycle(expire=True)
    for name, txn in (("settled_correct", correct_txn), ("settled_wrong", wrong_txn),
                      ("settled_expired", expired_txn)):
        outcomes[name] = {
            "asker_view": call("GET", f"/txns/{txn}", "tok-asker"),
            "answerer_view": call("GET", f"/txns/{txn}", "tok-answerer"),
            "payoffs": call("GET", f"/txns/{txn}/payoffs", "tok-answerer"),
        }
    fixtures.update(outcomes)

    # a transaction still inside its claim window, for countdown tests
    live = call("POST", "/txns", "tok-asker",
                {"params": PARAMS, "question": QUESTION, "procedure": None})
    live_txn = live["txn_id"]
    call("POST", f"/txns/{live_txn}/fund", "tok-asker", {"amount": 100_00})
    call("POST", f"/txns/{live_txn}/fund", "tok-asker", {"amount": 100_00})
    call("POST", f"/txns/{live_txn}/answer", "tok-answerer", {"body": ANSWER})
    call("POST", f"/txns/{live_txn}/deliver", "tok-broker")
    fixtures["claim_window"] = {
        "asker_view": call("GET", f"/txns/{live_txn}", "tok-asker"),
        "time_before_deadline": call("GET", "/time", "tok-asker"),
    }
    saved_now = clock.now
    clock.now = DEADLINE + timedelta(seconds=1)
    fixtures["claim_window"]["time_after_deadline"] = call("GET", "/time", "tok-asker")
    fixtures["claim_window"]["claim_rejected"] = call(
        "POST", f"/txns/{live_txn}/claim", "tok-asker",
        {"verdict": "Correct", "evidence": []}, expect_error=True)
    clock.now = saved_now

    fixtures["errors"] = {
        "funding_mismatch": call("POST", f"/txns/{live_txn}/fund", "tok-asker",
                                 {"amount": 1}, expect_error=True),
        "role_violation": call("POST", f"/txns/{live_txn}/deliver", "tok-answerer",
                               expect_error=True),
    }
    fixtures["broker"] = {
        "txn_view": call("GET", f"/txns/{correct_txn}", "tok-broker"),
        "audit": call("GET", "/ledger/audit", "tok-broker"),
        "queue": call("GET", "/txns", "tok-broker"),
    }
    fixtures["time"] = call("GET", "/time", "tok-asker")

    FIXTURES.mkdir(exist_ok=True)
    for name, payload in fixtures.items():
        path = FIXTURES / f"{name}.json"
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        print(f"wrote {path}")

    server.should_exit = True


if __name__ == "__main__":
    main()
