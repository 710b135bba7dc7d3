"""HTTP facade over the exchange service.

Thin by design: parse the request, hand it to the service, serialize the
response. All authorization, anonymity filtering, and protocol rules live in
the service; the API maps error categories onto status codes and never adds
fields of its own, so whatever a role may not see here, it cannot see at all.
"""

from __future__ import annotations

import threading

from fastapi import Body, FastAPI, Header, Request
from fastapi.responses import JSONResponse

from . import adjudication as adj
from .ledger import LedgerError
from .money import MoneyError
from .protocol import ProtocolError
from .service import (
    ExchangeService,
    RoleViolation,
    UnknownToken,
    UnknownTransaction,
    params_from_dict,
)

_STATUS_FOR = (
    (UnknownToken, 401),
    (RoleViolation, 403),
    (adj.NotBroker, 403),
    (UnknownTransaction, 404),
)


def _status_for(exc: Exception) -> int:
    for cls, status in _STATUS_FOR:
        if isinstance(exc, cls):
            return status
    if isinstance(exc, (ProtocolError, LedgerError)):
        return 409
    return 400


def _bearer(authorization: str | None) -> str | None:
    if authorization and authorization.lower().startswith("bearer "):
        return authorization[7:].strip()
    return authorization


def create_app(service: ExchangeService) -> FastAPI:
    app = FastAPI(title="paidqa exchange", docs_url=None, redoc_url=None)
    app.state.service = service

    @app.exception_handler(ProtocolError)
    @app.exception_handler(LedgerError)
    @app.exception_handler(MoneyError)
    @app.exception_handler(ValueError)
    @app.exception_handler(KeyError)
    async def on_error(request: Request, exc: Exception):
        category = getattr(exc, "category", type(exc).__name__)
        return JSONResponse(status_code=_status_for(exc),
                            content={"error": {"category": category, "message": str(exc)}})

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/time")
    def server_time():
        # Deadline countdowns in clients key off this, not the client clock.
        return {"now": service.clock().isoformat()}

    @app.post("/txns")
    def create_txn(payload: dict = Body(...), authorization: str | None = Header(None)):
        params = params_from_dict(payload["params"])
        procedure = (adj.VerificationProcedure.from_dict(payload["procedure"])
                     if payload.get("procedure") else None)
        return service.create_transaction(_bearer(authorization), payload["question"],
                                          params, procedure=procedure)

    @app.post("/txns/{txn_id}/fund")
    def fund(txn_id: str, payload: dict = Body(...),
             authorization: str | None = Header(None)):
        return service.fund(_bearer(authorization), txn_id, int(payload["amount"]))

    @app.post("/txns/{txn_id}/answer")
    def submit_answer(txn_id: str, payload: dict = Body(...),
                      authorization: str | None = Header(None)):
        return service.submit_answer(_bearer(authorization), txn_id, payload["body"])

    @app.post("/txns/{txn_id}/deliver")
    def deliver(txn_id: str, authorization: str | None = Header(None)):
        return service.deliver_answer(_bearer(authorization), txn_id)

    @app.post("/txns/{txn_id}/claim")
    def file_claim(txn_id: str, payload: dict = Body(...),
                   authorization: str | None = Header(None)):
        return service.file_claim(_bearer(authorization), txn_id, payload["verdict"],
                                  evidence=payload.get("evidence"))

    @app.post("/txns/{txn_id}/decide")
    def decide(txn_id: str, payload: dict = Body(...),
               authorization: str | None = Header(None)):
        return service.decide(_bearer(authorization), txn_id, payload["decision"],
                              rationale=payload.get("rationale", ""))

    @app.post("/expire-sweep")
    def expire_sweep(authorization: str | None = Header(None)):
        return {"expired": service.expire_sweep(_bearer(authorization))}

    @app.get("/txns")
    def my_transactions(authorization: str | None = Header(None)):
        return service.my_transactions(_bearer(authorization))

    @app.get("/txns/{txn_id}")
    def txn_view(txn_id: str, authorization: str | None = Header(None)):
        return service.txn_view(_bearer(authorization), txn_id)

    @app.get("/txns/{txn_id}/payoffs")
    def payoffs(txn_id: str, authorization: str | None = Header(None)):
        return service.payoffs_view(_bearer(authorization), txn_id)

    @app.get("/questions/open")
    def open_questions(authorization: str | None = Header(None)):
        return service.open_questions(_bearer(authorization))

    @app.get("/ledger/audit")
    def ledger_audit(authorization: str | None = Header(None)):
        return service.ledger_audit(_bearer(authorization))

    return app


def start_sweeper(service: ExchangeService, interval_s: float) -> threading.Event:
    """Background deadline sweep; returns the event that stops it."""
    stop = threading.Event()

    def loop():
        while not stop.wait(interval_s):
            try:
                service.expire_sweep(None)
            except Exception:
                pass  # the sweep retries next tick; errors are transient

    threading.Thread(target=loop, name="paidqa-sweeper", daemon=True).start()
    return stop
