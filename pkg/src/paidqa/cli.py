"""Operator command line: local tooling plus a client for the broker API.

Local subcommands (validate-params, settle-dryrun, sim, incentives, ledger
audit on a postings file) never touch a server. The txn group, expire-sweep,
and ledger audit without a file drive a running service over HTTP.

Exit codes: 0 success, 1 protocol/API error (with a machine-readable
category), 2 usage error. --json switches stdout to the same structured
records the API emits, so scripts never parse prose.
"""

from __future__ import annotations

import json
import sys
from datetime import datetime, timedelta, timezone
from pathlib import Path

import click
import httpx

from .config import load_config
from .ledger import Ledger
from .money import MoneyError, format_cents, parse_dollars
from .protocol import (
    Outcome,
    ProtocolError,
    TransactionParams,
    Variant,
    settle,
    validate_params,
)
from .service import params_from_dict, parse_ts

OUTCOMES = {"correct": Outcome.VERIFIED_CORRECT,
            "wrong": Outcome.VERIFIED_WRONG,
            "expired": Outcome.EXPIRED}

VARIANTS = {"post-hoc-claim": Variant.POST_HOC_CLAIM,
            "prespecified-procedure": Variant.PRESPECIFIED_PROCEDURE}


def fail(category: str, message: str, json_mode: bool) -> None:
    if json_mode:
        click.echo(json.dumps({"error": {"category": category, "message": message}}))
    else:
        click.echo(f"error {category}: {message}", err=True)
    sys.exit(1)


def emit(data, json_mode: bool, text: str | None = None) -> None:
    if json_mode:
        click.echo(json.dumps(data, sort_keys=True))
    elif text is not None:
        click.echo(text)
    else:
        click.echo(json.dumps(data, sort_keys=True, indent=2))


def money_cents(value) -> int:
    if isinstance(value, int):
        return value
    return parse_dollars(str(value))


def load_params_file(path: str) -> TransactionParams:
    raw = json.loads(Path(path).read_text())
    for key in ("price", "asker_deposit", "answerer_stake", "broker_fee", "answerer_reward"):
        raw[key] = money_cents(raw[key])
    return params_from_dict(raw)


param_options = [
    click.option("--price", required=True, help="asker's payment, dollars"),
    click.option("--asker-deposit", required=True, help="asker's reporting deposit, dollars"),
    click.option("--answerer-stake", required=True, help="answerer's stake, dollars"),
    click.option("--broker-fee", required=True, help="broker's fixed fee, dollars"),
    click.option("--answerer-reward", required=True, help="answerer's reward, dollars"),
    click.option("--deadline", default=None,
                 help="verification deadline, ISO-8601 UTC (default: +30 days)"),
    click.option("--variant", type=click.Choice(sorted(VARIANTS)), default="post-hoc-claim"),
]


def with_param_options(command):
    for option in reversed(param_options):
        command = option(command)
    return command


def params_from_flags(price, asker_deposit, answerer_stake, broker_fee,
                      answerer_reward, deadline, variant) -> TransactionParams:
    when = (parse_ts(deadline) if deadline
            else datetime.now(timezone.utc) + timedelta(days=30))
    return TransactionParams(
        price=parse_dollars(price),
        asker_deposit=parse_dollars(asker_deposit),
        answerer_stake=parse_dollars(answerer_stake),
        broker_fee=parse_dollars(broker_fee),
        answerer_reward=parse_dollars(answerer_reward),
        deadline=when,
        variant=VARIANTS[variant],
    )


@click.group()
@click.option("--json", "json_mode", is_flag=True, help="structured output for scripts")
@click.pass_context
def main(ctx, json_mode):
    """Escrow-brokered paid Q&A: validation, settlement, simulation, service client."""
    ctx.ensure_object(dict)
    ctx.obj["json"] = json_mode


@main.command("validate-params")
@with_param_options
@click.pass_context
def validate_params_cmd(ctx, **kwargs):
    """Check a set of economic terms against every structural rule."""
    json_mode = ctx.obj["json"]
    try:
        params = params_from_flags(**kwargs)
        validate_params(params, now=datetime.now(timezone.utc))
    except (ProtocolError, MoneyError, ValueError) as exc:
        fail(getattr(exc, "category", type(exc).__name__), str(exc), json_mode)
    emit({"valid": True}, json_mode, "terms valid")


@main.command("settle-dryrun")
@with_param_options
@click.option("--outcome", type=click.Choice(sorted(OUTCOMES)), required=True)
@click.pass_context
def settle_dryrun(ctx, outcome, **kwargs):
    """Print the payout schedule for given terms and outcome; touches no state."""
    json_mode = ctx.obj["json"]
    try:
        params = params_from_flags(**kwargs)
        validate_params(params, now=datetime.now(timezone.utc))
        schedule = settle(params, OUTCOMES[outcome])
    except (ProtocolError, MoneyError, ValueError) as exc:
        fail(getattr(exc, "category", type(exc).__name__), str(exc), json_mode)
        return
    data = {"to_asker": schedule.to_asker, "to_answerer": schedule.to_answerer,
            "to_broker": schedule.to_broker, "to_charity": schedule.to_charity}
    text = "\n".join(f"{k}\t{format_cents(v)}" for k, v in data.items())
    emit(data, json_mode, text)


# --- server client -----------------------------------------------------------

server_option = click.option("--server", envvar="PAIDQA_SERVER",
                             default="http://127.0.0.1:8642", show_default=True)
token_option = click.option("--token", envvar="PAIDQA_TOKEN", required=True,
                            help="bearer token (or set PAIDQA_TOKEN)")


def call_api(ctx, server: str, token: str, method: str, path: str,
             payload: dict | None = None):
    json_mode = ctx.obj["json"]
    try:
        response = httpx.request(
            method, server.rstrip("/") + path,
            json=payload,
            headers={"Authorization": f"Bearer {token}"},
            timeout=30.0,
        )
    except httpx.HTTPError as exc:
        fail("ServerUnreachable", str(exc), json_mode)
        return None
    body = response.json()
    if response.status_code >= 400:
        error = body.get("error", {})
        fail(error.get("category", "ApiError"),
             error.get("message", response.text), json_mode)
        return None
    return body


@main.group()
def txn():
    """Drive live transactions on a running broker service."""


@txn.command("create")
@server_option
@token_option
@click.option("--params-file", required=True, type=click.Path(exists=True))
@click.option("--question-file", required=True, type=click.Path(exists=True),
              help="JSON: question_text, answer_category, clarifying_paragraphs")
@click.option("--procedure-file", type=click.Path(exists=True), default=None)
@click.pass_context
def txn_create(ctx, server, token, params_file, question_file, procedure_file):
    params = load_params_file(params_file)
    payload = {
        "params": {
            "price": params.price, "asker_deposit": params.asker_deposit,
            "answerer_stake": params.answerer_stake, "broker_fee": params.broker_fee,
            "answerer_reward": params.answerer_reward,
            "deadline": params.deadline.isoformat(), "variant": params.variant.value,
        },
        "question": json.loads(Path(question_file).read_text()),
        "procedure": json.loads(Path(procedure_file).read_text()) if procedure_file else None,
    }
    result = call_api(ctx, server, token, "POST", "/txns", payload)
    emit(result, ctx.obj["json"], f"created {result['txn_id']} (phase {result['phase']})")


@txn.command("fund")
@server_option
@token_option
@click.argument("txn_id")
@click.option("--amount", required=True, help="dollars")
@click.pass_context
def txn_fund(ctx, server, token, txn_id, amount):
    result = call_api(ctx, server, token, "POST", f"/txns/{txn_id}/fund",
                      {"amount": parse_dollars(amount)})
    emit(result, ctx.obj["json"],
         f"funded {result['memo']} -> escrow {format_cents(result['escrow'])},"
         f" phase {result['phase']}")


@txn.command("answer")
@server_option
@token_option
@click.argument("txn_id")
@click.option("--body-file", required=True, type=click.Path(exists=True),
              help="JSON answer body matching the agreed category")
@click.pass_context
def txn_answer(ctx, server, token, txn_id, body_file):
    body = json.loads(Path(body_file).read_text())
    result = call_api(ctx, server, token, "POST", f"/txns/{txn_id}/answer", {"body": body})
    emit(result, ctx.obj["json"],
         f"answer staked {format_cents(result['staked'])} as {result['pseudonym']}")


@txn.command("deliver")
@server_option
@token_option
@click.argument("txn_id")
@click.pass_context
def txn_deliver(ctx, server, token, txn_id):
    result = call_api(ctx, server, token, "POST", f"/txns/{txn_id}/deliver")
    emit(result, ctx.obj["json"], f"delivered; phase {result['phase']}")


@txn.command("claim")
@server_option
@token_option
@click.argument("txn_id")
@click.option("--verdict", type=click.Choice(["Correct", "Wrong"]), required=True)
@click.option("--evidence-summary", multiple=True, help="repeatable")
@click.pass_context
def txn_claim(ctx, server, token, txn_id, verdict, evidence_summary):
    evidence = [{"summary": s, "blob_hex": ""} for s in evidence_summary]
    result = call_api(ctx, server, token, "POST", f"/txns/{txn_id}/claim",
                      {"verdict": verdict, "evidence": evidence})
    emit(result, ctx.obj["json"], f"claim filed; phase {result['phase']}")


@txn.command("decide")
@server_option
@token_option
@click.argument("txn_id")
@click.option("--decision", type=click.Choice(["approve", "deny", "procedure"]),
              required=True)
@click.option("--rationale", default="")
@click.pass_context
def txn_decide(ctx, server, token, txn_id, decision, rationale):
    result = call_api(ctx, server, token, "POST", f"/txns/{txn_id}/decide",
                      {"decision": decision, "rationale": rationale})
    text = f"decided; phase {result['phase']}"
    if "schedule" in result:
        text += "".join(f"\n{k}\t{format_cents(v)}" for k, v in result["schedule"].items())
    emit(result, ctx.obj["json"], text)


@txn.command("status")
@server_option
@token_option
@click.argument("txn_id")
@click.pass_context
def txn_status(ctx, server, token, txn_id):
    result = call_api(ctx, server, token, "GET", f"/txns/{txn_id}")
    emit(result, ctx.obj["json"])


@main.command("expire-sweep")
@server_option
@token_option
@click.pass_context
def expire_sweep_cmd(ctx, server, token):
    """Settle every transaction whose deadline has passed."""
    result = call_api(ctx, server, token, "POST", "/expire-sweep")
    emit(result, ctx.obj["json"],
         f"expired {len(result['expired'])} transaction(s)")


@main.group("ledger")
def ledger_group():
    """Inspect the double-entry book."""


@ledger_group.command("audit")
@click.option("--postings", type=click.Path(exists=True), default=None,
              help="audit a serialized posting log instead of a live service")
@click.option("--server", envvar="PAIDQA_SERVER", default="http://127.0.0.1:8642",
              show_default=True)
@click.option("--token", envvar="PAIDQA_TOKEN", default=None)
@click.pass_context
def ledger_audit(ctx, postings, server, token):
    json_mode = ctx.obj["json"]
    if postings:
        report = Ledger.from_lines(Path(postings).read_text().splitlines()).audit()
        data = {
            "healthy": report.healthy,
            "violations": [{"seq": v.seq, "code": v.code, "detail": v.detail}
                           for v in report.violations],
            "account_nets": report.account_nets,
            "settled_txns": sorted(report.settled_txns),
        }
    else:
        if not token:
            fail("UsageError", "--token required for a live audit", json_mode)
        data = call_api(ctx, server, token, "GET", "/ledger/audit")
    status = "healthy" if data["healthy"] else f"{len(data['violations'])} violation(s)"
    if not data["healthy"]:
        emit(data, json_mode, "ledger audit: " + status + "".join(
            f"\n  seq {v['seq']}: {v['code']} ({v['detail']})" for v in data["violations"]))
        sys.exit(1)
    emit(data, json_mode, "ledger audit: " + status)


# --- simulation ---------------------------------------------------------------

@main.group()
def sim():
    """Monte Carlo runs of the full protocol."""


@sim.command("run")
@click.option("--seed", type=int, required=True)
@click.option("--n", "n_transactions", type=int, required=True)
@click.option("--params-file", type=click.Path(exists=True), default=None,
              help="JSON terms; defaults to the worked $100/$100/$50/$50/$50 example")
@click.option("--answerer-strategy", default="rational", show_default=True,
              help="rational | always-enter | threshold:<p>")
@click.option("--q-verifies", type=float, default=1.0, show_default=True)
@click.option("--x-approves", type=float, default=1.0, show_default=True)
@click.option("--out", "outdir", type=click.Path(), default=None,
              help="directory for report.tsv, transcript.ndjson, figures")
@click.option("--figures/--no-figures", default=True, show_default=True)
@click.pass_context
def sim_run(ctx, seed, n_transactions, params_file, answerer_strategy,
            q_verifies, x_approves, outdir, figures):
    from .simulate import SimulationConfig, run

    json_mode = ctx.obj["json"]
    params = (load_params_file(params_file) if params_file
              else TransactionParams(100_00, 100_00, 50_00, 50_00, 50_00,
                                     datetime.now(timezone.utc) + timedelta(days=30)))
    try:
        config = SimulationConfig(n_transactions=n_transactions, params=params,
                                  seed=seed, answerer_strategy=answerer_strategy,
                                  q_verifies=q_verifies, x_approves=x_approves)
        result = run(config)
    except (ProtocolError, ValueError) as exc:
        fail(getattr(exc, "category", type(exc).__name__), str(exc), json_mode)
        return
    if outdir:
        from .report import simulation_outputs
        written = simulation_outputs(result, outdir, figures=figures)
        for path in written:
            click.echo(f"wrote {path}", err=True)
    emit(dict(result.report.rows()), json_mode, result.report.to_tsv().rstrip("\n"))


@sim.command("replay")
@click.option("--transcript", type=click.Path(exists=True), required=True)
@click.pass_context
def sim_replay(ctx, transcript):
    from .simulate import CorruptTranscript, replay

    json_mode = ctx.obj["json"]
    try:
        report = replay(Path(transcript).read_text().splitlines())
    except CorruptTranscript as exc:
        fail("CorruptTranscript", str(exc), json_mode)
        return
    emit(dict(report.rows()), json_mode, report.to_tsv().rstrip("\n"))


@main.group()
def incentives():
    """Closed-form expected-payoff tooling."""


@incentives.command("sweep")
@click.option("--params-file", type=click.Path(exists=True), default=None)
@click.option("--steps", type=int, default=100, show_default=True)
@click.option("--q-verifies", default="1")
@click.option("--x-approves", default="1")
@click.option("--out", "outdir", type=click.Path(), required=True)
@click.option("--figures/--no-figures", default=True, show_default=True)
@click.pass_context
def incentives_sweep(ctx, params_file, steps, q_verifies, x_approves, outdir, figures):
    from fractions import Fraction

    from .report import incentive_sweep_outputs

    params = (load_params_file(params_file) if params_file
              else TransactionParams(100_00, 100_00, 50_00, 50_00, 50_00,
                                     datetime.now(timezone.utc) + timedelta(days=30)))
    written = incentive_sweep_outputs(params, outdir, steps=steps,
                                      q_verifies=Fraction(q_verifies),
                                      x_approves=Fraction(x_approves), figures=figures)
    for path in written:
        click.echo(f"wrote {path}")


@main.command("serve")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.pass_context
def serve(ctx, config_path):
    """Run the broker service (config file + PAIDQA_* environment overrides)."""
    import uvicorn

    from .api import create_app, start_sweeper
    from .service import ExchangeService

    config = load_config(config_path)
    service = ExchangeService(config)
    app = create_app(service)
    stop = start_sweeper(service, config.sweep_interval_s)
    try:
        uvicorn.run(app, host=config.listen_host, port=config.listen_port,
                    log_level="warning")
    finally:
        stop.set()
        service.close()


if __name__ == "__main__":
    main()
