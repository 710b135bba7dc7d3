"""Command line: local tooling, structured output, exit codes, live client."""

import json
import random
import socket
import threading
import time

import pytest
from click.testing import CliRunner

from paidqa.cli import main
from paidqa.protocol import Outcome, settle

from conftest import golden_params
from test_protocol import random_params

PARAMS_FLAGS = [
    "--price", "100.00", "--asker-deposit", "100.00", "--answerer-stake", "50.00",
    "--broker-fee", "50.00", "--answerer-reward", "50.00",
    "--deadline", "2030-01-01T00:00:00+00:00",
]


@pytest.fixture
def runner():
    return CliRunner()


def params_file(tmp_path, params=None, name="params.json"):
    params = params or golden_params(deadline=__import__("datetime").datetime(
        2030, 1, 1, tzinfo=__import__("datetime").timezone.utc))
    path = tmp_path / name
    path.write_text(json.dumps({
        "price": params.price, "asker_deposit": params.asker_deposit,
        "answerer_stake": params.answerer_stake, "broker_fee": params.broker_fee,
        "answerer_reward": params.answerer_reward,
        "deadline": params.deadline.isoformat(), "variant": params.variant.value,
    }))
    return str(path)


class TestLocalCommands:
    def test_validate_ok(self, runner):
        result = runner.invoke(main, ["validate-params", *PARAMS_FLAGS])
        assert result.exit_code == 0, result.output

    def test_validate_split_mismatch_exits_1_with_category(self, runner):
        flags = list(PARAMS_FLAGS)
        flags[flags.index("--broker-fee") + 1] = "60.00"
        result = runner.invoke(main, ["--json", "validate-params", *flags])
        assert result.exit_code == 1
        assert json.loads(result.output)["error"]["category"] == "SplitMismatch"

    def test_settle_dryrun_expired_prints_charity_150(self, runner):
        result = runner.invoke(main, ["settle-dryrun", *PARAMS_FLAGS,
                                      "--outcome", "expired"])
        assert result.exit_code == 0
        assert "to_charity\t$150.00" in result.output

    def test_settle_dryrun_json_matches_engine_on_random_terms(self, runner):
        rng = random.Random(31)
        for _ in range(25):
            params = random_params(rng)
            flags = [
                "--price", str(params.price), "--asker-deposit", str(params.asker_deposit),
                "--answerer-stake", str(params.answerer_stake),
                "--broker-fee", str(params.broker_fee),
                "--answerer-reward", str(params.answerer_reward),
                "--deadline", "2030-01-01T00:00:00+00:00",
                "--variant", params.variant.value.replace("_", "-"),
            ]
            # dollars flags: feed cents as dollar strings
            flags = [f if i % 2 == 0 or not f.isdigit() else f"{int(f)//100}.{int(f)%100:02d}"
                     for i, f in enumerate(flags)]
            outcome = rng.choice(["correct", "wrong"])
            result = runner.invoke(main, ["--json", "settle-dryrun", *flags,
                                          "--outcome", outcome])
            assert result.exit_code == 0, result.output
            got = json.loads(result.output)
            want = settle(params, Outcome.VERIFIED_CORRECT if outcome == "correct"
                          else Outcome.VERIFIED_WRONG)
            assert got == {"to_asker": want.to_asker, "to_answerer": want.to_answerer,
                           "to_broker": want.to_broker, "to_charity": want.to_charity}

    def test_usage_error_exits_2(self, runner):
        result = runner.invoke(main, ["settle-dryrun", "--outcome", "sideways"])
        assert result.exit_code == 2


class TestSimCli:
    def test_run_is_byte_identical_for_fixed_seed(self, runner, tmp_path):
        args = ["sim", "run", "--seed", "7", "--n", "400",
                "--params-file", params_file(tmp_path)]
        first = runner.invoke(main, args)
        second = runner.invoke(main, args)
        assert first.exit_code == 0, first.output
        assert first.output == second.output

    def test_run_writes_report_figures_and_replayable_transcript(self, runner, tmp_path):
        out = tmp_path / "simout"
        result = runner.invoke(main, ["sim", "run", "--seed", "3", "--n", "200",
                                      "--params-file", params_file(tmp_path),
                                      "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert (out / "report.tsv").exists()
        assert (out / "transcript.ndjson").exists()
        assert (out / "outcome_histogram.png").stat().st_size > 0
        assert (out / "answerer_payoff_vs_p.png").stat().st_size > 0

        replayed = runner.invoke(main, ["sim", "replay", "--transcript",
                                        str(out / "transcript.ndjson")])
        assert replayed.exit_code == 0
        report_rows = (out / "report.tsv").read_text()
        assert replayed.output.strip() == report_rows.strip()

    def test_replay_of_truncated_transcript_fails(self, runner, tmp_path):
        out = tmp_path / "simout"
        runner.invoke(main, ["sim", "run", "--seed", "3", "--n", "50",
                             "--params-file", params_file(tmp_path), "--out", str(out),
                             "--no-figures"])
        transcript = out / "transcript.ndjson"
        lines = transcript.read_text().splitlines()
        transcript.write_text("\n".join(lines[:-1]) + "\n")
        result = runner.invoke(main, ["--json", "sim", "replay",
                                      "--transcript", str(transcript)])
        assert result.exit_code == 1
        assert json.loads(result.output)["error"]["category"] == "CorruptTranscript"


class TestIncentivesCli:
    def test_sweep_writes_table_and_figure(self, runner, tmp_path):
        out = tmp_path / "sweep"
        result = runner.invoke(main, ["incentives", "sweep", "--out", str(out),
                                      "--params-file", params_file(tmp_path)])
        assert result.exit_code == 0, result.output
        table = (out / "incentive_sweep.tsv").read_text().splitlines()
        assert table[0].startswith("p\tev_asker")
        assert len(table) == 102  # header + 101 grid points
        assert (out / "expected_payoff_vs_p.png").stat().st_size > 0


class TestLedgerCli:
    def test_audit_postings_file(self, runner, tmp_path, params):
        from paidqa.ledger import AccountKind, Ledger, Memo
        ledger = Ledger()
        ledger.register_account("asker-1", AccountKind.ASKER)
        ledger.register_account("answerer-1", AccountKind.ANSWERER)
        ledger.post_deposit("t1", "asker-1", params.price, Memo.Q_PAYMENT)
        ledger.post_deposit("t1", "asker-1", params.asker_deposit, Memo.Q_DEPOSIT)
        ledger.post_deposit("t1", "answerer-1", params.answerer_stake, Memo.A_STAKE)
        ledger.apply_settlement("t1", settle(params, Outcome.EXPIRED))
        postings = tmp_path / "postings.tsv"
        postings.write_text("\n".join(ledger.to_lines()) + "\n")

        result = runner.invoke(main, ["ledger", "audit", "--postings", str(postings)])
        assert result.exit_code == 0
        assert "healthy" in result.output

        doctored = tmp_path / "doctored.tsv"
        doctored.write_text("\n".join(ledger.to_lines()[:-1]) + "\n")  # drop charity payout
        result = runner.invoke(main, ["ledger", "audit", "--postings", str(doctored)])
        assert result.exit_code == 1
        assert "SettledEscrowNonZero" in result.output


@pytest.fixture(scope="module")
def live_server(tmp_path_factory):
    """A real uvicorn server over the exchange service, on an ephemeral port."""
    import uvicorn

    from paidqa.api import create_app
    from service_driver import make_service

    tmp = tmp_path_factory.mktemp("live")
    service, clock = make_service(tmp, fsync=False)
    app = create_app(service)
    with socket.socket() as probe:
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]
    config = uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    import httpx
    base = f"http://127.0.0.1:{port}"
    for _ in range(100):
        try:
            if httpx.get(base + "/health", timeout=1).status_code == 200:
                break
        except Exception:
            time.sleep(0.05)
    else:
        pytest.fail("live server did not come up")
    yield base, clock
    server.should_exit = True
    thread.join(timeout=5)


class TestLiveClient:
    def test_full_lifecycle_through_cli(self, runner, tmp_path, live_server):
        from service_driver import (ANSWERER_TOKEN, ASKER_TOKEN, BROKER_TOKEN,
                                    GOOD_ANSWER, QUESTION)
        base, clock = live_server
        pfile = params_file(tmp_path)
        qfile = tmp_path / "question.json"
        qfile.write_text(json.dumps(QUESTION))
        afile = tmp_path / "answer.json"
        afile.write_text(json.dumps(GOOD_ANSWER))

        def cli(*args, token):
            result = runner.invoke(main, ["--json", *args, "--server", base,
                                          "--token", token])
            assert result.exit_code == 0, result.output
            return json.loads(result.output)

        created = cli("txn", "create", "--params-file", pfile,
                      "--question-file", str(qfile), token=ASKER_TOKEN)
        txn_id = created["txn_id"]
        cli("txn", "fund", txn_id, "--amount", "100.00", token=ASKER_TOKEN)
        funded = cli("txn", "fund", txn_id, "--amount", "100.00", token=ASKER_TOKEN)
        assert funded["escrow"] == 200_00
        cli("txn", "answer", txn_id, "--body-file", str(afile), token=ANSWERER_TOKEN)
        cli("txn", "deliver", txn_id, token=BROKER_TOKEN)
        cli("txn", "claim", txn_id, "--verdict", "Correct",
            "--evidence-summary", "replicated in our lab", token=ASKER_TOKEN)
        decided = cli("txn", "decide", txn_id, "--decision", "approve",
                      "--rationale", "evidence convincing", token=BROKER_TOKEN)
        assert decided["outcome"] == "VerifiedCorrect"
        assert decided["schedule"]["to_charity"] == 0

        status = cli("txn", "status", txn_id, token=ASKER_TOKEN)
        assert status["phase"] == "SettledCorrect"

        audit = cli("ledger", "audit", token=BROKER_TOKEN)
        assert audit["healthy"]

    def test_cli_error_propagates_category(self, runner, live_server):
        base, _ = live_server
        result = runner.invoke(main, ["--json", "txn", "deliver", "txn-missing",
                                      "--server", base, "--token", "tok-answerer"])
        assert result.exit_code == 1
        assert json.loads(result.output)["error"]["category"] == "RoleViolation"
