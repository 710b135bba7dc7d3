"""Acceptance gate: every promised property, at its stated tolerance.

Each test covers one criterion end to end and prints a [PASS] line with the
measured numbers (run pytest -s to see them stream). Tolerances are pinned
here, not configurable: exact equality for all money arithmetic, +/-0.01 on
the simulated participation rate, three standard errors on the simulated
entrant mean, and hard wall-clock budgets where stated.
"""

import json
import random
import time
from fractions import Fraction

import pytest

from paidqa.incentives import (
    BeliefProfile,
    Party,
    brute_force_ev,
    entry_threshold,
    expected_payoff,
    outcome_payoffs,
)
from paidqa.protocol import (
    Outcome,
    PayoutSchedule,
    TransactionParams,
    Variant,
    escrowed_inflow,
    exhaustive_safety_check,
    settle,
    validate_params,
)
from paidqa.simulate import SimulationConfig, run

from conftest import DEADLINE, T0, golden_params
from service_driver import (
    assert_no_identity_leak,
    make_service,
    random_operations,
    run_full_lifecycle,
)


def report(label: str, detail: str) -> None:
    print(f"[PASS] {label}: {detail}")


def random_valid_params(rng: random.Random) -> TransactionParams:
    fee = rng.randint(1, 10**9)
    reward = rng.randint(1, 10**9)
    variant = rng.choice(list(Variant))
    return TransactionParams(
        price=fee + reward,
        asker_deposit=rng.randint(1, 10**9),
        answerer_stake=fee if variant is Variant.PRESPECIFIED_PROCEDURE
        else rng.randint(1, 10**9),
        broker_fee=fee,
        answerer_reward=reward,
        deadline=DEADLINE,
        variant=variant,
    )


class TestAcceptance:
    def test_golden_settlement_table(self):
        """Worked example settles exactly on all three outcome branches."""
        started = time.monotonic()
        params = validate_params(golden_params(), now=T0)
        expected = {
            Outcome.VERIFIED_CORRECT: PayoutSchedule(100_00, 100_00, 50_00, 0),
            Outcome.VERIFIED_WRONG: PayoutSchedule(100_00, 0, 50_00, 100_00),
            Outcome.EXPIRED: PayoutSchedule(0, 50_00, 50_00, 150_00),
        }
        payoffs = outcome_payoffs(params)
        answerer_nets = {}
        broker_nets = set()
        for outcome, want in expected.items():
            assert settle(params, outcome) == want
            answerer_nets[outcome] = payoffs[outcome].answerer
            broker_nets.add(payoffs[outcome].broker)
        assert answerer_nets == {Outcome.VERIFIED_CORRECT: 50_00,
                                 Outcome.VERIFIED_WRONG: -50_00,
                                 Outcome.EXPIRED: 0}
        assert broker_nets == {50_00}
        elapsed = time.monotonic() - started
        assert elapsed < 1.0
        report("golden settlement table",
               f"charity $0/$100/$150, answerer +$50/-$50/$0, broker +$50 ({elapsed:.3f}s)")

    def test_variant_b_table(self):
        """Procedure variant: no charity anywhere; full refund on a wrong answer."""
        params = validate_params(golden_params(Variant.PRESPECIFIED_PROCEDURE), now=T0)
        correct = settle(params, Outcome.VERIFIED_CORRECT)
        wrong = settle(params, Outcome.VERIFIED_WRONG)
        assert correct == PayoutSchedule(0, 100_00, 50_00, 0)
        assert wrong == PayoutSchedule(100_00, 0, 50_00, 0)
        assert correct.to_charity == wrong.to_charity == 0
        assert wrong.to_asker == 100_00
        # the refund plus the delivery-time deposit return make the asker whole
        assert outcome_payoffs(params)[Outcome.VERIFIED_WRONG].asker == 0
        report("variant-B table",
               "charity $0 in all reachable outcomes; asker refunded $100 when wrong")

    def test_conservation_fuzz_100k(self):
        """10^5 random valid terms x all outcomes: schedules sum to the escrow, exactly."""
        started = time.monotonic()
        rng = random.Random(0xC0FFEE)
        checked = 0
        for _ in range(100_000):
            params = random_valid_params(rng)
            validate_params(params, now=T0)
            outcomes = ((Outcome.VERIFIED_CORRECT, Outcome.VERIFIED_WRONG, Outcome.EXPIRED)
                        if params.variant is Variant.POST_HOC_CLAIM
                        else (Outcome.VERIFIED_CORRECT, Outcome.VERIFIED_WRONG))
            inflow = escrowed_inflow(params)
            for outcome in outcomes:
                schedule = settle(params, outcome)
                assert schedule.total() == inflow
                checked += 1
        elapsed = time.monotonic() - started
        assert elapsed < 30.0
        report("conservation fuzz",
               f"{checked} schedules conserved escrow exactly ({elapsed:.1f}s)")

    def test_incentive_invariants_and_oracle_equality(self):
        """Fee invariance, verdict indifference, sign property, deposit delta;
        closed form == brute force on 10^4 random draws, exact rationals."""
        rng = random.Random(0xBEEF)
        for _ in range(2_000):
            params = random_valid_params(rng)
            payoffs = outcome_payoffs(params)
            assert {v.broker for v in payoffs.values()} == {params.broker_fee}
            assert payoffs[Outcome.VERIFIED_CORRECT].answerer == params.answerer_reward
            assert payoffs[Outcome.VERIFIED_WRONG].answerer == -params.answerer_stake
            if params.variant is Variant.POST_HOC_CLAIM:
                assert payoffs[Outcome.VERIFIED_CORRECT].asker == \
                    payoffs[Outcome.VERIFIED_WRONG].asker
                assert payoffs[Outcome.EXPIRED].answerer == 0
                expired = payoffs[Outcome.EXPIRED].asker
                for outcome in (Outcome.VERIFIED_CORRECT, Outcome.VERIFIED_WRONG):
                    assert payoffs[outcome].asker - expired == params.asker_deposit

        draws = 10_000
        rng = random.Random(0xFACADE)
        for _ in range(draws):
            params = random_valid_params(rng)
            beliefs = BeliefProfile.of(
                Fraction(rng.randint(0, 1000), 1000),
                Fraction(rng.randint(0, 1000), 1000),
                Fraction(rng.randint(0, 1000), 1000),
            )
            party = rng.choice(Party.ALL)
            assert expected_payoff(params, beliefs, party) == \
                brute_force_ev(params, beliefs, party)
        report("incentive invariants",
               f"fee/verdict/sign/deposit invariants on 2000 param draws;"
               f" oracle equality exact on {draws} draws")

    def test_entry_threshold(self):
        """p* = 1/2 exactly for the worked terms; EV sign flips across a 0.01 scan."""
        params = golden_params()
        p_star = entry_threshold(params)
        assert p_star == Fraction(1, 2)
        below = above = 0
        for k in range(101):
            p = Fraction(k, 100)
            ev = expected_payoff(params, BeliefProfile.of(p), Party.ANSWERER)
            if p < p_star:
                assert ev < 0
                below += 1
            elif p == p_star:
                assert ev == 0
            else:
                assert ev > 0
                above += 1
        assert below == 50 and above == 50
        report("entry threshold", "p* = 1/2 exactly; EV sign flips across the 0.01 scan")

    def test_simulation_convergence(self):
        """n=10^5, rational entry, uniform p: participation 0.5 +/- 0.01, entrant
        mean within 3 SE of +$25, byte-for-byte reproducible, < 60s."""
        config = SimulationConfig(
            n_transactions=100_000, params=golden_params(), seed=42,
            answerer_strategy="rational",
        )
        started = time.monotonic()
        result = run(config)
        elapsed = time.monotonic() - started
        assert elapsed < 60.0

        r = result.report
        assert abs(r.participation_rate - 0.5) <= 0.01
        deviation = abs(r.entrant_answerer_mean - 25_00)
        assert deviation <= 3 * r.entrant_answerer_stderr
        balances = result.ledger.snapshot_balances()
        assert sum(balances.values()) == 0
        assert balances[result.ledger.broker_account] == 50_00 * r.n_entered

        again = run(config)
        assert again.transcript_lines() == result.transcript_lines()
        assert again.report.to_tsv() == r.to_tsv()
        report("simulation convergence",
               f"participation {r.participation_rate:.4f}, entrant mean "
               f"{r.entrant_answerer_mean / 100:+.2f}$ "
               f"({deviation / r.entrant_answerer_stderr:.2f} SE from +$25), "
               f"reproducible, {elapsed:.1f}s")

    def test_state_machine_safety_exhaustive(self):
        """All event strings up to length 10 (every event attempted on both
        sides of the deadline): never two settlements, never a settlement
        without full funding."""
        totals = {}
        for variant in Variant:
            result = exhaustive_safety_check(variant, max_len=10)
            assert result.ok, result.violations
            totals[variant.value] = result.strings_covered
        report("state-machine safety",
               "; ".join(f"{k}: {v:.3e} strings covered, 0 violations"
                         for k, v in totals.items()))

    def test_service_determinism_anonymity_and_crash_recovery(self, tmp_path):
        """10^4 random operations: log replay reproduces state exactly and no
        counterparty identity field reaches an asker/answerer body; crash
        injection at every boundary never leaves a half-settled transaction."""
        service, clock = make_service(tmp_path / "fuzz")
        (tmp_path / "fuzz").mkdir(exist_ok=True)
        bodies = random_operations(service, clock, n_ops=10_000, seed=0xD1CE)
        live = service.snapshot()
        service.close()
        reborn, _ = make_service(tmp_path / "fuzz")
        assert json.dumps(reborn.snapshot(), sort_keys=True) == \
            json.dumps(live, sort_keys=True)
        settled = sum(1 for t in live["txns"].values() if t["outcome"])
        checked = assert_no_identity_leak(bodies)

        # crash sweep: both hook boundaries, every step of a settling lifecycle
        class CrashInjected(Exception):
            pass

        crashes = 0
        for point in ("before_append", "after_append"):
            for step in range(7):
                base = tmp_path / f"crash-{point}-{step}"
                base.mkdir()
                state = {"calls": 0}

                def hook(p, state=state, step=step, point=point):
                    if p == point:
                        if state["calls"] == step:
                            raise CrashInjected(point)
                        state["calls"] += 1

                crashed, crash_clock = make_service(base, fsync=True, test_hook=hook)
                try:
                    run_full_lifecycle(crashed, crash_clock)
                    crashed.close()
                    continue  # step beyond the lifecycle's call count
                except CrashInjected:
                    crashes += 1
                    crashed.close()
                recovered, _ = make_service(base)
                for txn_id, txn in recovered.txns.items():
                    payouts = [p for p in recovered.ledger.postings
                               if p.txn_id == txn_id and p.memo.value in
                               ("FeeToX", "RewardToA", "StakeReturnToA", "CharityResidual")]
                    if txn.state.settled:
                        assert txn.schedule is not None
                        assert recovered.ledger.escrow_balance(txn_id) == 0
                        assert payouts
                    else:
                        assert txn.schedule is None and not payouts
                audit = recovered.ledger.audit()
                assert audit.healthy, audit.violations
        report("service determinism + anonymity + crash recovery",
               f"replay exact over 10000 ops ({len(live['txns'])} txns, {settled} settled); "
               f"{checked} party-visible bodies leak-free; {crashes} injected crashes recovered")
