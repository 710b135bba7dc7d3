from datetime import datetime, timedelta, timezone

import pytest

from paidqa.protocol import TransactionParams, Variant

UTC = timezone.utc

# The worked running example: $100 price, $100 asker deposit, $50 stake,
# $50 broker fee, $50 reward.
T0 = datetime(2026, 1, 1, 12, 0, 0, tzinfo=UTC)
DEADLINE = datetime(2026, 2, 1, 12, 0, 0, tzinfo=UTC)


def golden_params(variant: Variant = Variant.POST_HOC_CLAIM,
                  deadline: datetime = DEADLINE) -> TransactionParams:
    return TransactionParams(
        price=100_00,
        asker_deposit=100_00,
        answerer_stake=50_00,
        broker_fee=50_00,
        answerer_reward=50_00,
        deadline=deadline,
        variant=variant,
    )


@pytest.fixture
def params():
    return golden_params()


@pytest.fixture
def procedure_params():
    return golden_params(variant=Variant.PRESPECIFIED_PROCEDURE)


@pytest.fixture
def t0():
    return T0


@pytest.fixture
def deadline():
    return DEADLINE


def just_before(moment: datetime) -> datetime:
    return moment - timedelta(seconds=1)


def just_after(moment: datetime) -> datetime:
    return moment + timedelta(seconds=1)
