"""Money as exact integer minor units (cents).

Amounts are plain ints; nothing here ever rounds. Negative values are
rejected wherever an amount (as opposed to a signed net position) is
expected — who owes whom is expressed by posting direction, not sign.
"""

from __future__ import annotations

Cents = int


class MoneyError(ValueError):
    """Raised for malformed monetary inputs (sub-cent, negative, non-integer)."""


def require_amount(value: object, what: str = "amount") -> int:
    """Validate a non-negative integer cent amount and return it."""
    if isinstance(value, bool) or not isinstance(value, int):
        raise MoneyError(f"{what} must be an integer number of cents, got {value!r}")
    if value < 0:
        raise MoneyError(f"{what} must be >= 0, got {value}")
    return value


def parse_dollars(text: str) -> int:
    """Parse a decimal dollar string ("100", "$100.50") into cents, exactly.

    More than two decimal places is an error: there is no rounding rule.
    """
    s = text.strip().replace(",", "")
    if s.startswith("$"):
        s = s[1:]
    if s.startswith("-"):
        raise MoneyError(f"negative amount not allowed: {text!r}")
    if not s:
        raise MoneyError("empty amount")
    whole, _, frac = s.partition(".")
    if not whole.isdigit() or (frac and not frac.isdigit()):
        raise MoneyError(f"malformed amount: {text!r}")
    if len(frac) > 2:
        raise MoneyError(f"sub-cent precision not representable: {text!r}")
    return int(whole) * 100 + int(frac.ljust(2, "0") or "0")


def format_cents(cents: int) -> str:
    """Render cents as a dollar string: 10000 -> "$100.00"."""
    sign = "-" if cents < 0 else ""
    mag = abs(cents)
    return f"{sign}${mag // 100}.{mag % 100:02d}"


def format_signed_cents(cents: int) -> str:
    """Like format_cents but with an explicit leading + for gains."""
    return format_cents(cents) if cents < 0 else f"+{format_cents(cents)}"
