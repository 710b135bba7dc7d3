// Money arrives from the API as integer cents and must render exactly as
// sent: all formatting is integer arithmetic, never floating point.

export function formatCents(cents: number): string {
  if (!Number.isSafeInteger(cents)) {
    throw new Error(`money must be an integer number of cents: ${cents}`);
  }
  const sign = cents < 0 ? "-" : "";
  const magnitude = Math.abs(cents);
  const dollars = Math.trunc(magnitude / 100);
  const rest = magnitude % 100;
  return `${sign}$${dollars}.${String(rest).padStart(2, "0")}`;
}

export function formatSignedCents(cents: number): string {
  return cents < 0 ? formatCents(cents) : `+${formatCents(cents)}`;
}
