// View-model logic shared by the dashboards. Pure functions over API
// payloads: money figures pass through exactly as received, deadline
// decisions use the server clock offset (never the raw client clock), and
// the client-side terms check mirrors the server's rules for instant
// feedback only — the server stays authoritative.

import { formatCents, formatSignedCents } from "./money.js";
import type { Params, PayoffsByOutcome } from "./types.js";

// --- server clock -------------------------------------------------------------

export class ServerClock {
  // offset = server now - client now, captured at the last /time sync
  private offsetMs = 0;

  sync(serverNowIso: string, clientNowMs: number): void {
    this.offsetMs = Date.parse(serverNowIso) - clientNowMs;
  }

  nowMs(clientNowMs: number): number {
    return clientNowMs + this.offsetMs;
  }
}

// --- stake banner ---------------------------------------------------------------

export interface StakeBanner {
  winCents: number;
  loseCents: number;
  text: string;
}

/** The answerer's "win +$X / lose -$Y" banner, straight from API payoffs. */
export function stakeBanner(payoffs: PayoffsByOutcome): StakeBanner {
  const win = payoffs["VerifiedCorrect"].answerer;
  const lose = payoffs["VerifiedWrong"].answerer;
  return {
    winCents: win,
    loseCents: lose,
    text: `win ${formatSignedCents(win)} / lose ${formatSignedCents(lose)}`,
  };
}

// --- settlement chips --------------------------------------------------------------

export interface Chip {
  label: string;
  cssClass: string;
}

const CHIPS: Record<string, Chip> = {
  Draft: { label: "draft", cssClass: "chip-pending" },
  TermsAgreed: { label: "awaiting funding", cssClass: "chip-pending" },
  AskerFunded: { label: "awaiting answer", cssClass: "chip-pending" },
  FullyFunded: { label: "awaiting delivery", cssClass: "chip-pending" },
  AnswerDelivered: { label: "answer delivered", cssClass: "chip-active" },
  ClaimSubmitted: { label: "claim under review", cssClass: "chip-active" },
  SettledCorrect: { label: "SettledCorrect", cssClass: "chip-settled-correct" },
  SettledWrong: { label: "SettledWrong", cssClass: "chip-settled-wrong" },
  SettledExpired: { label: "SettledExpired", cssClass: "chip-settled-expired" },
};

export function settlementChip(phase: string): Chip {
  return CHIPS[phase] ?? { label: phase, cssClass: "chip-unknown" };
}

// --- claim form ---------------------------------------------------------------------

export interface ClaimFormState {
  enabled: boolean;
  remainingMs: number;
  notice: string;
}

/**
 * A claim is accepted up to and including the deadline instant, judged in
 * server time. Disabled forms carry the server's own error category so the
 * UI matches what the API would answer.
 */
export function claimFormState(deadlineIso: string, clock: ServerClock,
                               clientNowMs: number): ClaimFormState {
  const remaining = Date.parse(deadlineIso) - clock.nowMs(clientNowMs);
  if (remaining < 0) {
    return { enabled: false, remainingMs: remaining, notice: "PastDeadline" };
  }
  return {
    enabled: true,
    remainingMs: remaining,
    notice: `closes in ${formatCountdown(remaining)}`,
  };
}

export function formatCountdown(ms: number): string {
  const total = Math.max(0, Math.floor(ms / 1000));
  const days = Math.floor(total / 86400);
  const hours = Math.floor((total % 86400) / 3600);
  const minutes = Math.floor((total % 3600) / 60);
  const seconds = total % 60;
  if (days > 0) return `${days}d ${hours}h ${minutes}m`;
  if (hours > 0) return `${hours}h ${minutes}m ${seconds}s`;
  return `${minutes}m ${seconds}s`;
}

// --- advisory client-side terms validation ----------------------------------------------

export interface TermsIssue {
  category: string;
  message: string;
}

/**
 * Mirror of the server's validate-params rules, same category names. Purely
 * advisory: the server re-validates everything on create.
 */
export function checkTerms(params: Params, serverNowMs: number): TermsIssue[] {
  const issues: TermsIssue[] = [];
  const amounts: [string, number][] = [
    ["price", params.price],
    ["asker_deposit", params.asker_deposit],
    ["answerer_stake", params.answerer_stake],
    ["broker_fee", params.broker_fee],
    ["answerer_reward", params.answerer_reward],
  ];
  for (const [name, value] of amounts) {
    if (!Number.isSafeInteger(value) || value <= 0) {
      issues.push({ category: "NonPositiveAmount", message: `${name} must be > 0` });
    }
  }
  if (params.price !== params.broker_fee + params.answerer_reward) {
    issues.push({
      category: "SplitMismatch",
      message: "price must equal broker fee + answerer reward",
    });
  }
  if (params.variant === "prespecified_procedure"
      && params.answerer_stake !== params.broker_fee) {
    issues.push({
      category: "VariantStakeMismatch",
      message: "procedure variant needs stake equal to the broker fee",
    });
  }
  if (Date.parse(params.deadline) <= serverNowMs) {
    issues.push({ category: "DeadlineInPast", message: "deadline must be in the future" });
  }
  return issues;
}

// --- misc ------------------------------------------------------------------------------

export function describeSchedule(schedule: Record<string, number>): string {
  return ["to_asker", "to_answerer", "to_broker", "to_charity"]
    .map((key) => `${key} ${formatCents(schedule[key])}`)
    .join(" · ");
}
