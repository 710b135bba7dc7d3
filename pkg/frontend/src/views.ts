// HTML renderers for the three role dashboards. Plain string templates over
// whitelisted fields: a renderer only ever touches the keys it names, so a
// counterparty identity field can never reach asker or answerer markup even
// if a payload were to carry one. All interpolation is escaped.

import { formatCents } from "./money.js";
import {
  claimFormState,
  describeSchedule,
  ServerClock,
  settlementChip,
  stakeBanner,
} from "./model.js";
import type {
  AuditReport,
  OpenQuestion,
  PayoffsByOutcome,
  TxnView,
} from "./types.js";

export function escapeHtml(value: unknown): string {
  return String(value)
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

function chipHtml(phase: string): string {
  const chip = settlementChip(phase);
  return `<span class="chip ${chip.cssClass}" data-phase="${escapeHtml(phase)}">` +
    `${escapeHtml(chip.label)}</span>`;
}

function termsHtml(view: { params: TxnView["params"] }): string {
  const p = view.params;
  return `<dl class="terms">
    <dt>price</dt><dd>${formatCents(p.price)}</dd>
    <dt>your deposit</dt><dd>${formatCents(p.asker_deposit)}</dd>
    <dt>answerer stake</dt><dd>${formatCents(p.answerer_stake)}</dd>
    <dt>broker fee</dt><dd>${formatCents(p.broker_fee)}</dd>
    <dt>reward</dt><dd>${formatCents(p.answerer_reward)}</dd>
    <dt>deadline</dt><dd>${escapeHtml(p.deadline)}</dd>
  </dl>`;
}

function scheduleHtml(view: TxnView): string {
  if (!view.schedule) return "";
  return `<p class="schedule">${escapeHtml(describeSchedule(
    view.schedule as unknown as Record<string, number>))}</p>`;
}

function answerHtml(view: TxnView): string {
  if (!view.answer) return "<p class=\"answer none\">no answer delivered yet</p>";
  const rows = Object.entries(view.answer)
    .map(([key, value]) => `<dt>${escapeHtml(key)}</dt><dd>${escapeHtml(
      typeof value === "object" ? JSON.stringify(value) : value)}</dd>`)
    .join("");
  return `<dl class="answer">${rows}</dl>`;
}

// --- asker ---------------------------------------------------------------------

export function renderAskerCard(view: TxnView, clock: ServerClock,
                                clientNowMs: number): string {
  const claim = claimFormState(view.deadline, clock, clientNowMs);
  const claimForm = view.phase === "AnswerDelivered"
    ? `<form class="claim-form" data-txn="${escapeHtml(view.txn_id)}">
        <select name="verdict"><option>Correct</option><option>Wrong</option></select>
        <input name="evidence" placeholder="evidence summary">
        <button type="submit" ${claim.enabled ? "" : "disabled"}>file claim</button>
        <span class="deadline-notice">${escapeHtml(claim.notice)}</span>
      </form>`
    : "";
  const counterparty = view.counterparty
    ? `<p class="counterparty">answered by ${escapeHtml(view.counterparty)}</p>`
    : "";
  return `<article class="txn asker-card" data-txn="${escapeHtml(view.txn_id)}">
    <header><h3>${escapeHtml(view.question_text)}</h3>${chipHtml(view.phase)}</header>
    ${termsHtml(view)}
    ${counterparty}
    ${answerHtml(view)}
    ${claimForm}
    ${scheduleHtml(view)}
  </article>`;
}

export function renderAskerDashboard(views: TxnView[], clock: ServerClock,
                                     clientNowMs: number): string {
  const cards = views.map((view) => renderAskerCard(view, clock, clientNowMs)).join("\n");
  return `<section class="dashboard asker"><h2>My questions</h2>${cards}</section>`;
}

// --- answerer -------------------------------------------------------------------

export function renderOpenQuestionCard(question: OpenQuestion): string {
  const p = question.params;
  return `<article class="open-question" data-txn="${escapeHtml(question.txn_id)}">
    <header><h3>${escapeHtml(question.question_text)}</h3></header>
    <p class="asked-by">asked by ${escapeHtml(question.asker_pseudonym)}</p>
    <p class="category">${escapeHtml(question.answer_category.description)}</p>
    <dl class="terms">
      <dt>reward</dt><dd>${formatCents(p.answerer_reward)}</dd>
      <dt>stake required</dt><dd>${formatCents(p.answerer_stake)}</dd>
      <dt>deadline</dt><dd>${escapeHtml(p.deadline)}</dd>
    </dl>
    <form class="answer-form" data-txn="${escapeHtml(question.txn_id)}">
      <textarea name="body" placeholder='{"structure": "..."}'></textarea>
      <button type="submit">stake ${formatCents(p.answerer_stake)} on this answer</button>
    </form>
  </article>`;
}

export function renderAnswererCard(view: TxnView,
                                   payoffs: PayoffsByOutcome | null): string {
  const banner = payoffs
    ? `<p class="stake-banner">${escapeHtml(stakeBanner(payoffs).text)}</p>`
    : "";
  const counterparty = view.counterparty
    ? `<p class="counterparty">asked by ${escapeHtml(view.counterparty)}</p>`
    : "";
  return `<article class="txn answerer-card" data-txn="${escapeHtml(view.txn_id)}">
    <header><h3>${escapeHtml(view.question_text)}</h3>${chipHtml(view.phase)}</header>
    ${banner}
    ${counterparty}
    ${answerHtml(view)}
    ${scheduleHtml(view)}
  </article>`;
}

export function renderAnswererDashboard(open: OpenQuestion[], mine: TxnView[],
                                        payoffsById: Record<string, PayoffsByOutcome>): string {
  const listings = open.map(renderOpenQuestionCard).join("\n");
  const cards = mine
    .map((view) => renderAnswererCard(view, payoffsById[view.txn_id] ?? null))
    .join("\n");
  return `<section class="dashboard answerer">
    <h2>Open questions</h2>${listings}
    <h2>My answers</h2>${cards}
  </section>`;
}

// --- broker ----------------------------------------------------------------------

function identityPanel(view: TxnView): string {
  const row = (label: string, identity?: Record<string, string>) => identity
    ? `<tr><td>${escapeHtml(label)}</td><td>${escapeHtml(identity.pseudonym)}</td>
        <td>${escapeHtml(identity.id)}</td><td>${escapeHtml(identity.contact_handle)}</td>
        <td>${escapeHtml(identity.payment_handle)}</td></tr>`
    : "";
  return `<table class="identity-map broker-only">
    <thead><tr><th>role</th><th>pseudonym</th><th>identity</th><th>contact</th><th>payment</th></tr></thead>
    <tbody>${row("asker", view.asker_identity)}${row("answerer", view.answerer_identity)}</tbody>
  </table>`;
}

export function renderBrokerCard(view: TxnView): string {
  const claims = (view.claims ?? [])
    .map((claim) => `<li class="claim">
        <strong>${escapeHtml(claim.verdict)}</strong>
        (${escapeHtml(claim.decision ?? "pending")})
        ${claim.evidence.map((doc) => `<em>${escapeHtml(doc.summary)}</em>`).join(", ")}
      </li>`)
    .join("");
  const actions = view.phase === "ClaimSubmitted"
    ? `<form class="decide-form" data-txn="${escapeHtml(view.txn_id)}">
        <input name="rationale" placeholder="rationale">
        <button name="decision" value="approve">approve</button>
        <button name="decision" value="deny">deny</button>
      </form>`
    : "";
  return `<article class="txn broker-card" data-txn="${escapeHtml(view.txn_id)}">
    <header><h3>${escapeHtml(view.txn_id)}</h3>${chipHtml(view.phase)}</header>
    <p class="escrow">escrow ${formatCents(view.escrow ?? 0)}</p>
    ${identityPanel(view)}
    <ul class="claims">${claims}</ul>
    ${actions}
    ${scheduleHtml(view)}
  </article>`;
}

export function renderAuditPanel(audit: AuditReport): string {
  const nets = Object.entries(audit.account_nets)
    .map(([account, net]) => `<tr><td>${escapeHtml(account)}</td>` +
      `<td class="net">${formatCents(net)}</td></tr>`)
    .join("");
  const violations = audit.violations.length === 0
    ? "<p class=\"healthy\">ledger healthy</p>"
    : `<ul class="violations">${audit.violations.map((violation) =>
        `<li>seq ${violation.seq}: ${escapeHtml(violation.code)}</li>`).join("")}</ul>`;
  return `<section class="audit">${violations}
    <table class="nets"><thead><tr><th>account</th><th>net</th></tr></thead>
    <tbody>${nets}</tbody></table></section>`;
}

export function renderBrokerDashboard(queue: TxnView[], audit: AuditReport): string {
  const pending = queue.filter((view) => view.phase === "ClaimSubmitted");
  const rest = queue.filter((view) => view.phase !== "ClaimSubmitted");
  return `<section class="dashboard broker">
    <h2>Adjudication queue (${pending.length})</h2>
    ${pending.map(renderBrokerCard).join("\n")}
    <h2>All transactions</h2>
    ${rest.map(renderBrokerCard).join("\n")}
    <h2>Ledger</h2>
    ${renderAuditPanel(audit)}
  </section>`;
}
