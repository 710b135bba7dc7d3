// Typed client for the broker service. Every request goes to the configured
// base address and nowhere else; failures surface the server's error
// category verbatim so the UI can render it unchanged.

import type {
  AuditReport,
  OpenQuestion,
  PayoffsByOutcome,
  TxnView,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly category: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly base: string;

  constructor(
    baseUrl: string,
    private readonly token: string,
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {
    this.base = baseUrl.replace(/\/+$/, "");
  }

  url(path: string): string {
    return this.base + path;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(this.url(path), {
      method,
      headers: {
        Authorization: `Bearer ${this.token}`,
        ...(body === undefined ? {} : { "Content-Type": "application/json" }),
      },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json();
    if (!response.ok) {
      const error = (payload as { error?: { category?: string; message?: string } }).error;
      throw new ApiError(error?.category ?? "ApiError",
        error?.message ?? response.statusText, response.status);
    }
    return payload as T;
  }

  serverTime(): Promise<{ now: string }> {
    return this.request("GET", "/time");
  }

  myTransactions(): Promise<TxnView[]> {
    return this.request("GET", "/txns");
  }

  txnView(txnId: string): Promise<TxnView> {
    return this.request("GET", `/txns/${txnId}`);
  }

  payoffs(txnId: string): Promise<PayoffsByOutcome> {
    return this.request("GET", `/txns/${txnId}/payoffs`);
  }

  openQuestions(): Promise<OpenQuestion[]> {
    return this.request("GET", "/questions/open");
  }

  ledgerAudit(): Promise<AuditReport> {
    return this.request("GET", "/ledger/audit");
  }

  createTransaction(payload: unknown): Promise<{ txn_id: string; phase: string }> {
    return this.request("POST", "/txns", payload);
  }

  fund(txnId: string, amountCents: number): Promise<{ phase: string; escrow: number }> {
    return this.request("POST", `/txns/${txnId}/fund`, { amount: amountCents });
  }

  submitAnswer(txnId: string, body: Record<string, unknown>):
      Promise<{ phase: string; staked: number; pseudonym: string }> {
    return this.request("POST", `/txns/${txnId}/answer`, { body });
  }

  deliver(txnId: string): Promise<{ phase: string }> {
    return this.request("POST", `/txns/${txnId}/deliver`);
  }

  fileClaim(txnId: string, verdict: string, evidenceSummaries: string[]):
      Promise<{ phase: string; claim_index: number }> {
    return this.request("POST", `/txns/${txnId}/claim`, {
      verdict,
      evidence: evidenceSummaries.map((summary) => ({ summary, blob_hex: "" })),
    });
  }

  decide(txnId: string, decision: string, rationale: string):
      Promise<{ phase: string; outcome?: string }> {
    return this.request("POST", `/txns/${txnId}/decide`, { decision, rationale });
  }

  expireSweep(): Promise<{ expired: string[] }> {
    return this.request("POST", "/expire-sweep");
  }
}
