// Payload shapes of the broker service API, as the dashboards consume them.

export interface Params {
  price: number;
  asker_deposit: number;
  answerer_stake: number;
  broker_fee: number;
  answerer_reward: number;
  deadline: string;
  variant: string;
}

export interface Schedule {
  to_asker: number;
  to_answerer: number;
  to_broker: number;
  to_charity: number;
}

export interface PayoffVector {
  asker: number;
  answerer: number;
  broker: number;
  charity: number;
}

export type PayoffsByOutcome = Record<string, PayoffVector>;

export interface ClaimView {
  verdict: string;
  decision: string | null;
  rationale: string;
  submitted_at: string;
  evidence: { summary: string; blob_hex: string }[];
}

export interface TxnView {
  txn_id: string;
  phase: string;
  variant: string;
  params: Params;
  deadline: string;
  created_at: string;
  question_text: string;
  answer_category: { description: string; schema: unknown[] };
  outcome: string | null;
  schedule: Schedule | null;
  // role-dependent extras
  my_pseudonym?: string;
  counterparty?: string | null;
  answer?: Record<string, unknown> | null;
  claims?: ClaimView[];
  funding?: { price_paid: boolean; deposit_paid: boolean };
  asker_identity?: Record<string, string>;
  answerer_identity?: Record<string, string>;
  escrow?: number;
}

export interface OpenQuestion {
  txn_id: string;
  question_text: string;
  answer_category: { description: string };
  clarifying_paragraphs: string[];
  params: Params;
  asker_pseudonym: string;
  phase: string;
}

export interface AuditReport {
  healthy: boolean;
  violations: { seq: number; code: string; detail: string }[];
  account_nets: Record<string, number>;
  settled_txns: string[];
  postings: string[];
}

export interface ApiErrorBody {
  error: { category: string; message: string };
}
