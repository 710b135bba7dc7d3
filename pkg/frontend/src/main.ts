// Bootstrap: a session is (base address, token, role). State refreshes by
// polling; form submissions update a pending status optimistically and
// reconcile — or surface the server's error category — when the response
// lands. No mutation is shown as final without a server acknowledgment.

import { ApiClient, ApiError } from "./api.js";
import { ServerClock } from "./model.js";
import type { PayoffsByOutcome, TxnView } from "./types.js";
import {
  escapeHtml,
  renderAnswererDashboard,
  renderAskerDashboard,
  renderBrokerDashboard,
} from "./views.js";

const POLL_INTERVAL_MS = Number(
  new URLSearchParams(window.location.search).get("poll") ?? "2000");

interface Session {
  base: string;
  token: string;
  role: "asker" | "answerer" | "broker";
}

function loadSession(): Session | null {
  const raw = window.localStorage.getItem("paidqa-session");
  return raw ? (JSON.parse(raw) as Session) : null;
}

function saveSession(session: Session): void {
  window.localStorage.setItem("paidqa-session", JSON.stringify(session));
}

function loginForm(root: HTMLElement): void {
  root.innerHTML = `<form id="login" class="login">
    <h2>paidqa</h2>
    <label>service address <input name="base" value="http://127.0.0.1:8642"></label>
    <label>session token <input name="token" placeholder="tok-..."></label>
    <label>role <select name="role">
      <option>asker</option><option>answerer</option><option>broker</option>
    </select></label>
    <button type="submit">open dashboard</button>
  </form>`;
  const form = document.getElementById("login") as HTMLFormElement;
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const data = new FormData(form);
    saveSession({
      base: String(data.get("base")),
      token: String(data.get("token")),
      role: String(data.get("role")) as Session["role"],
    });
    window.location.reload();
  });
}

function setStatus(text: string, isError = false): void {
  const bar = document.getElementById("status");
  if (bar) {
    bar.textContent = text;
    bar.className = isError ? "status error" : "status";
  }
}

async function refresh(session: Session, api: ApiClient, clock: ServerClock,
                       root: HTMLElement): Promise<void> {
  const time = await api.serverTime();
  clock.sync(time.now, Date.now());

  if (session.role === "asker") {
    const mine = await api.myTransactions();
    root.innerHTML = renderAskerDashboard(mine, clock, Date.now());
    wireClaimForms(api, root);
  } else if (session.role === "answerer") {
    const [open, mine] = await Promise.all([api.openQuestions(), api.myTransactions()]);
    const payoffsById: Record<string, PayoffsByOutcome> = {};
    await Promise.all(mine.map(async (view: TxnView) => {
      payoffsById[view.txn_id] = await api.payoffs(view.txn_id);
    }));
    root.innerHTML = renderAnswererDashboard(open, mine, payoffsById);
    wireAnswerForms(api, root);
  } else {
    const [queue, audit] = await Promise.all([api.myTransactions(), api.ledgerAudit()]);
    root.innerHTML = renderBrokerDashboard(queue, audit);
    wireDecideForms(api, root);
  }
}

function wireClaimForms(api: ApiClient, root: HTMLElement): void {
  root.querySelectorAll<HTMLFormElement>(".claim-form").forEach((form) => {
    form.addEventListener("submit", async (event) => {
      event.preventDefault();
      const txnId = form.dataset.txn ?? "";
      const data = new FormData(form);
      setStatus(`filing claim on ${txnId}…`);
      try {
        const receipt = await api.fileClaim(txnId, String(data.get("verdict")),
          [String(data.get("evidence") ?? "")]);
        setStatus(`claim filed; phase ${receipt.phase}`);
      } catch (error) {
        setStatus(renderError(error), true);
      }
    });
  });
}

function wireAnswerForms(api: ApiClient, root: HTMLElement): void {
  root.querySelectorAll<HTMLFormElement>(".answer-form").forEach((form) => {
    form.addEventListener("submit", async (event) => {
      event.preventDefault();
      const txnId = form.dataset.txn ?? "";
      setStatus(`staking on ${txnId}…`);
      try {
        const body = JSON.parse(String(new FormData(form).get("body")));
        const receipt = await api.submitAnswer(txnId, body);
        setStatus(`answer staked as ${receipt.pseudonym}; phase ${receipt.phase}`);
      } catch (error) {
        setStatus(renderError(error), true);
      }
    });
  });
}

function wireDecideForms(api: ApiClient, root: HTMLElement): void {
  root.querySelectorAll<HTMLFormElement>(".decide-form").forEach((form) => {
    form.querySelectorAll<HTMLButtonElement>("button[name=decision]").forEach((button) => {
      button.addEventListener("click", async (event) => {
        event.preventDefault();
        const txnId = form.dataset.txn ?? "";
        const rationale = String(new FormData(form).get("rationale") ?? "");
        setStatus(`deciding ${txnId}…`);
        try {
          const receipt = await api.decide(txnId, button.value, rationale);
          setStatus(`decided; phase ${receipt.phase}`);
        } catch (error) {
          setStatus(renderError(error), true);
        }
      });
    });
  });
}

function renderError(error: unknown): string {
  if (error instanceof ApiError) {
    return `${error.category}: ${error.message}`;
  }
  return escapeHtml(error instanceof Error ? error.message : String(error));
}

function start(): void {
  const root = document.getElementById("app");
  if (!root) return;
  const session = loadSession();
  if (!session || !session.token) {
    loginForm(root);
    return;
  }
  const api = new ApiClient(session.base, session.token);
  const clock = new ServerClock();
  const tick = () => {
    refresh(session, api, clock, root).catch((error) => setStatus(renderError(error), true));
  };
  tick();
  window.setInterval(tick, POLL_INTERVAL_MS);
  const logout = document.getElementById("logout");
  logout?.addEventListener("click", () => {
    window.localStorage.removeItem("paidqa-session");
    window.location.reload();
  });
}

start();
