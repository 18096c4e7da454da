/* Console shell: login, tab navigation, session handling.
 *
 * The admin JWT lives in sessionStorage only, so it survives a reload
 * but not the browser session. Every view rebuilds itself from the
 * gateway on connect; closing and reopening the console loses nothing.
 */

import { ConsoleSession, GatewayClient, login } from "./api.js";
import { button, clear, el } from "./dom.js";
import { LedgerExplorer } from "./views/ledger.js";
import { PolicyEditor } from "./views/policy.js";
import { TokenQueueView } from "./views/tokens.js";
import { TrustDashboard } from "./views/trust.js";

const SESSION_KEY = "nbgate-console/session";

interface View {
  connect(): void;
  disconnect(): void;
}

export function loadSession(): ConsoleSession | null {
  const raw = sessionStorage.getItem(SESSION_KEY);
  if (raw === null) return null;
  try {
    const parsed = JSON.parse(raw);
    if (typeof parsed.baseUrl === "string" && typeof parsed.token === "string") {
      return parsed;
    }
  } catch {
    // fall through: treat unreadable state as logged out
  }
  sessionStorage.removeItem(SESSION_KEY);
  return null;
}

export function storeSession(session: ConsoleSession): void {
  sessionStorage.setItem(SESSION_KEY, JSON.stringify(session));
}

export function clearSession(): void {
  sessionStorage.removeItem(SESSION_KEY);
}

function renderLogin(root: HTMLElement, onLogin: (s: ConsoleSession) => void): void {
  clear(root);
  const error = el("p", { class: "login-error" });
  const form = el("form", { class: "login" });
  const baseUrl = el("input", {
    name: "base-url",
    value: window.location.origin,
    "aria-label": "gateway url",
  });
  const participant = el("input", {
    name: "participant-id",
    placeholder: "admin id",
    "aria-label": "participant id",
  });
  const password = el("input", {
    name: "password",
    type: "password",
    placeholder: "password",
    "aria-label": "password",
  });
  form.append(
    el("h1", {}, "Gateway console"),
    baseUrl,
    participant,
    password,
    el("button", { type: "submit" }, "Sign in"),
    error,
  );
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    login(baseUrl.value.replace(/\/$/, ""), participant.value, password.value)
      .then((session) => {
        storeSession(session);
        onLogin(session);
      })
      .catch((err) => {
        error.textContent = String(err.message ?? err);
      });
  });
  root.append(form);
}

function renderShell(root: HTMLElement, session: ConsoleSession): void {
  clear(root);
  const client = new GatewayClient(session);
  const content = el("main", { class: "content" });

  const views: Record<string, (mount: HTMLElement) => View> = {
    Tokens: (mount) => new TokenQueueView(mount, client),
    Trust: (mount) => new TrustDashboard(mount, client),
    Policy: (mount) => new PolicyEditor(mount, client),
    Ledger: (mount) => new LedgerExplorer(mount, client),
  };

  let active: View | null = null;
  const tabs = el("nav", { class: "tabs" });
  const tabButtons = new Map<string, HTMLButtonElement>();

  function open(name: string): void {
    active?.disconnect();
    clear(content);
    for (const [label, node] of tabButtons) {
      node.classList.toggle("active", label === name);
    }
    const mount = el("div", { class: "view" });
    content.append(mount);
    active = views[name](mount);
    active.connect();
  }

  for (const name of Object.keys(views)) {
    const tab = button(name, () => open(name), "tab");
    tabButtons.set(name, tab);
    tabs.append(tab);
  }
  tabs.append(
    button(
      "Sign out",
      () => {
        active?.disconnect();
        clearSession();
        renderLogin(root, (s) => renderShell(root, s));
      },
      "signout",
    ),
  );

  root.append(el("header", {}, el("h1", {}, "Gateway console"), tabs), content);
  open("Tokens");
}

export function boot(root: HTMLElement): void {
  const session = loadSession();
  if (session === null) {
    renderLogin(root, (s) => renderShell(root, s));
  } else {
    renderShell(root, session);
  }
}

const mount = document.getElementById("app");
if (mount !== null) {
  boot(mount);
}
