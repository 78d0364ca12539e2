import { ApiClient, ApiError } from "./api.js";
import { Store } from "./store.js";
import { AdminPanel } from "./views/adminPanel.js";
import { TopologyView } from "./views/topologyView.js";
import { WhatIfPanel } from "./views/whatifPanel.js";

export const POLL_INTERVAL_MS = 1000;

/**
 * Application shell: token entry, then the polled workbench.
 *
 * Auth is token entry only — the shell stores the token for the session and
 * asks /v1/health who it is; ADMIN principals additionally get the admin
 * panel (the service enforces the same gates server-side).
 */
export class App {
  readonly store: Store;
  topologyView: TopologyView | null = null;
  whatIfPanel: WhatIfPanel | null = null;
  adminPanel: AdminPanel | null = null;
  private loginError = "";

  constructor(
    private readonly container: HTMLElement,
    api: ApiClient = new ApiClient(),
  ) {
    this.store = new Store(api);
    this.renderLogin();
  }

  private renderLogin(): void {
    this.container.replaceChildren();
    const form = document.createElement("form");
    form.className = "login";
    form.addEventListener("submit", (e) => e.preventDefault());
    const input = document.createElement("input");
    input.type = "password";
    input.placeholder = "access token";
    input.dataset["testid"] = "token-input";
    const btn = document.createElement("button");
    btn.type = "button";
    btn.dataset["testid"] = "token-submit";
    btn.textContent = "connect";
    btn.addEventListener("click", () => void this.connect(input.value));
    form.append(input, btn);
    if (this.loginError) {
      const err = document.createElement("p");
      err.className = "login-error";
      err.dataset["testid"] = "login-error";
      err.textContent = this.loginError;
      form.appendChild(err);
    }
    this.container.appendChild(form);
  }

  async connect(token: string): Promise<void> {
    this.loginError = "";
    try {
      await this.store.connect(token);
    } catch (err) {
      this.loginError = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
      this.renderLogin();
      return;
    }
    this.mountWorkbench();
    this.store.start(POLL_INTERVAL_MS);
  }

  private mountWorkbench(): void {
    this.container.replaceChildren();
    const who = document.createElement("p");
    who.className = "whoami";
    who.dataset["testid"] = "whoami";
    const principal = this.store.principal!;
    who.textContent = `${principal.user} (${principal.role})`;
    this.container.appendChild(who);

    this.topologyView = new TopologyView(this.store);
    this.whatIfPanel = new WhatIfPanel(this.store);
    this.container.append(this.topologyView.root, this.whatIfPanel.root);
    if (principal.role === "ADMIN") {
      this.adminPanel = new AdminPanel(this.store);
      this.container.appendChild(this.adminPanel.root);
    }
  }
}
