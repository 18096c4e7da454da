/* Trust dashboard.
 *
 * One row per application: trust index, how many of its role's
 * permissions are currently effective, and a suspended badge whenever
 * the index sits below any permission's threshold. Recover resets trust
 * to 100; block drops it to 0, which suspends every permission. Both go
 * through the gateway, and a refusal leaves the table exactly as the
 * last poll reported it.
 */

import { Application, GatewayClient } from "../api.js";
import { ErrorBanner } from "../banner.js";
import { button, clear, el } from "../dom.js";
import { DEFAULT_POLL_MS, Poller } from "../poll.js";

export class TrustDashboard {
  readonly banner = new ErrorBanner();
  private readonly poller: Poller;
  private readonly table: HTMLElement;
  apps: Application[] = [];

  constructor(
    private readonly root: HTMLElement,
    private readonly client: GatewayClient,
    intervalMs: number = DEFAULT_POLL_MS,
  ) {
    this.table = el("div", { class: "trust-dashboard" });
    this.root.append(this.banner.node, this.table);
    this.poller = new Poller(
      () => this.refresh(),
      intervalMs,
      (err) => this.banner.showPollError(err),
    );
  }

  connect(): void {
    this.poller.start();
  }

  disconnect(): void {
    this.poller.stop();
  }

  async refresh(): Promise<void> {
    this.apps = await this.client.listApplications();
    this.render();
    this.banner.clearAfterPoll();
  }

  private render(): void {
    clear(this.table);
    if (this.apps.length === 0) {
      this.table.append(el("p", { class: "empty" }, "No applications registered."));
      return;
    }
    const body = el("tbody");
    for (const app of this.apps) {
      const states = app["permission-states"];
      const active = states.filter((s) => s.active).length;
      const name = el("td", {}, app.name);
      if (app.suspended) {
        name.append(" ", el("span", { class: "badge suspended" }, "suspended"));
      }
      body.append(
        el(
          "tr",
          { "data-app": app.id },
          el("td", {}, app.id),
          name,
          el("td", { class: "trust-index" }, String(app.trust_index)),
          el("td", { class: "permission-count" }, `${active} / ${states.length}`),
          el(
            "td",
            {},
            button("Recover", () => void this.setTrust(app.id, 100), "recover"),
            button("Block", () => void this.setTrust(app.id, 0), "block"),
          ),
        ),
      );
    }
    this.table.append(
      el(
        "table",
        {},
        el(
          "thead",
          {},
          el(
            "tr",
            {},
            el("th", {}, "Id"),
            el("th", {}, "Application"),
            el("th", {}, "Trust"),
            el("th", {}, "Effective permissions"),
            el("th", {}, "Actions"),
          ),
        ),
        body,
      ),
    );
  }

  async setTrust(appId: string, value: number): Promise<void> {
    try {
      await this.client.recoverTrust(appId, value);
      this.banner.clearAfterMutation();
    } catch (err) {
      this.banner.showMutationError(err);
      return;
    }
    await this.poller.run();
  }
}
