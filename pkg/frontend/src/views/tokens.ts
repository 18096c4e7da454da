/* Pending-token queue.
 *
 * Token issuance is a manual admin step: applications request a token,
 * the request lands in the ledger as status NEW, and nothing is granted
 * until someone approves it here. The table is rebuilt from the gateway
 * on every poll, so approving or rejecting elsewhere shows up within one
 * interval with no local bookkeeping.
 */

import { AppToken, GatewayClient } from "../api.js";
import { ErrorBanner } from "../banner.js";
import { button, clear, el } from "../dom.js";
import { DEFAULT_POLL_MS, Poller } from "../poll.js";

export interface PendingTokenView {
  tokenId: string;
  appName: string;
  controllerName: string;
  requestedAt: string;
}

function formatTimestamp(epochSeconds: number): string {
  return new Date(epochSeconds * 1000).toISOString().replace("T", " ").slice(0, 19);
}

export class TokenQueueView {
  readonly banner = new ErrorBanner();
  private readonly poller: Poller;
  private readonly table: HTMLElement;
  rows: PendingTokenView[] = [];

  constructor(
    private readonly root: HTMLElement,
    private readonly client: GatewayClient,
    intervalMs: number = DEFAULT_POLL_MS,
  ) {
    this.table = el("div", { class: "token-queue" });
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
    const [tokens, apps, controllers] = await Promise.all([
      this.client.listTokens("NEW"),
      this.client.listApplications(),
      this.client.listControllers(),
    ]);
    const appNames = new Map(apps.map((a) => [a.id, a.name]));
    const controllerNames = new Map(controllers.map((c) => [c.id, c.name]));
    this.rows = tokens.map((token: AppToken) => ({
      tokenId: token.id,
      appName: appNames.get(token.application_id) ?? token.application_id,
      controllerName: controllerNames.get(token.controller_id) ?? token.controller_id,
      requestedAt: formatTimestamp(token.created_at),
    }));
    this.render();
    this.banner.clearAfterPoll();
  }

  private render(): void {
    clear(this.table);
    if (this.rows.length === 0) {
      this.table.append(el("p", { class: "empty" }, "No pending token requests."));
      return;
    }
    const body = el("tbody");
    for (const row of this.rows) {
      const actions = el(
        "td",
        {},
        button("Approve", () => void this.approve(row.tokenId), "approve"),
        button("Reject", () => void this.reject(row.tokenId), "reject"),
      );
      body.append(
        el(
          "tr",
          { "data-token": row.tokenId },
          el("td", {}, row.tokenId),
          el("td", {}, row.appName),
          el("td", {}, row.controllerName),
          el("td", {}, row.requestedAt),
          actions,
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
            el("th", {}, "Token"),
            el("th", {}, "Application"),
            el("th", {}, "Controller"),
            el("th", {}, "Requested"),
            el("th", {}, "Actions"),
          ),
        ),
        body,
      ),
    );
  }

  async approve(tokenId: string): Promise<void> {
    try {
      await this.client.issueToken(tokenId);
      this.banner.clearAfterMutation();
    } catch (err) {
      this.banner.showMutationError(err);
      return;
    }
    await this.poller.run();
  }

  async reject(tokenId: string): Promise<void> {
    try {
      await this.client.expireToken(tokenId);
      this.banner.clearAfterMutation();
    } catch (err) {
      this.banner.showMutationError(err);
      return;
    }
    await this.poller.run();
  }
}
