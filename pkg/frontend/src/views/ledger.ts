/* Ledger explorer: paged access logs and the block chain.
 *
 * Each block row carries a link indicator: "linked" when its prev_hash
 * equals the previous block's own hash, "genesis" for block 0. Pages
 * after the first fetch one extra leading block as the anchor so every
 * visible link is checked against real data, not trust carried over
 * from an earlier page.
 */

import { BlockEntry, GatewayClient } from "../api.js";
import { ErrorBanner } from "../banner.js";
import { button, clear, el } from "../dom.js";
import { DEFAULT_POLL_MS, Poller } from "../poll.js";

export const PAGE_SIZE = 10;

export type LinkState = "genesis" | "linked" | "broken";

export function linkStates(blocks: BlockEntry[], anchor: BlockEntry | null): LinkState[] {
  const states: LinkState[] = [];
  let previous = anchor;
  for (const block of blocks) {
    if (block.number === 0) {
      states.push("genesis");
    } else if (previous !== null && block.prev_hash === previous.hash) {
      states.push("linked");
    } else {
      states.push("broken");
    }
    previous = block;
  }
  return states;
}

export class LedgerExplorer {
  readonly banner = new ErrorBanner();
  private readonly poller: Poller;
  private readonly logPane: HTMLElement;
  private readonly blockPane: HTMLElement;
  logOffset = 0;
  blockStart = 0;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: GatewayClient,
    intervalMs: number = DEFAULT_POLL_MS,
  ) {
    this.logPane = el("div", { class: "log-pane" });
    this.blockPane = el("div", { class: "block-pane" });
    this.root.append(
      this.banner.node,
      el("section", {}, el("h3", {}, "Access logs"), this.logPane),
      el("section", {}, el("h3", {}, "Blocks"), this.blockPane),
    );
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
    await Promise.all([this.refreshLogs(), this.refreshBlocks()]);
    this.banner.clearAfterPoll();
  }

  private pageButtons(
    label: string,
    position: number,
    total: number,
    move: (next: number) => void,
  ): HTMLElement {
    const prev = button("Prev", () => {
      move(Math.max(0, position - PAGE_SIZE));
      void this.poller.run();
    });
    const next = button("Next", () => {
      move(position + PAGE_SIZE);
      void this.poller.run();
    });
    prev.disabled = position === 0;
    next.disabled = position + PAGE_SIZE >= total;
    return el(
      "div",
      { class: "pager" },
      prev,
      el("span", {}, `${label} ${position}-${Math.min(position + PAGE_SIZE, total)} of ${total}`),
      next,
    );
  }

  private async refreshLogs(): Promise<void> {
    const page = await this.client.listLogs(this.logOffset, PAGE_SIZE);
    clear(this.logPane);
    this.logPane.append(
      this.pageButtons("entries", this.logOffset, page.total, (n) => (this.logOffset = n)),
    );
    const list = el("ul", { class: "log-entries" });
    for (const entry of page.entries) {
      list.append(
        el(
          "li",
          {},
          el("code", {}, String(entry["id"] ?? "")),
          ` app=${entry["application_id"] ?? "?"} ${entry["method"] ?? ""} ` +
            `${entry["url"] ?? ""} -> ${entry["action"] ?? ""}`,
        ),
      );
    }
    this.logPane.append(list);
  }

  private async refreshBlocks(): Promise<void> {
    // Fetch one block before the page to anchor the first link check.
    const start = Math.max(0, this.blockStart - 1);
    const extra = this.blockStart > 0 ? 1 : 0;
    const page = await this.client.listBlocks(start, PAGE_SIZE + extra);
    const anchor = extra && page.blocks.length > 0 ? page.blocks[0] : null;
    const visible = page.blocks.slice(extra);
    const states = linkStates(visible, anchor);

    clear(this.blockPane);
    this.blockPane.append(
      el(
        "p",
        { class: page.verified ? "chain-ok" : "chain-broken" },
        page.verified ? "chain verified" : "CHAIN VERIFICATION FAILED",
      ),
      this.pageButtons("blocks", this.blockStart, page.height, (n) => (this.blockStart = n)),
    );
    const body = el("tbody");
    visible.forEach((block, i) => {
      body.append(
        el(
          "tr",
          { "data-block": String(block.number) },
          el("td", {}, String(block.number)),
          el("td", {}, el("code", {}, block.hash.slice(0, 16))),
          el("td", {}, el("code", {}, block.prev_hash.slice(0, 16))),
          el("td", {}, String(block.transactions.length)),
          el("td", { class: `link-state ${states[i]}` }, states[i]),
        ),
      );
    });
    this.blockPane.append(
      el(
        "table",
        {},
        el(
          "thead",
          {},
          el(
            "tr",
            {},
            el("th", {}, "Number"),
            el("th", {}, "Hash"),
            el("th", {}, "Previous"),
            el("th", {}, "Transactions"),
            el("th", {}, "Link"),
          ),
        ),
        body,
      ),
    );
  }
}
