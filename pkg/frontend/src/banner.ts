/* Error banner shared by all views.
 *
 * Denied mutations must stay visible: the banner shows the gateway's
 * detail string verbatim and is only replaced by a newer error, cleared
 * by a successful mutation, or dismissed by hand. Background poll
 * failures use the same surface but never hide a mutation error.
 */

import { ApiError } from "./api.js";
import { button, el } from "./dom.js";

export class ErrorBanner {
  readonly node: HTMLElement;
  private readonly text: HTMLElement;
  private sticky = false;

  constructor() {
    this.text = el("span", { class: "banner-text" });
    this.node = el("div", { class: "banner hidden", role: "alert" }, this.text);
    this.node.append(button("dismiss", () => this.clear(), "banner-dismiss"));
  }

  /** Mutation failures are sticky; they outlive later poll successes. */
  showMutationError(err: unknown): void {
    this.show(err);
    this.sticky = true;
  }

  showPollError(err: unknown): void {
    if (this.sticky) return;
    this.show(err);
  }

  clearAfterMutation(): void {
    this.sticky = false;
    this.clear();
  }

  clearAfterPoll(): void {
    if (this.sticky) return;
    this.clear();
  }

  get message(): string {
    return this.text.textContent ?? "";
  }

  private show(err: unknown): void {
    if (err instanceof ApiError) {
      const hint = err.retryable ? " (write conflict, safe to retry)" : "";
      this.text.textContent = `${err.status}: ${err.detail}${hint}`;
    } else {
      this.text.textContent = String(err);
    }
    this.node.classList.remove("hidden");
  }

  private clear(): void {
    this.sticky = false;
    this.text.textContent = "";
    this.node.classList.add("hidden");
  }
}
