import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { GatewayClient } from "../src/api.js";
import { TokenQueueView } from "../src/views/tokens.js";
import { emptyGateway, FakeGateway, makeApp, serve } from "./helpers.js";

const BASE = "http://gateway.test";

function seeded(): FakeGateway {
  const state = emptyGateway();
  state.apps.push(makeApp("app1", "Monitoring app", 100, { p1: 80 }));
  state.controllers.push({ id: "ctrl1", name: "Main controller" });
  state.tokens.push({
    id: "tok-1",
    application_id: "app1",
    controller_id: "ctrl1",
    status: "NEW",
    created_at: 1755400000,
  });
  return state;
}

/** The application's next request, as the controller would relay it. */
async function probe(tokenId: string): Promise<string> {
  const response = await fetch(`${BASE}/verify`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({
      url: "/wm/firewall/module/enable/json",
      data: "",
      tokenId,
      httpMethod: "PUT",
      permissionId: "p1",
    }),
  });
  return (await response.json()).action;
}

describe("token queue", () => {
  let state: FakeGateway;
  let view: TokenQueueView;
  let root: HTMLElement;

  beforeEach(() => {
    vi.useFakeTimers();
    state = seeded();
    vi.stubGlobal("fetch", serve(state));
    root = document.createElement("div");
    document.body.append(root);
    view = new TokenQueueView(root, new GatewayClient({ baseUrl: BASE, token: "jwt" }));
  });

  afterEach(() => {
    view.disconnect();
    root.remove();
    vi.useRealTimers();
  });

  it("lists pending requests with resolved names", async () => {
    await view.refresh();
    expect(view.rows).toEqual([
      {
        tokenId: "tok-1",
        appName: "Monitoring app",
        controllerName: "Main controller",
        requestedAt: "2025-08-17 03:06:40",
      },
    ]);
    const row = root.querySelector('tr[data-token="tok-1"]')!;
    expect(row.textContent).toContain("Monitoring app");
    expect(row.textContent).toContain("Main controller");
  });

  it("approving makes the app's next request ACCEPT within one poll", async () => {
    view.connect();
    await vi.advanceTimersByTimeAsync(0);
    expect(root.querySelector('tr[data-token="tok-1"]')).not.toBeNull();
    expect(await probe("tok-1")).toBe("DENY");

    (root.querySelector("button.approve") as HTMLButtonElement).click();
    await vi.advanceTimersByTimeAsync(2000);

    expect(state.calls.map((c) => `${c.method} ${c.path}`)).toContain(
      "POST /admin/tokens/tok-1/issue",
    );
    expect(await probe("tok-1")).toBe("ACCEPT");
    expect(root.querySelector('tr[data-token="tok-1"]')).toBeNull();
    expect(root.textContent).toContain("No pending token requests.");
  });

  it("rejecting expires the token and clears the row", async () => {
    view.connect();
    await vi.advanceTimersByTimeAsync(0);
    (root.querySelector("button.reject") as HTMLButtonElement).click();
    await vi.advanceTimersByTimeAsync(2000);

    expect(state.tokens[0].status).toBe("EXPIRED");
    expect(await probe("tok-1")).toBe("DENY");
    expect(root.querySelector('tr[data-token="tok-1"]')).toBeNull();
  });

  it("new requests appear within one poll interval", async () => {
    view.connect();
    await vi.advanceTimersByTimeAsync(0);
    state.tokens.push({
      id: "tok-2",
      application_id: "app1",
      controller_id: "ctrl1",
      status: "NEW",
      created_at: 1755400100,
    });
    await vi.advanceTimersByTimeAsync(2000);
    expect(root.querySelector('tr[data-token="tok-2"]')).not.toBeNull();
  });

  it("surfaces a denied approval verbatim and keeps the queue unchanged", async () => {
    state.denials.set("POST /admin/tokens/tok-1/issue", [403, "DENY: admin only"]);
    view.connect();
    await vi.advanceTimersByTimeAsync(0);

    (root.querySelector("button.approve") as HTMLButtonElement).click();
    await vi.advanceTimersByTimeAsync(2000);

    expect(view.banner.message).toBe("403: DENY: admin only");
    expect(state.tokens[0].status).toBe("NEW");
    expect(root.querySelector('tr[data-token="tok-1"]')).not.toBeNull();
    expect(await probe("tok-1")).toBe("DENY");

    // The sticky error outlives later successful polls.
    await vi.advanceTimersByTimeAsync(4000);
    expect(view.banner.message).toBe("403: DENY: admin only");
  });

  it("marks a write conflict as retryable", async () => {
    state.tokens[0].status = "ISSUED";
    await view.refresh();
    await view.approve("tok-1");
    expect(view.banner.message).toBe(
      "409: DENY: only NEW tokens can be issued (write conflict, safe to retry)",
    );
  });
});
