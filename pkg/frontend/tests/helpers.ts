/* In-memory stand-in for the gateway, served through a stubbed fetch.
 *
 * Holds the same record shapes the real API returns and mutates them the
 * way the ledger handlers would, so view tests can assert both the wire
 * traffic and the reconstructed state. Denials are injected per
 * method+path to mimic server-side ACL rejections.
 */

import {
  Application,
  AppToken,
  BlockEntry,
  Controller,
  Permission,
  Role,
  Route,
} from "../src/api.js";

export interface FakeGateway {
  tokens: AppToken[];
  apps: Application[];
  controllers: Controller[];
  permissions: Permission[];
  roles: Role[];
  routes: Route[];
  logs: Record<string, unknown>[];
  blocks: BlockEntry[];
  verified: boolean;
  /** "METHOD /path" -> [status, detail]; served instead of the handler. */
  denials: Map<string, [number, string]>;
  calls: { method: string; path: string; body: unknown }[];
}

export function emptyGateway(): FakeGateway {
  return {
    tokens: [],
    apps: [],
    controllers: [],
    permissions: [],
    roles: [],
    routes: [],
    logs: [],
    blocks: [],
    verified: true,
    denials: new Map(),
    calls: [],
  };
}

export function makeApp(
  id: string,
  name: string,
  trust: number,
  thresholds: Record<string, number>,
): Application {
  const states = Object.entries(thresholds).map(([permissionId, threshold]) => ({
    permission_id: permissionId,
    resource_object: "flowmod",
    threshold,
    active: trust >= threshold,
  }));
  return {
    id,
    name,
    role_id: "r1",
    trust_index: trust,
    "permission-states": states,
    suspended: states.some((s) => !s.active),
  };
}

function recomputeTrust(app: Application, value: number): void {
  app.trust_index = value;
  for (const state of app["permission-states"]) {
    state.active = value >= state.threshold;
  }
  app.suspended = app["permission-states"].some((s) => !s.active);
}

export function makeChain(length: number): BlockEntry[] {
  const blocks: BlockEntry[] = [];
  let prev = "0".repeat(64);
  for (let number = 0; number < length; number++) {
    const hash = `hash-${number}-`.padEnd(64, "f");
    blocks.push({ number, prev_hash: prev, data_hash: "d".repeat(64), hash, transactions: [] });
    prev = hash;
  }
  return blocks;
}

function jsonResponse(status: number, payload: unknown) {
  return {
    ok: status >= 200 && status < 300,
    status,
    statusText: `status ${status}`,
    json: async () => payload,
  };
}

/** Install the fake gateway as the global fetch; returns the state. */
export function serve(state: FakeGateway): typeof fetch {
  const handler = async (url: string, init?: RequestInit) => {
    const method = init?.method ?? "GET";
    const parsed = new URL(url);
    const path = parsed.pathname;
    const body = init?.body ? JSON.parse(init.body as string) : undefined;
    state.calls.push({ method, path, body });

    const denial = state.denials.get(`${method} ${path}`);
    if (denial !== undefined) {
      return jsonResponse(denial[0], { detail: denial[1] });
    }

    if (method === "POST" && path === "/auth/login") {
      if (body.password !== "secret") {
        return jsonResponse(401, { detail: "bad credentials" });
      }
      return jsonResponse(200, {
        "access-token": "jwt-for-" + body["participant-id"],
        "token-type": "bearer",
        "expires-in": 3600,
      });
    }

    if (method === "GET" && path === "/admin/tokens") {
      const status = parsed.searchParams.get("status");
      const found = status === null
        ? state.tokens
        : state.tokens.filter((t) => t.status === status);
      return jsonResponse(200, found);
    }

    let match = path.match(/^\/admin\/tokens\/([^/]+)\/(issue|expire)$/);
    if (method === "POST" && match) {
      const token = state.tokens.find((t) => t.id === match![1]);
      if (token === undefined) {
        return jsonResponse(404, { detail: `token '${match[1]}' does not exist` });
      }
      if (match[2] === "issue" && token.status !== "NEW") {
        return jsonResponse(409, { detail: "DENY: only NEW tokens can be issued" });
      }
      token.status = match[2] === "issue" ? "ISSUED" : "EXPIRED";
      return jsonResponse(200, token);
    }

    if (method === "GET" && path === "/admin/applications") {
      return jsonResponse(200, state.apps);
    }
    if (method === "GET" && path === "/admin/controllers") {
      return jsonResponse(200, state.controllers);
    }

    match = path.match(/^\/admin\/applications\/([^/]+)\/trust$/);
    if (method === "POST" && match) {
      const app = state.apps.find((a) => a.id === match![1]);
      if (app === undefined) {
        return jsonResponse(404, { detail: "no such application" });
      }
      recomputeTrust(app, body["trust-index"]);
      return jsonResponse(200, { "app-id": app.id, "trust-index": app.trust_index });
    }

    if (path === "/admin/permissions" && method === "GET") {
      return jsonResponse(200, state.permissions);
    }
    if (path === "/admin/permissions" && method === "POST") {
      if (state.permissions.some((p) => p.id === body.id)) {
        return jsonResponse(409, { detail: `permission '${body.id}' already exists` });
      }
      const created = {
        id: body.id,
        name: body.name,
        resource_object: body["resource-object"],
      };
      state.permissions.push(created);
      return jsonResponse(201, created);
    }
    match = path.match(/^\/admin\/permissions\/([^/]+)$/);
    if (method === "DELETE" && match) {
      state.permissions = state.permissions.filter((p) => p.id !== match![1]);
      return jsonResponse(200, { removed: match[1] });
    }

    if (path === "/admin/roles" && method === "GET") {
      return jsonResponse(200, state.roles);
    }
    if (path === "/admin/roles" && method === "POST") {
      state.roles.push(body);
      return jsonResponse(201, body);
    }
    match = path.match(/^\/admin\/roles\/([^/]+)$/);
    if (method === "PUT" && match) {
      const role = state.roles.find((r) => r.id === match![1]);
      if (role === undefined) {
        return jsonResponse(409, { detail: `role '${match[1]}' does not exist` });
      }
      Object.assign(role, body);
      return jsonResponse(200, role);
    }

    if (path === "/admin/routes" && method === "GET") {
      return jsonResponse(200, state.routes);
    }
    if (path === "/admin/routes" && method === "POST") {
      state.routes.push(body);
      return jsonResponse(201, body);
    }

    if (method === "GET" && path === "/logs") {
      const offset = Number(parsed.searchParams.get("offset") ?? "0");
      const limit = Number(parsed.searchParams.get("limit") ?? "10");
      return jsonResponse(200, {
        total: state.logs.length,
        entries: state.logs.slice(offset, offset + limit),
      });
    }

    if (method === "GET" && path === "/blocks") {
      const start = Number(parsed.searchParams.get("start") ?? "0");
      const limit = Number(parsed.searchParams.get("limit") ?? "10");
      return jsonResponse(200, {
        height: state.blocks.length,
        verified: state.verified,
        blocks: state.blocks.slice(start, start + limit),
      });
    }

    // Stand-in for a controller-side request: ACCEPT only on ISSUED tokens.
    if (method === "POST" && path === "/verify") {
      const token = state.tokens.find((t) => t.id === body.tokenId);
      if (token === undefined || token.status === "NULL") {
        return jsonResponse(200, { action: "DENY", message: "Token required" });
      }
      if (token.status === "NEW") {
        return jsonResponse(200, { action: "DENY", message: "Token not issued" });
      }
      if (token.status === "EXPIRED") {
        return jsonResponse(200, { action: "DENY", message: "Token expired" });
      }
      return jsonResponse(200, { action: "ACCEPT", message: "Accepted" });
    }

    return jsonResponse(404, { detail: `no handler for ${method} ${path}` });
  };
  return handler as unknown as typeof fetch;
}
