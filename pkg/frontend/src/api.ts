/* Typed client for the gateway's HTTP/JSON API.
 *
 * Every console mutation goes through this client and therefore through
 * the gateway; nothing here decides authorization. Errors carry the
 * gateway's `detail` string verbatim so views can show exactly what the
 * server said.
 */

export interface ConsoleSession {
  baseUrl: string;
  token: string;
}

export interface Application {
  id: string;
  name: string;
  role_id: string;
  trust_index: number;
  "permission-states": PermissionState[];
  suspended: boolean;
}

export interface PermissionState {
  permission_id: string;
  resource_object: string;
  threshold: number;
  active: boolean;
}

export interface Controller {
  id: string;
  name: string;
}

export interface AppToken {
  id: string;
  application_id: string;
  controller_id: string;
  status: string;
  created_at: number;
}

export interface Permission {
  id: string;
  name: string;
  resource_object: string;
}

export interface Role {
  id: string;
  name: string;
  permissions: string[];
  priority: number;
}

export interface Route {
  method: string;
  pattern: string;
  permission: string;
}

export interface LogPage {
  total: number;
  entries: Record<string, unknown>[];
}

export interface BlockEntry {
  number: number;
  prev_hash: string;
  data_hash: string;
  hash: string;
  transactions: Record<string, unknown>[];
}

export interface BlockPage {
  height: number;
  verified: boolean;
  blocks: BlockEntry[];
}

export class ApiError extends Error {
  readonly status: number;
  readonly detail: string;

  constructor(status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
    this.status = status;
    this.detail = detail;
  }

  /** Concurrent-admin write conflicts come back as 409 and are safe to retry. */
  get retryable(): boolean {
    return this.status === 409;
  }
}

async function request<T>(
  session: ConsoleSession,
  method: string,
  path: string,
  body?: unknown,
): Promise<T> {
  const headers: Record<string, string> = {
    Authorization: `Bearer ${session.token}`,
  };
  if (body !== undefined) {
    headers["Content-Type"] = "application/json";
  }
  const response = await fetch(session.baseUrl + path, {
    method,
    headers,
    body: body === undefined ? undefined : JSON.stringify(body),
  });
  const payload = await response.json().catch(() => ({}));
  if (!response.ok) {
    const detail =
      typeof payload?.detail === "string" ? payload.detail : response.statusText;
    throw new ApiError(response.status, detail);
  }
  return payload as T;
}

export async function login(
  baseUrl: string,
  participantId: string,
  password: string,
): Promise<ConsoleSession> {
  const response = await fetch(baseUrl + "/auth/login", {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ "participant-id": participantId, password }),
  });
  const payload = await response.json().catch(() => ({}));
  if (!response.ok) {
    const detail =
      typeof payload?.detail === "string" ? payload.detail : response.statusText;
    throw new ApiError(response.status, detail);
  }
  return { baseUrl, token: payload["access-token"] as string };
}

export class GatewayClient {
  constructor(readonly session: ConsoleSession) {}

  // -- tokens -----------------------------------------------------------------

  listTokens(status?: string): Promise<AppToken[]> {
    const query = status ? `?status=${encodeURIComponent(status)}` : "";
    return request(this.session, "GET", `/admin/tokens${query}`);
  }

  issueToken(tokenId: string): Promise<AppToken> {
    return request(this.session, "POST", `/admin/tokens/${tokenId}/issue`);
  }

  expireToken(tokenId: string): Promise<AppToken> {
    return request(this.session, "POST", `/admin/tokens/${tokenId}/expire`);
  }

  // -- applications and trust ---------------------------------------------------

  listApplications(): Promise<Application[]> {
    return request(this.session, "GET", "/admin/applications");
  }

  recoverTrust(appId: string, value: number): Promise<{ "trust-index": number }> {
    return request(this.session, "POST", `/admin/applications/${appId}/trust`, {
      "trust-index": value,
    });
  }

  assignRole(appId: string, roleId: string): Promise<Application> {
    return request(this.session, "POST", `/admin/applications/${appId}/role`, {
      "role-id": roleId,
    });
  }

  listControllers(): Promise<Controller[]> {
    return request(this.session, "GET", "/admin/controllers");
  }

  // -- policy objects -------------------------------------------------------------

  listPermissions(): Promise<Permission[]> {
    return request(this.session, "GET", "/admin/permissions");
  }

  createPermission(body: {
    id: string;
    name: string;
    "resource-object": string;
  }): Promise<Permission> {
    return request(this.session, "POST", "/admin/permissions", body);
  }

  deletePermission(permissionId: string): Promise<{ removed: string }> {
    return request(this.session, "DELETE", `/admin/permissions/${permissionId}`);
  }

  listRoles(): Promise<Role[]> {
    return request(this.session, "GET", "/admin/roles");
  }

  createRole(body: {
    id: string;
    name: string;
    permissions: string[];
    priority: number;
  }): Promise<Role> {
    return request(this.session, "POST", "/admin/roles", body);
  }

  updateRole(
    roleId: string,
    body: { name: string; permissions: string[]; priority: number },
  ): Promise<Role> {
    return request(this.session, "PUT", `/admin/roles/${roleId}`, body);
  }

  listRoutes(): Promise<Route[]> {
    return request(this.session, "GET", "/admin/routes");
  }

  createRoute(body: Route): Promise<Route> {
    return request(this.session, "POST", "/admin/routes", body);
  }

  // -- ledger views ---------------------------------------------------------------

  listLogs(offset: number, limit: number): Promise<LogPage> {
    return request(this.session, "GET", `/logs?offset=${offset}&limit=${limit}`);
  }

  listBlocks(start: number, limit: number): Promise<BlockPage> {
    return request(this.session, "GET", `/blocks?start=${start}&limit=${limit}`);
  }
}
