/* Policy editor: permissions, roles, and route bindings.
 *
 * The console submits edits verbatim and renders whatever the gateway
 * accepted; validation (duplicate ids, unknown resource objects, ACL)
 * happens server-side and rejections land in the banner unchanged.
 */

import { GatewayClient, Permission, Role, Route } from "../api.js";
import { ErrorBanner } from "../banner.js";
import { button, clear, el } from "../dom.js";
import { DEFAULT_POLL_MS, Poller } from "../poll.js";

function input(name: string, placeholder: string): HTMLInputElement {
  return el("input", { name, placeholder, "aria-label": placeholder });
}

export class PolicyEditor {
  readonly banner = new ErrorBanner();
  private readonly poller: Poller;
  private readonly permissionList: HTMLElement;
  private readonly roleList: HTMLElement;
  private readonly routeList: HTMLElement;
  permissions: Permission[] = [];
  roles: Role[] = [];
  routes: Route[] = [];

  private readonly permissionForm: HTMLFormElement;
  private readonly roleForm: HTMLFormElement;
  private readonly routeForm: HTMLFormElement;
  private editingRoleId: string | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: GatewayClient,
    intervalMs: number = DEFAULT_POLL_MS,
  ) {
    this.permissionList = el("div", { class: "list" });
    this.roleList = el("div", { class: "list" });
    this.routeList = el("div", { class: "list" });

    this.permissionForm = this.buildPermissionForm();
    this.roleForm = this.buildRoleForm();
    this.routeForm = this.buildRouteForm();

    this.root.append(
      this.banner.node,
      el("section", { class: "policy-permissions" },
        el("h3", {}, "Permissions"), this.permissionList, this.permissionForm),
      el("section", { class: "policy-roles" },
        el("h3", {}, "Roles"), this.roleList, this.roleForm),
      el("section", { class: "policy-routes" },
        el("h3", {}, "Routes"), this.routeList, this.routeForm),
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
    [this.permissions, this.roles, this.routes] = await Promise.all([
      this.client.listPermissions(),
      this.client.listRoles(),
      this.client.listRoutes(),
    ]);
    this.render();
    this.banner.clearAfterPoll();
  }

  // -- forms ------------------------------------------------------------------

  private buildPermissionForm(): HTMLFormElement {
    const form = el("form", { class: "create-permission" });
    form.append(
      input("id", "permission id"),
      input("name", "name"),
      input("resource-object", "resource object"),
      el("button", { type: "submit" }, "Add permission"),
    );
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.createPermission(form);
    });
    return form;
  }

  private buildRoleForm(): HTMLFormElement {
    const form = el("form", { class: "create-role" });
    form.append(
      input("id", "role id"),
      input("name", "name"),
      input("permissions", "permission ids, comma separated"),
      input("priority", "priority"),
      el("button", { type: "submit" }, "Save role"),
    );
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.saveRole(form);
    });
    return form;
  }

  private buildRouteForm(): HTMLFormElement {
    const form = el("form", { class: "create-route" });
    form.append(
      input("method", "method"),
      input("pattern", "path pattern"),
      input("permission", "permission id"),
      el("button", { type: "submit" }, "Add route"),
    );
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.createRoute(form);
    });
    return form;
  }

  private value(form: HTMLFormElement, name: string): string {
    return (form.elements.namedItem(name) as HTMLInputElement).value.trim();
  }

  // -- mutations ----------------------------------------------------------------

  async createPermission(form: HTMLFormElement): Promise<void> {
    const body = {
      id: this.value(form, "id"),
      name: this.value(form, "name"),
      "resource-object": this.value(form, "resource-object"),
    };
    try {
      await this.client.createPermission(body);
      this.banner.clearAfterMutation();
      form.reset();
    } catch (err) {
      this.banner.showMutationError(err);
      return;
    }
    await this.poller.run();
  }

  async deletePermission(permissionId: string): Promise<void> {
    try {
      await this.client.deletePermission(permissionId);
      this.banner.clearAfterMutation();
    } catch (err) {
      this.banner.showMutationError(err);
      return;
    }
    await this.poller.run();
  }

  async saveRole(form: HTMLFormElement): Promise<void> {
    const body = {
      name: this.value(form, "name"),
      permissions: this.value(form, "permissions")
        .split(",")
        .map((p) => p.trim())
        .filter((p) => p.length > 0),
      priority: Number(this.value(form, "priority") || "0"),
    };
    try {
      if (this.editingRoleId !== null) {
        await this.client.updateRole(this.editingRoleId, body);
      } else {
        await this.client.createRole({ id: this.value(form, "id"), ...body });
      }
      this.banner.clearAfterMutation();
      this.editingRoleId = null;
      form.reset();
      (form.elements.namedItem("id") as HTMLInputElement).disabled = false;
    } catch (err) {
      this.banner.showMutationError(err);
      return;
    }
    await this.poller.run();
  }

  editRole(role: Role): void {
    this.editingRoleId = role.id;
    const idField = this.roleForm.elements.namedItem("id") as HTMLInputElement;
    idField.value = role.id;
    idField.disabled = true;
    (this.roleForm.elements.namedItem("name") as HTMLInputElement).value = role.name;
    (this.roleForm.elements.namedItem("permissions") as HTMLInputElement).value =
      role.permissions.join(",");
    (this.roleForm.elements.namedItem("priority") as HTMLInputElement).value =
      String(role.priority);
  }

  async createRoute(form: HTMLFormElement): Promise<void> {
    const body = {
      method: this.value(form, "method").toUpperCase(),
      pattern: this.value(form, "pattern"),
      permission: this.value(form, "permission"),
    };
    try {
      await this.client.createRoute(body);
      this.banner.clearAfterMutation();
      form.reset();
    } catch (err) {
      this.banner.showMutationError(err);
      return;
    }
    await this.poller.run();
  }

  // -- rendering ----------------------------------------------------------------

  private render(): void {
    clear(this.permissionList);
    for (const permission of this.permissions) {
      this.permissionList.append(
        el(
          "div",
          { class: "row", "data-permission": permission.id },
          el("code", {}, permission.id),
          ` ${permission.name} (${permission.resource_object}) `,
          button("Delete", () => void this.deletePermission(permission.id), "delete"),
        ),
      );
    }

    clear(this.roleList);
    for (const role of this.roles) {
      this.roleList.append(
        el(
          "div",
          { class: "row", "data-role": role.id },
          el("code", {}, role.id),
          ` ${role.name} priority ${role.priority}: ${role.permissions.join(", ")} `,
          button("Edit", () => this.editRole(role), "edit"),
        ),
      );
    }

    clear(this.routeList);
    for (const route of this.routes) {
      this.routeList.append(
        el(
          "div",
          { class: "row" },
          el("code", {}, `${route.method} ${route.pattern}`),
          ` requires ${route.permission}`,
        ),
      );
    }
  }
}
