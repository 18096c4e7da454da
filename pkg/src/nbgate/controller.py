"""A mock SDN controller fronting the verification gateway.

The controller simulates a Floodlight-style REST surface over a linear
topology of 16 switches and 32 hosts. Every request from an application
is resolved to its guarding permission, judged by the verification
service, and only then executed against the simulated network. GET
verdicts are cached per (token, method, url); a cache hit answers
immediately and dispatches a background re-verification, so accounting
and trust management stay exact while latency drops.

Rule-installing calls pass the conflict detector before touching the
store: a conflicting rule is refused, and the offending application
loses one trust point. Rules carry the installing role's priority, and
a lower-priority role cannot delete rules written by a higher one.
"""

from __future__ import annotations

import json
import threading
from concurrent.futures import Future, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from typing import Callable

from .aaa import Verdict
from .conflict import ConflictError, RuleStore, validate_rule
from .gateway.service import GatewayService
from .policy import RouteRegistry

# Routes whose ACCEPT installs a rule (checked for conflicts) or removes one.
RULE_INSTALL_PERMISSIONS = ("FL_POST_ADD_ACL", "FL_POST_FIREWALL_RULE")
RULE_DELETE_PERMISSION = "FL_DELETE_FIREWALL_RULE"

MSG_FIREWALL_TOGGLED = "Firewall status is changed"


class SimulatedNetwork:
    """Linear topology: switches chained in a row, two hosts behind each."""

    def __init__(self, num_switches: int = 16, hosts_per_switch: int = 2) -> None:
        self.num_switches = num_switches
        self.hosts_per_switch = hosts_per_switch
        self.firewall_enabled = False

    def switch_id(self, index: int) -> str:
        return "00:00:00:00:00:00:00:%02x" % index

    def switches_json(self) -> list[dict]:
        return [
            {"switchDPID": self.switch_id(n), "inetAddress": "/127.0.0.1:%d" % (6650 + n)}
            for n in range(1, self.num_switches + 1)
        ]

    def devices_json(self) -> list[dict]:
        devices = []
        host = 0
        for switch in range(1, self.num_switches + 1):
            for port in range(1, self.hosts_per_switch + 1):
                host += 1
                devices.append(
                    {
                        "mac": ["00:00:00:00:%02x:%02x" % (switch, port)],
                        "ipv4": ["10.0.0.%d" % host],
                        "attachmentPoint": [
                            {"switchDPID": self.switch_id(switch), "port": port}
                        ],
                    }
                )
        return devices

    def links_json(self) -> list[dict]:
        return [
            {
                "src-switch": self.switch_id(n),
                "src-port": 3,
                "dst-switch": self.switch_id(n + 1),
                "dst-port": 4,
                "type": "internal",
            }
            for n in range(1, self.num_switches)
        ]

    def external_links_json(self) -> list[dict]:
        return []

    def switch_stats(self, switch_id: str, stat_type: str) -> dict:
        return {
            "dpid": switch_id,
            "stat-type": stat_type,
            # Deterministic filler varying by switch so callers can tell
            # responses apart.
            "entries": sum(switch_id.encode()) % 97,
        }

    def firewall_status(self) -> dict:
        return {
            "running": self.firewall_enabled,
            "result": "firewall enabled" if self.firewall_enabled else "firewall disabled",
        }


@dataclass
class ControllerResponse:
    status: int
    body: dict | list
    verdict: Verdict | None = None
    cache_hit: bool = False

    @property
    def accepted(self) -> bool:
        return self.status < 400


@dataclass
class MockController:
    controller_id: str
    verify: Callable[[dict], Verdict]
    routes: RouteRegistry
    role_priority: Callable[[str], int]
    penalize: Callable[[str], int] | None = None
    cache_enabled: bool = True
    refresh_workers: int = 8
    network: SimulatedNetwork = field(default_factory=SimulatedNetwork)

    def __post_init__(self) -> None:
        self.rule_store = RuleStore()
        self._cache: dict[tuple[str, str, str], Verdict] = {}
        self._cache_lock = threading.Lock()
        self._executor = ThreadPoolExecutor(max_workers=self.refresh_workers)
        self._pending: list[Future] = []
        self._pending_lock = threading.Lock()
        self.cache_hits = 0
        self.cache_misses = 0

    # -- request entry point ---------------------------------------------------

    def handle(self, token_id: str, method: str, url: str, data: str = "") -> ControllerResponse:
        method = method.upper()
        permission_id = self.routes.parse(method, url) or ""
        body = {
            "url": url,
            "data": data,
            "tokenId": token_id,
            "httpMethod": method,
            "permissionId": permission_id,
        }
        key = (token_id, method, url)
        cache_hit = False
        if self.cache_enabled and method == "GET":
            with self._cache_lock:
                verdict = self._cache.get(key)
            if verdict is not None:
                cache_hit = True
                self.cache_hits += 1
                # Serve the cached signal now; re-verify in the background
                # so the ledger still accounts this request and any trust
                # or token change lands in the cache for the next call.
                self._dispatch_refresh(key, body)
            else:
                self.cache_misses += 1
                verdict = self.verify(body)
                with self._cache_lock:
                    self._cache[key] = verdict
        else:
            verdict = self.verify(body)
        if not verdict.accepted:
            return ControllerResponse(
                403,
                {"action": verdict.action.value, "message": verdict.message},
                verdict,
                cache_hit,
            )
        status, payload = self._execute(method, url, permission_id, data, verdict)
        return ControllerResponse(status, payload, verdict, cache_hit)

    # -- background refresh ------------------------------------------------------

    def _dispatch_refresh(self, key: tuple[str, str, str], body: dict) -> None:
        def refresh() -> None:
            verdict = self.verify(body)
            with self._cache_lock:
                self._cache[key] = verdict

        future = self._executor.submit(refresh)
        with self._pending_lock:
            self._pending = [f for f in self._pending if not f.done()]
            self._pending.append(future)

    def drain(self, timeout: float | None = 60.0) -> None:
        """Block until dispatched cache refreshes have completed."""
        with self._pending_lock:
            pending, self._pending = self._pending, []
        wait(pending, timeout=timeout)

    def close(self) -> None:
        self.drain()
        self._executor.shutdown(wait=True)

    # -- simulated execution --------------------------------------------------------

    def _execute(
        self, method: str, url: str, permission_id: str, data: str, verdict: Verdict
    ) -> tuple[int, dict | list]:
        if permission_id in RULE_INSTALL_PERMISSIONS:
            return self._install_rule(data, verdict)
        if permission_id == RULE_DELETE_PERMISSION:
            return self._delete_rule(data, verdict)
        if permission_id == "FL_GET_SWITCH_JSON":
            return 200, self.network.switches_json()
        if permission_id == "FL_GET_DEVICE":
            return 200, self.network.devices_json()
        if permission_id == "FL_GET_LINKS_JSON":
            return 200, self.network.links_json()
        if permission_id == "FL_GET_EXERNALLINK_JSON":
            return 200, self.network.external_links_json()
        if permission_id == "FL_GET_SINGLE_SWITCH":
            parts = [p for p in url.split("/") if p]
            # /wm/core/switch/{switch-id}/{stat-type}/json
            return 200, self.network.switch_stats(parts[3], parts[4])
        if permission_id == "FL_GET_FW_RULES_JSON":
            return 200, [rule.to_dict() for rule in self.rule_store.rules()]
        if permission_id == "FL_GET_FW_STATUS_JSON":
            return 200, self.network.firewall_status()
        if permission_id == "FL_PUT_ENABLE_FIREWALL":
            self.network.firewall_enabled = True
            return 200, {"status": MSG_FIREWALL_TOGGLED}
        if permission_id == "FL_PUT_DISABLE_FIREWALL":
            self.network.firewall_enabled = False
            return 200, {"status": MSG_FIREWALL_TOGGLED}
        return 200, {"status": "OK"}

    def _install_rule(self, data: str, verdict: Verdict) -> tuple[int, dict]:
        try:
            raw = json.loads(data) if data else {}
        except json.JSONDecodeError:
            return 400, {"error": "rule body is not valid JSON"}
        app_id = verdict.application_id
        try:
            rule = validate_rule(
                raw, owner_app=app_id, owner_priority=self.role_priority(app_id)
            )
        except ConflictError as exc:
            return 400, {"error": str(exc)}
        report = self.rule_store.check_and_insert(rule)
        if report.conflict:
            trust_after = self.penalize(app_id) if self.penalize else None
            return 403, {
                "status": report.message,
                "conflict-type": report.conflict_type.value,
                "counterpart-rule": report.counterpart.rule_id,
                "trust-index": trust_after,
            }
        return 200, {"status": report.message, "rule-id": rule.rule_id}

    def _delete_rule(self, data: str, verdict: Verdict) -> tuple[int, dict]:
        try:
            raw = json.loads(data) if data else {}
        except json.JSONDecodeError:
            return 400, {"error": "rule body is not valid JSON"}
        rule_id = raw.get("ruleid", "")
        requester_priority = self.role_priority(verdict.application_id)
        try:
            self.rule_store.remove(rule_id, requester_priority)
        except KeyError:
            return 404, {"error": "no rule %r" % rule_id}
        except PermissionError as exc:
            return 403, {"error": str(exc)}
        return 200, {"status": "Rule removed"}


def attach_controller(
    gateway: GatewayService,
    controller_id: str,
    password: str,
    wallet: dict | None = None,
    *,
    cache_enabled: bool = True,
    refresh_workers: int = 8,
) -> MockController:
    """Log a registered controller into the gateway and wrap it in a mock.

    The returned controller verifies every application request through the
    gateway session, resolves role priorities from ledger state, and
    reports rule conflicts back as trust penalties.
    """
    grant = gateway.login(controller_id, password)
    session = gateway.session(grant["access-token"])
    if wallet is not None:
        gateway.upload_wallet(session, wallet)

    def verify(body: dict) -> Verdict:
        return gateway.verify_for_controller(session, body)

    def role_priority(app_id: str) -> int:
        app = gateway.reader.application(app_id)
        if app is None:
            return 0
        role = gateway.reader.role(app.get("role_id", ""))
        if role is None:
            return 0
        return int(role.get("priority", 0))

    return MockController(
        controller_id=controller_id,
        verify=verify,
        routes=gateway.routes,
        role_priority=role_priority,
        penalize=gateway.verification.penalize,
        cache_enabled=cache_enabled,
        refresh_workers=refresh_workers,
    )
