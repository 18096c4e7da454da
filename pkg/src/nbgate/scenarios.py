"""Scripted evaluation scenarios over a fresh deployment.

Each scenario builds its own gateway, seeds the reference catalog of
permissions, roles, applications, and tokens, drives the workload
through a mock controller, and returns a JSON-friendly report with an
overall pass flag. Reports carry only deterministic fields, so running
a scenario twice produces identical output.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

from .conflict import RuleStore
from .controller import MockController, attach_controller
from .gateway.service import GatewayError, GatewayService, Session
from .identity import identity_from_wallet
from .ledger import build_proposal

# Reference deployment: each application label maps to a role of the
# same name carrying its granted permission set.
ROLE_PERMISSIONS: dict[str, list[str]] = {
    "MON_APP": [
        "FL_GET_SWITCH_JSON",
        "FL_GET_DEVICE",
        "FL_GET_SINGLE_SWITCH",
        "FL_GET_LINKS_JSON",
        "FL_GET_EXERNALLINK_JSON",
        "FL_POST_ADD_ACL",
    ],
    "FW_APP": [
        "FL_GET_FW_RULES_JSON",
        "FL_GET_FW_STATUS_JSON",
        "FL_PUT_ENABLE_FIREWALL",
        "FL_PUT_DISABLE_FIREWALL",
        "FL_POST_FIREWALL_RULE",
        "FL_DELETE_FIREWALL_RULE",
    ],
    "MON_FW_APP": [
        "FL_GET_FW_RULES_JSON",
        "FL_GET_FW_STATUS_JSON",
    ],
    "MON_ACL_APP": [
        "FL_POST_ADD_ACL",
    ],
}

# Write priority: the firewall function outranks monitoring roles.
ROLE_PRIORITIES = {"MON_APP": 5, "FW_APP": 10, "MON_FW_APP": 1, "MON_ACL_APP": 5}

APPLICATIONS = {
    "app1": "MON_APP",
    "app2": "FW_APP",
    "app3": "MON_FW_APP",
    "app4": "MON_ACL_APP",
}

# MON_APP deliberately holds no session token.
TOKEN_HOLDERS = ("app2", "app3", "app4")

CONTROLLER_ID = "ctrl1"

# A well-formed permit rule used wherever a scenario needs some rule body.
SAMPLE_RULE = {
    "nw-proto": "TCP",
    "src-ip": "10.0.0.1/32",
    "dst-ip": "10.0.0.2/32",
    "priority": 1,
    "action": "ALLOW",
}

# Conflict suites: per suite, rules are installed in order into an empty
# store and each must produce exactly the listed result.
CONFLICT_SUITES: list[dict] = [
    {
        "id": "S1",
        "rules": [
            ("TCP", "10.0.0.0/24", "10.0.0.0/24", 51, "ALLOW", "SUCCESS"),
            ("TCP", "10.0.0.0/32", "10.0.0.2/32", 50, "ALLOW", "CONFLICT(Redundancy)"),
        ],
    },
    {
        "id": "S2",
        "rules": [
            ("ICMP", "10.0.0.0/24", "10.0.0.0/24", 52, "ALLOW", "SUCCESS"),
            ("ICMP", "10.0.0.0/24", "10.0.0.2/32", 51, "DENY", "CONFLICT(Shadowing)"),
        ],
    },
    {
        "id": "S3",
        "rules": [
            ("TCP", "10.0.0.0/24", "10.0.0.0/24", 50, "ALLOW", "SUCCESS"),
            ("TCP", "10.0.0.0/32", "10.0.0.2/32", 50, "DENY", "CONFLICT(Correlation)"),
        ],
    },
    {
        "id": "S4",
        "rules": [
            ("UDP", "10.0.0.1/32", "10.0.0.2/32", 52, "ALLOW", "SUCCESS"),
            ("UDP", "10.0.0.0/24", "10.0.0.0/24", 53, "DENY", "CONFLICT(Generalization)"),
        ],
    },
    {
        "id": "S5",
        "rules": [
            ("TCP", "10.0.0.0/28", "10.0.0.0/28", 51, "DROP", "SUCCESS"),
            ("TCP", "10.0.0.1/32", "10.0.0.0/24", 55, "DROP", "CONFLICT(Overlap)"),
        ],
    },
    {
        "id": "S6",
        "rules": [
            ("TCP", "10.0.0.0/28", "10.0.0.0/28", 51, "DENY", "SUCCESS"),
            ("TCP", "10.0.0.16/29", "10.0.0.24/29", 52, "ALLOW", "SUCCESS"),
            ("ICMP", "10.0.0.1/32", "10.0.0.2/32", 55, "DENY", "SUCCESS"),
        ],
    },
]


def _permission_catalog() -> list[dict]:
    with resources.files("nbgate.config").joinpath("routes.json").open() as fh:
        return json.load(fh)["permissions"]


@dataclass
class AppAccess:
    """Login material and state handles for one seeded application."""

    app_id: str
    name: str
    role_id: str
    password: str
    wallet: dict
    token_id: str = ""


@dataclass
class Fixture:
    gateway: GatewayService
    admin: Session
    controller_id: str
    controller_password: str
    controller_wallet: dict
    apps: dict[str, AppAccess] = field(default_factory=dict)

    def app_named(self, name: str) -> AppAccess:
        for access in self.apps.values():
            if access.name == name:
                return access
        raise KeyError(name)

    def trust_of(self, app_id: str) -> int:
        return self.gateway.reader.application(app_id)["trust_index"]


def app_session(gateway: GatewayService, access: AppAccess) -> Session:
    """Log the application in and bind its identity card."""
    grant = gateway.login(access.app_id, access.password)
    session = gateway.session(grant["access-token"])
    gateway.upload_wallet(session, access.wallet)
    # Re-resolve so the session reflects the bound card.
    return gateway.session(grant["access-token"])


def seed_fixture(
    gateway: GatewayService,
    *,
    admin_password: str = "admin",
    skip_permission: str | None = None,
) -> Fixture:
    """Deploy the reference catalog onto a fresh gateway.

    skip_permission leaves one permission (and every grant of it) out of
    the catalog so a scenario can demonstrate inserting it later.
    """
    grant = gateway.login("admin", admin_password)
    admin = gateway.session(grant["access-token"])

    catalog = [p for p in _permission_catalog() if p["id"] != skip_permission]
    for permission in catalog:
        gateway.admin_commit(
            admin,
            "createPermission",
            {
                "id": permission["id"],
                "name": permission["name"],
                "resource-object": permission["resource-object"],
            },
        )
    for role_id, permission_ids in ROLE_PERMISSIONS.items():
        gateway.admin_commit(
            admin,
            "createRole",
            {
                "id": role_id,
                "name": role_id,
                "permissions": [p for p in permission_ids if p != skip_permission],
                "priority": ROLE_PRIORITIES[role_id],
            },
        )

    fixture = Fixture(
        gateway=gateway,
        admin=admin,
        controller_id=CONTROLLER_ID,
        controller_password="",
        controller_wallet={},
    )
    for app_id, role_id in APPLICATIONS.items():
        created = gateway.create_application(
            admin,
            {"id": app_id, "name": role_id, "role-id": role_id, "trust-index": 100},
        )
        fixture.apps[app_id] = AppAccess(
            app_id=app_id,
            name=role_id,
            role_id=role_id,
            password=created["password"],
            wallet=created["wallet"],
        )

    created = gateway.create_controller(
        admin,
        {
            "id": CONTROLLER_ID,
            "name": CONTROLLER_ID,
            "permissions": [p["id"] for p in catalog],
        },
    )
    fixture.controller_password = created["password"]
    fixture.controller_wallet = created["wallet"]

    for app_id in TOKEN_HOLDERS:
        access = fixture.apps[app_id]
        session = app_session(gateway, access)
        token = gateway.request_token(session, CONTROLLER_ID)
        gateway.issue_token(admin, token["id"])
        access.token_id = token["id"]
    return fixture


def _controller_for(fixture: Fixture, **options) -> MockController:
    return attach_controller(
        fixture.gateway,
        fixture.controller_id,
        fixture.controller_password,
        fixture.controller_wallet,
        **options,
    )


def _case(name: str, expected: dict, actual: dict) -> dict:
    return {
        "case": name,
        "expected": expected,
        "actual": actual,
        "passed": expected == actual,
    }


def _report(number: int, title: str, cases: list[dict], **extra) -> dict:
    report = {
        "scenario": number,
        "title": title,
        "cases": cases,
        "passed": all(case["passed"] for case in cases),
    }
    report.update(extra)
    return report


# ---------------------------------------------------------------------------
# Scenario 1: session authentication
# ---------------------------------------------------------------------------


def _scenario_authentication(**options) -> dict:
    gateway = GatewayService()
    fixture = seed_fixture(gateway)
    access = fixture.app_named("MON_APP")
    cases = []

    def probe(bearer: str | None) -> dict:
        try:
            session = gateway.session(bearer)
            answer = gateway.ping(session, bearer)
            return {"action": answer["action"], "message": answer["message"]}
        except GatewayError as exc:
            return {"action": "DENY", "message": exc.detail}

    cases.append(
        _case(
            "no session token",
            {"action": "DENY", "message": "Authorization required"},
            probe(None),
        )
    )
    cases.append(
        _case(
            "malformed session token",
            {"action": "DENY", "message": "Authorization required"},
            probe("not.a.token"),
        )
    )

    bearer = gateway.login(access.app_id, access.password)["access-token"]
    cases.append(
        _case(
            "valid session token without identity card",
            {"action": "DENY", "message": "Authorization required"},
            probe(bearer),
        )
    )

    gateway.upload_wallet(gateway.session(bearer), access.wallet)
    cases.append(
        _case(
            "valid session token with identity card",
            {"action": "ACCEPT", "message": "Return app information"},
            probe(bearer),
        )
    )
    return _report(1, "session authentication", cases)


# ---------------------------------------------------------------------------
# Scenario 2: session-token lifecycle judgments
# ---------------------------------------------------------------------------


def _scenario_token_states(**options) -> dict:
    gateway = GatewayService()
    fixture = seed_fixture(gateway)
    controller = _controller_for(fixture)
    access = fixture.app_named("MON_APP")
    rule_body = json.dumps(SAMPLE_RULE)
    cases = []

    def submit(token_id: str) -> dict:
        answer = controller.handle(token_id, "POST", "/wm/acl/rules/json", rule_body)
        return {
            "status": answer.status,
            "action": answer.verdict.action.value,
            "message": answer.verdict.message,
        }

    cases.append(
        _case(
            "no token on file",
            {"status": 403, "action": "DENY", "message": "Token required"},
            submit(""),
        )
    )

    session = app_session(gateway, access)
    token = gateway.request_token(session, fixture.controller_id)
    cases.append(
        _case(
            "token requested but not issued",
            {"status": 403, "action": "DENY", "message": "Token not issued"},
            submit(token["id"]),
        )
    )

    gateway.issue_token(fixture.admin, token["id"])
    accepted = controller.handle(token["id"], "POST", "/wm/acl/rules/json", rule_body)
    cases.append(
        _case(
            "token issued",
            {"status": 200, "action": "ACCEPT", "result": "SUCCESS"},
            {
                "status": accepted.status,
                "action": accepted.verdict.action.value,
                "result": accepted.body.get("status"),
            },
        )
    )

    gateway.expire_token(fixture.admin, token["id"])
    cases.append(
        _case(
            "token expired",
            {"status": 403, "action": "DENY", "message": "Token expired"},
            submit(token["id"]),
        )
    )

    cases.append(
        _case(
            "state judgments carry no trust penalty",
            {"trust-index": 100},
            {"trust-index": fixture.trust_of(access.app_id)},
        )
    )
    controller.close()
    return _report(2, "session-token lifecycle", cases)


# ---------------------------------------------------------------------------
# Scenario 3: ledger write protection for the permission catalog
# ---------------------------------------------------------------------------


def _scenario_ledger_acl(**options) -> dict:
    gateway = GatewayService()
    inserted = "FL_GET_LINKS_JSON"
    fixture = seed_fixture(gateway, skip_permission=inserted)
    access = fixture.app_named("MON_APP")
    payload = {"id": inserted, "name": "List links", "resource-object": "link"}
    cases = []

    height_before = gateway.ledger.height
    identity = identity_from_wallet(access.wallet)
    result = gateway.ledger.process(build_proposal(identity, "createPermission", payload))
    cases.append(
        _case(
            "application inserts a permission",
            {
                "committed": False,
                "denied": True,
                "present": False,
                "blocks-added": 0,
            },
            {
                "committed": result.committed,
                "denied": result.message.startswith("DENY"),
                "present": gateway.reader.permission(inserted) is not None,
                "blocks-added": gateway.ledger.height - height_before,
            },
        )
    )

    height_before = gateway.ledger.height
    created = gateway.admin_commit(fixture.admin, "createPermission", payload)
    cases.append(
        _case(
            "administrator inserts the same permission",
            {"committed": True, "present": True, "blocks-added": 1},
            {
                "committed": created is not None and created["id"] == inserted,
                "present": gateway.reader.permission(inserted) is not None,
                "blocks-added": gateway.ledger.height - height_before,
            },
        )
    )
    return _report(3, "ledger write protection", cases)


# ---------------------------------------------------------------------------
# Scenario 4: role-based authorization on a firewall toggle
# ---------------------------------------------------------------------------


def _scenario_authorization(**options) -> dict:
    gateway = GatewayService()
    fixture = seed_fixture(gateway)
    controller = _controller_for(fixture)
    holder = fixture.app_named("FW_APP")
    watcher = fixture.app_named("MON_FW_APP")
    url = "/wm/firewall/module/enable/json"
    cases = []

    answer = controller.handle(holder.token_id, "PUT", url)
    cases.append(
        _case(
            "application holding the permission",
            {
                "status": 200,
                "action": "ACCEPT",
                "result": "Firewall status is changed",
                "trust-index": 100,
            },
            {
                "status": answer.status,
                "action": answer.verdict.action.value,
                "result": answer.body.get("status"),
                "trust-index": fixture.trust_of(holder.app_id),
            },
        )
    )

    answer = controller.handle(watcher.token_id, "PUT", url)
    cases.append(
        _case(
            "application without the permission",
            {
                "status": 403,
                "action": "DENY",
                "message": "Unauthorized",
                "trust-index": 99,
            },
            {
                "status": answer.status,
                "action": answer.verdict.action.value,
                "message": answer.verdict.message,
                "trust-index": fixture.trust_of(watcher.app_id),
            },
        )
    )
    controller.close()
    return _report(4, "role-based authorization", cases)


# ---------------------------------------------------------------------------
# Scenario 5: per-application rate limiting
# ---------------------------------------------------------------------------


def _scenario_quota(limit: int = 1200, **options) -> dict:
    # A frozen quota clock keeps the whole run inside one window, so the
    # outcome does not depend on host speed.
    gateway = GatewayService(quota_limit=limit, quota_clock=lambda: 0.0)
    fixture = seed_fixture(gateway)
    controller = _controller_for(fixture, cache_enabled=False)
    access = fixture.app_named("FW_APP")
    url = "/wm/firewall/module/status/json"

    logs_before = gateway.reader.log_count()
    accepted = 0
    first_denied_index = None
    denial_message = None
    sent = limit + 1
    for index in range(1, sent + 1):
        answer = controller.handle(access.token_id, "GET", url)
        if answer.accepted:
            accepted += 1
        elif first_denied_index is None:
            first_denied_index = index
            denial_message = answer.verdict.message
    logs_added = gateway.reader.log_count() - logs_before

    cases = [
        _case(
            "requests within the window limit",
            {"accepted": limit},
            {"accepted": accepted},
        ),
        _case(
            "first request past the limit",
            {
                "first-denied-index": limit + 1,
                "message": "Quota exceeded",
                "trust-index": 100,
            },
            {
                "first-denied-index": first_denied_index,
                "message": denial_message,
                "trust-index": fixture.trust_of(access.app_id),
            },
        ),
        _case(
            "every request is accounted",
            {"log-entries-added": sent},
            {"log-entries-added": logs_added},
        ),
    ]
    controller.close()
    return _report(
        5,
        "per-application rate limiting",
        cases,
        limit=limit,
        sent=sent,
    )


# ---------------------------------------------------------------------------
# Scenario 6: flow-rule conflict detection
# ---------------------------------------------------------------------------


def _scenario_conflicts(**options) -> dict:
    gateway = GatewayService()
    fixture = seed_fixture(gateway)
    controller = _controller_for(fixture)
    access = fixture.app_named("MON_ACL_APP")
    cases = []
    conflicts = 0

    for suite in CONFLICT_SUITES:
        # Every suite starts from an empty rule store.
        controller.rule_store = RuleStore()
        results = []
        for proto, src, dst, priority, action, expected in suite["rules"]:
            body = json.dumps(
                {
                    "nw-proto": proto,
                    "src-ip": src,
                    "dst-ip": dst,
                    "priority": priority,
                    "action": action,
                }
            )
            answer = controller.handle(
                access.token_id, "POST", "/wm/acl/rules/json", body
            )
            results.append(answer.body.get("status"))
            if expected != "SUCCESS":
                conflicts += 1
        cases.append(
            _case(
                "suite %s" % suite["id"],
                {"results": [rule[5] for rule in suite["rules"]]},
                {"results": results},
            )
        )

    cases.append(
        _case(
            "each conflict costs one trust point",
            {"trust-index": 100 - conflicts},
            {"trust-index": fixture.trust_of(access.app_id)},
        )
    )
    controller.close()
    return _report(6, "flow-rule conflict detection", cases)


_SCENARIOS = {
    1: _scenario_authentication,
    2: _scenario_token_states,
    3: _scenario_ledger_acl,
    4: _scenario_authorization,
    5: _scenario_quota,
    6: _scenario_conflicts,
}

SCENARIO_NUMBERS = tuple(sorted(_SCENARIOS))


def run_scenario(number: int, **options) -> dict:
    """Run one scripted scenario on a fresh deployment."""
    try:
        runner = _SCENARIOS[number]
    except KeyError:
        raise ValueError("unknown scenario %r" % number) from None
    return runner(**options)
