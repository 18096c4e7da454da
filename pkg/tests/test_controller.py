"""Mock controller: permission parsing, caching, conflict handling, and
the simulated network surface."""

from __future__ import annotations

import json
import threading

import pytest

from nbgate.bench import _log_multiset
from nbgate.conflict import RuleStore
from nbgate.controller import SimulatedNetwork, attach_controller
from nbgate.gateway.service import GatewayError, GatewayService
from nbgate.scenarios import AppAccess, app_session, seed_fixture

RULE_A = {
    "nw-proto": "TCP",
    "src-ip": "10.0.0.1/32",
    "dst-ip": "10.0.0.0/24",
    "priority": 51,
    "action": "ALLOW",
}
# Subset destination with the same action: conflicts with RULE_A.
RULE_A_REDUNDANT = {
    "nw-proto": "TCP",
    "src-ip": "10.0.0.1/32",
    "dst-ip": "10.0.0.2/32",
    "priority": 50,
    "action": "ALLOW",
}
# Different protocol: never conflicts with RULE_A.
RULE_B = {
    "nw-proto": "UDP",
    "src-ip": "10.0.0.1/32",
    "dst-ip": "10.0.0.0/24",
    "priority": 51,
    "action": "ALLOW",
}

STATUS_URL = "/wm/firewall/module/status/json"
FW_RULE_URL = "/wm/firewall/rules/json"


@pytest.fixture(scope="module")
def deployment():
    gateway = GatewayService()
    fixture = seed_fixture(gateway)
    # MON_APP holds no token by default; these tests need one for the
    # read-only switch and topology routes.
    monitor = fixture.apps["app1"]
    session = app_session(gateway, monitor)
    token = gateway.request_token(session, fixture.controller_id)
    gateway.issue_token(fixture.admin, token["id"])
    monitor.token_id = token["id"]
    return fixture


@pytest.fixture()
def controller(deployment):
    ctl = attach_controller(
        deployment.gateway,
        deployment.controller_id,
        deployment.controller_password,
        deployment.controller_wallet,
    )
    ctl.network.firewall_enabled = False
    yield ctl
    ctl.close()


def fw_token(deployment) -> str:
    return deployment.app_named("FW_APP").token_id


def mon_token(deployment) -> str:
    return deployment.app_named("MON_APP").token_id


# ---------------------------------------------------------------------------
# Simulated network views
# ---------------------------------------------------------------------------


def test_topology_dimensions():
    network = SimulatedNetwork()
    assert len(network.switches_json()) == 16
    assert len(network.devices_json()) == 32
    # A linear chain of 16 switches has 15 links.
    assert len(network.links_json()) == 15
    assert network.external_links_json() == []


def test_every_host_attaches_to_a_known_switch():
    network = SimulatedNetwork()
    switches = {s["switchDPID"] for s in network.switches_json()}
    for device in network.devices_json():
        assert device["attachmentPoint"][0]["switchDPID"] in switches


def test_switch_views_served(deployment, controller):
    answer = controller.handle(mon_token(deployment), "GET", "/wm/core/controller/switches/json")
    assert answer.status == 200
    assert len(answer.body) == 16

    answer = controller.handle(mon_token(deployment), "GET", "/wm/device/")
    assert answer.status == 200
    assert len(answer.body) == 32

    answer = controller.handle(mon_token(deployment), "GET", "/wm/topology/links/json")
    assert answer.status == 200
    assert len(answer.body) == 15


def test_single_switch_stats_parses_path(deployment, controller):
    dpid = "00:00:00:00:00:00:00:03"
    answer = controller.handle(
        mon_token(deployment), "GET", "/wm/core/switch/%s/port/json" % dpid
    )
    assert answer.status == 200
    assert answer.body["dpid"] == dpid
    assert answer.body["stat-type"] == "port"


# ---------------------------------------------------------------------------
# Verification outcomes
# ---------------------------------------------------------------------------


def test_deny_maps_to_403_and_leaves_state(deployment, controller):
    watcher = deployment.app_named("MON_FW_APP")
    answer = controller.handle(watcher.token_id, "PUT", "/wm/firewall/module/enable/json")
    assert answer.status == 403
    assert answer.body == {"action": "DENY", "message": "Unauthorized"}
    assert controller.network.firewall_enabled is False
    assert len(controller.rule_store) == 0


def test_unmapped_url_is_unauthorized(deployment, controller):
    answer = controller.handle(fw_token(deployment), "GET", "/wm/unknown/endpoint")
    assert answer.status == 403
    assert answer.body["message"] == "Unauthorized"


def test_firewall_toggle_roundtrip(deployment, controller):
    token = fw_token(deployment)
    answer = controller.handle(token, "PUT", "/wm/firewall/module/enable/json")
    assert answer.status == 200
    assert answer.body == {"status": "Firewall status is changed"}
    assert controller.network.firewall_enabled is True

    status = controller.handle(token, "GET", STATUS_URL)
    assert status.body["running"] is True

    answer = controller.handle(token, "PUT", "/wm/firewall/module/disable/json")
    assert answer.status == 200
    assert controller.network.firewall_enabled is False


# ---------------------------------------------------------------------------
# Rule installation
# ---------------------------------------------------------------------------


def test_rule_install_and_listing(deployment, controller):
    token = fw_token(deployment)
    answer = controller.handle(token, "POST", FW_RULE_URL, json.dumps(RULE_A))
    assert answer.status == 200
    assert answer.body["status"] == "SUCCESS"
    rule_id = answer.body["rule-id"]

    listing = controller.handle(token, "GET", FW_RULE_URL)
    assert listing.status == 200
    assert [rule["rule-id"] for rule in listing.body] == [rule_id]
    assert listing.body[0]["owner-app"] == "app2"


def test_conflicting_rule_refused_and_penalized(deployment, controller):
    gateway = deployment.gateway
    token = fw_token(deployment)
    trust_before = deployment.trust_of("app2")
    first = controller.handle(token, "POST", FW_RULE_URL, json.dumps(RULE_A))
    assert first.body["status"] == "SUCCESS"

    answer = controller.handle(token, "POST", FW_RULE_URL, json.dumps(RULE_A_REDUNDANT))
    assert answer.status == 403
    assert answer.body["status"] == "CONFLICT(Redundancy)"
    assert answer.body["counterpart-rule"] == first.body["rule-id"]
    assert answer.body["trust-index"] == trust_before - 1
    assert deployment.trust_of("app2") == trust_before - 1
    assert len(controller.rule_store) == 1

    # Restore so module-scoped state does not leak into other tests.
    gateway.set_trust(deployment.admin, "app2", 100)


@pytest.mark.parametrize(
    "body",
    [
        "not json",
        json.dumps({"nw-proto": "TCP"}),
        json.dumps(dict(RULE_A, priority=70000)),
        json.dumps(dict(RULE_A, **{"dst-ip": "300.1.2.3/24"})),
    ],
)
def test_malformed_rule_is_400_without_penalty(deployment, controller, body):
    trust_before = deployment.trust_of("app2")
    answer = controller.handle(fw_token(deployment), "POST", FW_RULE_URL, body)
    assert answer.status == 400
    assert "error" in answer.body
    assert deployment.trust_of("app2") == trust_before
    assert len(controller.rule_store) == 0


def test_delete_rule_lifecycle(deployment, controller):
    token = fw_token(deployment)
    installed = controller.handle(token, "POST", FW_RULE_URL, json.dumps(RULE_A))
    rule_id = installed.body["rule-id"]

    missing = controller.handle(token, "DELETE", FW_RULE_URL, json.dumps({"ruleid": "nope"}))
    assert missing.status == 404

    removed = controller.handle(token, "DELETE", FW_RULE_URL, json.dumps({"ruleid": rule_id}))
    assert removed.status == 200
    assert len(controller.rule_store) == 0


def test_lower_priority_role_cannot_delete(deployment, controller):
    """A rule written by a higher-priority role is write-protected."""
    gateway = deployment.gateway
    admin = deployment.admin
    # A low-priority role that may delete firewall rules but not add them.
    gateway.admin_commit(
        admin,
        "createRole",
        {
            "id": "JANITOR",
            "name": "JANITOR",
            "permissions": ["FL_DELETE_FIREWALL_RULE"],
            "priority": 1,
        },
    )
    created = gateway.create_application(
        admin,
        {"id": "app9", "name": "JANITOR_APP", "role-id": "JANITOR", "trust-index": 100},
    )
    janitor = AppAccess(
        app_id="app9",
        name="JANITOR_APP",
        role_id="JANITOR",
        password=created["password"],
        wallet=created["wallet"],
    )
    session = app_session(gateway, janitor)
    token = gateway.request_token(session, deployment.controller_id)
    gateway.issue_token(admin, token["id"])

    installed = controller.handle(fw_token(deployment), "POST", FW_RULE_URL, json.dumps(RULE_A))
    rule_id = installed.body["rule-id"]

    refused = controller.handle(
        token["id"], "DELETE", FW_RULE_URL, json.dumps({"ruleid": rule_id})
    )
    assert refused.status == 403
    assert "write-protected" in refused.body["error"]
    assert len(controller.rule_store) == 1

    # The owner role itself may remove it.
    removed = controller.handle(
        fw_token(deployment), "DELETE", FW_RULE_URL, json.dumps({"ruleid": rule_id})
    )
    assert removed.status == 200


def test_concurrent_conflicting_installs_admit_one(deployment, controller):
    token = fw_token(deployment)
    results = []
    barrier = threading.Barrier(2)

    def install(rule):
        barrier.wait()
        results.append(controller.handle(token, "POST", FW_RULE_URL, json.dumps(rule)))

    threads = [
        threading.Thread(target=install, args=(RULE_A,)),
        threading.Thread(target=install, args=(RULE_A_REDUNDANT,)),
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    # Whichever rule lands first wins; the other must conflict with it.
    kinds = sorted("SUCCESS" if r.body["status"] == "SUCCESS" else "CONFLICT" for r in results)
    assert kinds == ["CONFLICT", "SUCCESS"]
    assert len(controller.rule_store) == 1
    deployment.gateway.set_trust(deployment.admin, "app2", 100)


# ---------------------------------------------------------------------------
# Verdict cache
# ---------------------------------------------------------------------------


def test_cache_hit_serves_and_still_accounts(deployment, controller):
    gateway = deployment.gateway
    token = fw_token(deployment)
    logs_before = gateway.reader.log_count()

    first = controller.handle(token, "GET", STATUS_URL)
    second = controller.handle(token, "GET", STATUS_URL)
    assert first.cache_hit is False
    assert second.cache_hit is True
    assert controller.cache_misses >= 1
    assert controller.cache_hits >= 1

    controller.drain()
    assert gateway.reader.log_count() == logs_before + 2


def test_cache_refresh_picks_up_revocation():
    gateway = GatewayService()
    fixture = seed_fixture(gateway)
    controller = attach_controller(
        gateway,
        fixture.controller_id,
        fixture.controller_password,
        fixture.controller_wallet,
    )
    token = fixture.app_named("FW_APP").token_id

    assert controller.handle(token, "GET", STATUS_URL).status == 200
    gateway.expire_token(fixture.admin, token)

    # The hit answers from the stale cache entry while a refresh runs.
    stale = controller.handle(token, "GET", STATUS_URL)
    assert stale.cache_hit is True
    assert stale.status == 200
    controller.drain()

    refreshed = controller.handle(token, "GET", STATUS_URL)
    assert refreshed.cache_hit is True
    assert refreshed.status == 403
    assert refreshed.verdict.message == "Token expired"
    controller.close()


def test_mutations_are_never_cached(deployment, controller):
    token = fw_token(deployment)
    for _ in range(2):
        answer = controller.handle(token, "PUT", "/wm/firewall/module/enable/json")
        assert answer.cache_hit is False


def test_disabled_cache_never_hits(deployment):
    ctl = attach_controller(
        deployment.gateway,
        deployment.controller_id,
        deployment.controller_password,
        cache_enabled=False,
    )
    token = fw_token(deployment)
    for _ in range(3):
        assert ctl.handle(token, "GET", STATUS_URL).cache_hit is False
    assert ctl.cache_hits == 0
    ctl.close()


def _drive_mix(cache_enabled: bool):
    gateway = GatewayService()
    fixture = seed_fixture(gateway)
    controller = attach_controller(
        gateway,
        fixture.controller_id,
        fixture.controller_password,
        fixture.controller_wallet,
        cache_enabled=cache_enabled,
    )
    token = fixture.app_named("FW_APP").token_id
    denied = fixture.app_named("MON_FW_APP").token_id
    logs_before = gateway.reader.log_count()
    for _ in range(3):
        controller.handle(token, "GET", STATUS_URL)
    controller.handle(token, "GET", FW_RULE_URL)
    controller.handle(token, "PUT", "/wm/firewall/module/enable/json")
    controller.handle(denied, "PUT", "/wm/firewall/module/enable/json")
    for _ in range(2):
        controller.handle(token, "GET", STATUS_URL)
    controller.close()
    return _log_multiset(gateway.reader.logs(offset=logs_before))


def test_cache_transparency_for_accounting():
    """Caching must change latency only: same committed log multiset."""
    assert _drive_mix(cache_enabled=True) == _drive_mix(cache_enabled=False)


# ---------------------------------------------------------------------------
# Wiring helper
# ---------------------------------------------------------------------------


def test_attach_controller_role_priority_defaults(deployment, controller):
    assert controller.role_priority("app2") == 10
    assert controller.role_priority("no-such-app") == 0


def test_attach_controller_rejects_bad_password(deployment):
    with pytest.raises(GatewayError):
        attach_controller(deployment.gateway, deployment.controller_id, "wrong")


def test_reset_rule_store_between_suites(deployment, controller):
    token = fw_token(deployment)
    controller.handle(token, "POST", FW_RULE_URL, json.dumps(RULE_A))
    controller.rule_store = RuleStore()
    answer = controller.handle(token, "POST", FW_RULE_URL, json.dumps(RULE_A_REDUNDANT))
    assert answer.body["status"] == "SUCCESS"
