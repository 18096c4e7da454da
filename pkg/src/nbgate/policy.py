"""Access policy: northbound route registry and trust thresholds.

A route registry maps concrete REST calls (method plus URL) onto permission
ids so the verifier can judge them against a role's permission set. Trust
thresholds assign each resource object class the minimum trust index an
application needs before permissions touching that class take effect.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable, Iterable
from urllib.parse import urlsplit

RESOURCE_OBJECTS = (
    "host",
    "switch",
    "link",
    "port",
    "flowmod",
    "group",
    "vlan",
    "statistics",
    "application",
    "controller",
)

# Sensitive classes carry higher bars; everything else starts at 60.
DEFAULT_TRUST_THRESHOLDS = {
    "flowmod": 80,
    "statistics": 75,
    "switch": 70,
    "host": 60,
    "link": 60,
    "port": 60,
    "group": 60,
    "vlan": 60,
    "application": 60,
    "controller": 60,
}

TRUST_MIN = 0
TRUST_MAX = 100


class PolicyError(Exception):
    """Unknown resource object, bad threshold, or route registration error."""


class TrustPolicy:
    """Per-resource-object trust thresholds, reconfigurable atomically."""

    def __init__(self, thresholds: dict[str, int] | None = None) -> None:
        self._lock = threading.Lock()
        self._thresholds = dict(DEFAULT_TRUST_THRESHOLDS)
        if thresholds:
            for resource, value in thresholds.items():
                self.set_threshold(resource, value)

    def threshold(self, resource_object: str) -> int:
        try:
            return self._thresholds[resource_object]
        except KeyError:
            raise PolicyError("unknown resource object %r" % resource_object) from None

    def set_threshold(self, resource_object: str, value: int) -> None:
        if resource_object not in RESOURCE_OBJECTS:
            raise PolicyError("unknown resource object %r" % resource_object)
        if not isinstance(value, int) or isinstance(value, bool):
            raise PolicyError("threshold must be an integer")
        if not TRUST_MIN <= value <= TRUST_MAX:
            raise PolicyError("threshold must be in [%d, %d]" % (TRUST_MIN, TRUST_MAX))
        with self._lock:
            self._thresholds[resource_object] = value

    def snapshot(self) -> dict[str, int]:
        with self._lock:
            return dict(self._thresholds)


def effective_permissions(
    trust_index: int,
    permission_ids: Iterable[str],
    resource_object_of: Callable[[str], str | None],
    policy: TrustPolicy,
) -> set[str]:
    """The subset of a role's permissions the trust index still unlocks."""
    granted = set()
    for permission_id in permission_ids:
        resource = resource_object_of(permission_id)
        if resource is not None and policy.threshold(resource) <= trust_index:
            granted.add(permission_id)
    return granted


# ---------------------------------------------------------------------------
# Route registry
# ---------------------------------------------------------------------------


def _normalize_path(url: str) -> str:
    path = urlsplit(url).path if "://" in url else url.split("?", 1)[0]
    if len(path) > 1 and path.endswith("/"):
        path = path.rstrip("/")
    return path or "/"


def _split_segments(path: str) -> list[str]:
    return [segment for segment in path.split("/") if segment]


@dataclass(frozen=True)
class ApiRoute:
    method: str
    pattern: str
    permission_id: str

    def segments(self) -> list[str]:
        return _split_segments(_normalize_path(self.pattern))


class RouteRegistry:
    """Maps (method, URL) to the permission id guarding that call.

    Pattern segments wrapped in braces match exactly one URL segment. When
    several patterns match, the one with the most leading literal segments
    wins, then the most literal segments overall, then registration order.
    """

    def __init__(self, permission_exists: Callable[[str], bool] | None = None) -> None:
        self._lock = threading.Lock()
        self._routes: list[ApiRoute] = []
        self._permission_exists = permission_exists

    def register(self, method: str, pattern: str, permission_id: str) -> ApiRoute:
        method = method.upper()
        if self._permission_exists is not None and not self._permission_exists(permission_id):
            raise PolicyError("unknown permission %r" % permission_id)
        route = ApiRoute(method=method, pattern=pattern, permission_id=permission_id)
        with self._lock:
            for existing in self._routes:
                if existing.method == method and existing.segments() == route.segments():
                    raise PolicyError(
                        "route %s %s already registered" % (method, pattern)
                    )
            self._routes.append(route)
        return route

    def routes(self) -> list[ApiRoute]:
        with self._lock:
            return list(self._routes)

    def parse(self, method: str, url: str) -> str | None:
        """Resolve a request to a permission id, or None when unmapped."""
        method = method.upper()
        segments = _split_segments(_normalize_path(url))
        best: tuple[int, int, int] | None = None
        best_route: ApiRoute | None = None
        with self._lock:
            candidates = list(self._routes)
        for order, route in enumerate(candidates):
            if route.method != method:
                continue
            pattern = route.segments()
            if len(pattern) != len(segments):
                continue
            if not all(
                part.startswith("{") and part.endswith("}") or part == seg
                for part, seg in zip(pattern, segments)
            ):
                continue
            leading = 0
            for part in pattern:
                if part.startswith("{") and part.endswith("}"):
                    break
                leading += 1
            total = sum(
                1 for part in pattern if not (part.startswith("{") and part.endswith("}"))
            )
            score = (leading, total, -order)
            if best is None or score > best:
                best = score
                best_route = route
        return best_route.permission_id if best_route else None

    def load(self, config: list[dict]) -> None:
        """Register routes from configuration entries."""
        for entry in config:
            self.register(entry["method"], entry["pattern"], entry["permission"])
