"""Flow-rule conflict detection for rule-installing northbound calls.

An incoming rule is compared against every stored rule over four fields:
protocol, destination prefix, priority, and action. Source prefixes are
parsed and kept for display but take no part in the comparison; the
taxonomy is destination-driven.

Classification of a candidate rule f against a stored rule g:

  different concrete protocols            -> no conflict
  disjoint destination ranges             -> no conflict
  dst(f) within dst(g), same action       -> Redundancy
  dst(f) within dst(g), different action:
      priority(f) <  priority(g)          -> Shadowing
      priority(f) >= priority(g)          -> Correlation
  dst(f) contains dst(g), different action-> Generalization
  dst(f) contains dst(g), same action     -> Overlap

Equal destinations count as "within". The first stored rule (in insertion
order) that yields a conflict decides the outcome, and a conflicting rule
is never inserted.
"""

from __future__ import annotations

import enum
import ipaddress
import threading
from dataclasses import dataclass, field
from uuid import uuid4


class ConflictError(Exception):
    """Malformed rule submission."""


class Protocol(str, enum.Enum):
    TCP = "TCP"
    UDP = "UDP"
    ICMP = "ICMP"
    ANY = "ANY"


class RuleAction(str, enum.Enum):
    ALLOW = "ALLOW"
    DENY = "DENY"
    DROP = "DROP"


class Relation(enum.Enum):
    DISJOINT = "disjoint"
    EQUAL = "equal"
    WITHIN = "within"  # first range inside the second
    CONTAINS = "contains"  # first range encloses the second
    PARTIAL = "partial"


class ConflictType(str, enum.Enum):
    REDUNDANCY = "Redundancy"
    SHADOWING = "Shadowing"
    CORRELATION = "Correlation"
    GENERALIZATION = "Generalization"
    OVERLAP = "Overlap"


PRIORITY_MIN = 0
PRIORITY_MAX = 65535

_RULE_FIELDS = ("nw-proto", "src-ip", "dst-ip", "priority", "action")


@dataclass(frozen=True)
class FlowRule:
    protocol: Protocol
    src: ipaddress.IPv4Network
    dst: ipaddress.IPv4Network
    priority: int
    action: RuleAction
    rule_id: str = field(default_factory=lambda: uuid4().hex)
    owner_app: str = ""
    owner_priority: int = 0

    def to_dict(self) -> dict:
        return {
            "rule-id": self.rule_id,
            "nw-proto": self.protocol.value,
            "src-ip": str(self.src),
            "dst-ip": str(self.dst),
            "priority": self.priority,
            "action": self.action.value,
            "owner-app": self.owner_app,
        }


def validate_rule(raw: dict, *, owner_app: str = "", owner_priority: int = 0) -> FlowRule:
    """Parse and range-check a submitted rule body."""
    if not isinstance(raw, dict):
        raise ConflictError("rule body must be an object")
    unknown = set(raw) - set(_RULE_FIELDS)
    if unknown:
        raise ConflictError("unsupported parameter %r" % sorted(unknown)[0])
    missing = [name for name in _RULE_FIELDS if name not in raw]
    if missing:
        raise ConflictError("missing parameter %r" % missing[0])

    try:
        protocol = Protocol(str(raw["nw-proto"]).upper())
    except ValueError:
        raise ConflictError("unknown protocol %r" % raw["nw-proto"]) from None
    try:
        action = RuleAction(str(raw["action"]).upper())
    except ValueError:
        raise ConflictError("unknown action %r" % raw["action"]) from None

    priority = raw["priority"]
    if not isinstance(priority, int) or isinstance(priority, bool):
        raise ConflictError("priority must be an integer")
    if not PRIORITY_MIN <= priority <= PRIORITY_MAX:
        raise ConflictError(
            "priority must be in [%d, %d]" % (PRIORITY_MIN, PRIORITY_MAX)
        )

    networks = {}
    for name in ("src-ip", "dst-ip"):
        try:
            networks[name] = ipaddress.IPv4Network(raw[name], strict=False)
        except (ValueError, TypeError) as exc:
            raise ConflictError("malformed CIDR in %r: %s" % (name, exc)) from None

    return FlowRule(
        protocol=protocol,
        src=networks["src-ip"],
        dst=networks["dst-ip"],
        priority=priority,
        action=action,
        owner_app=owner_app,
        owner_priority=owner_priority,
    )


def dst_relation(a: ipaddress.IPv4Network, b: ipaddress.IPv4Network) -> Relation:
    """Set relation between two destination prefixes."""
    a_first, a_last = int(a.network_address), int(a.broadcast_address)
    b_first, b_last = int(b.network_address), int(b.broadcast_address)
    if a_last < b_first or b_last < a_first:
        return Relation.DISJOINT
    if a_first == b_first and a_last == b_last:
        return Relation.EQUAL
    if b_first <= a_first and a_last <= b_last:
        return Relation.WITHIN
    if a_first <= b_first and b_last <= a_last:
        return Relation.CONTAINS
    return Relation.PARTIAL


@dataclass(frozen=True)
class ConflictReport:
    conflict: bool
    conflict_type: ConflictType | None = None
    counterpart: FlowRule | None = None

    @property
    def message(self) -> str:
        if not self.conflict:
            return "SUCCESS"
        return "CONFLICT(%s)" % self.conflict_type.value

    def to_dict(self) -> dict:
        return {
            "result": "CONFLICT" if self.conflict else "SUCCESS",
            "conflict-type": self.conflict_type.value if self.conflict_type else None,
            "counterpart-rule": self.counterpart.rule_id if self.counterpart else None,
        }


NO_CONFLICT = ConflictReport(conflict=False)


def classify_conflict(candidate: FlowRule, stored: FlowRule) -> ConflictReport:
    """Judge one candidate rule against one stored rule."""
    if (
        candidate.protocol != stored.protocol
        and Protocol.ANY not in (candidate.protocol, stored.protocol)
    ):
        return NO_CONFLICT

    relation = dst_relation(candidate.dst, stored.dst)
    if relation is Relation.DISJOINT:
        return NO_CONFLICT
    same_action = candidate.action == stored.action

    if relation in (Relation.EQUAL, Relation.WITHIN):
        if same_action:
            kind = ConflictType.REDUNDANCY
        elif candidate.priority < stored.priority:
            kind = ConflictType.SHADOWING
        else:
            kind = ConflictType.CORRELATION
    elif relation is Relation.CONTAINS:
        kind = ConflictType.OVERLAP if same_action else ConflictType.GENERALIZATION
    else:
        # Partially overlapping prefixes cannot arise from CIDR pairs, but a
        # future multi-field match space could produce them.
        kind = ConflictType.OVERLAP if same_action else ConflictType.CORRELATION
    return ConflictReport(conflict=True, conflict_type=kind, counterpart=stored)


class RuleStore:
    """Installed rules in insertion order, with atomic check-and-insert."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._rules: list[FlowRule] = []

    def check(self, candidate: FlowRule) -> ConflictReport:
        with self._lock:
            return self._check_locked(candidate)

    def check_and_insert(self, candidate: FlowRule) -> ConflictReport:
        """Insert the rule iff it conflicts with no stored rule."""
        with self._lock:
            report = self._check_locked(candidate)
            if not report.conflict:
                self._rules.append(candidate)
            return report

    def _check_locked(self, candidate: FlowRule) -> ConflictReport:
        for stored in self._rules:
            report = classify_conflict(candidate, stored)
            if report.conflict:
                return report
        return NO_CONFLICT

    def remove(self, rule_id: str, requester_priority: int) -> FlowRule:
        """Remove a rule; a requester with lower role priority than the
        rule's owner is refused (write protection)."""
        with self._lock:
            for index, rule in enumerate(self._rules):
                if rule.rule_id == rule_id:
                    if requester_priority < rule.owner_priority:
                        raise PermissionError(
                            "rule %s is write-protected by a higher-priority role" % rule_id
                        )
                    return self._rules.pop(index)
        raise KeyError("rule %s not found" % rule_id)

    def rules(self) -> list[FlowRule]:
        with self._lock:
            return list(self._rules)

    def __len__(self) -> int:
        with self._lock:
            return len(self._rules)
