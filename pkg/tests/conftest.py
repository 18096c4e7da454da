"""Shared fixtures: a ledger environment with registered participants."""

from __future__ import annotations

from dataclasses import dataclass, field

import pytest

from nbgate import identity as idm
from nbgate.assets import StateReader, install_handlers
from nbgate.ledger import Ledger, ParticipantType, TxResult, build_proposal


@dataclass
class LedgerEnv:
    ca: idm.CertificateAuthority
    ledger: Ledger
    reader: StateReader
    identities: dict[str, idm.Identity] = field(default_factory=dict)

    def add_participant(self, participant_id: str, participant_type: ParticipantType) -> idm.Identity:
        ident = self.ca.issue_identity(participant_id)
        self.ledger.register_participant(participant_id, participant_type, ident.certificate)
        self.identities[participant_id] = ident
        return ident

    def tx(self, identity: idm.Identity, tx_type: str, payload: dict) -> TxResult:
        return self.ledger.process(build_proposal(identity, tx_type, payload))

    def ok(self, identity: idm.Identity, tx_type: str, payload: dict) -> dict | None:
        result = self.tx(identity, tx_type, payload)
        assert result.committed, result.message
        return result.response

    def rejected(self, identity: idm.Identity, tx_type: str, payload: dict) -> str:
        result = self.tx(identity, tx_type, payload)
        assert not result.committed
        return result.message


def build_env(num_peers: int = 3) -> LedgerEnv:
    ca = idm.CertificateAuthority("deploy-ca")
    ledger = Ledger(num_peers=num_peers)
    install_handlers(ledger)
    env = LedgerEnv(ca=ca, ledger=ledger, reader=StateReader(ledger))
    env.add_participant("admin", ParticipantType.ADMIN)
    env.add_participant("app1", ParticipantType.APPLICATION)
    env.add_participant("app2", ParticipantType.APPLICATION)
    env.add_participant("ctrl1", ParticipantType.CONTROLLER)
    env.add_participant("ctrl2", ParticipantType.CONTROLLER)
    return env


@pytest.fixture()
def env() -> LedgerEnv:
    return build_env()


@pytest.fixture()
def admin(env):
    return env.identities["admin"]


@pytest.fixture()
def app1(env):
    return env.identities["app1"]


@pytest.fixture()
def app2(env):
    return env.identities["app2"]


@pytest.fixture()
def ctrl1(env):
    return env.identities["ctrl1"]


@pytest.fixture()
def ctrl2(env):
    return env.identities["ctrl2"]
