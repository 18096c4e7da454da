"""An in-process permissioned ledger with execute-order-validate semantics.

The pipeline mirrors the endorsement flow of a permissioned blockchain at
desk scale: a client builds a signed transaction proposal, every live peer
executes the registered handler against the committed world state and signs
the resulting read/write sets, an orderer batches endorsed transactions
into blocks (FIFO, cut by size or timeout), and validation marks each
transaction valid or invalid under multi-version concurrency control before
applying the valid writes.

Blocks are hash-chained: the header is the block number, the previous
header hash, and a digest over the full transaction encodings (validity
flags included), so any bit flip in a committed block breaks
``verify_chain``. The chain can be persisted to an append-only store and
replayed onto a fresh node, which re-derives the validity flags and world
state and rejects any block that does not reproduce its recorded hashes.

Peers here are deterministic replicas in one process, not networked nodes;
crash simulation simply drops a peer from endorsement rounds.
"""

from __future__ import annotations

import enum
import hashlib
import json
import struct
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterator
from uuid import uuid4

from .identity import (
    Certificate,
    CertificateAuthority,
    Identity,
    IdentityError,
    Signature,
    verify,
)

ZERO_HASH = bytes(32)

DEFAULT_PEER_COUNT = 3
MIN_PEER_COUNT = 1
MAX_PEER_COUNT = 10

DEFAULT_MAX_BLOCK_SIZE = 10
DEFAULT_BATCH_TIMEOUT = 0.5  # seconds

JsonValue = Any
ReadSet = list[tuple[str, int]]
WriteSet = list[tuple[str, JsonValue]]


class LedgerError(Exception):
    """Pipeline-level failure: bad proposal, broken block, corrupt store."""


class InvalidProposal(LedgerError):
    """Proposal rejected before endorsement (unknown submitter, bad signature)."""


class HandlerError(Exception):
    """Raised by transaction handlers to reject a proposal deterministically."""


def canonical_json(value: JsonValue) -> bytes:
    """Canonical encoding used for everything that is hashed or signed."""
    return json.dumps(value, sort_keys=True, separators=(",", ":")).encode()


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


# ---------------------------------------------------------------------------
# Participants
# ---------------------------------------------------------------------------


class ParticipantType(str, enum.Enum):
    ADMIN = "Admin"
    APPLICATION = "Application"
    CONTROLLER = "Controller"
    PEER = "Peer"


class ParticipantDirectory:
    """Registered identities: who may submit proposals, and their public keys.

    The directory is deployment configuration, not chain state; a node that
    replays a chain must hold the same registrations first.
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._entries: dict[str, tuple[ParticipantType, Certificate]] = {}

    def register(
        self, participant_id: str, participant_type: ParticipantType, certificate: Certificate
    ) -> None:
        if certificate.subject_id != participant_id:
            raise LedgerError("certificate subject does not match participant id")
        with self._lock:
            if participant_id in self._entries:
                raise LedgerError("participant %r already registered" % participant_id)
            self._entries[participant_id] = (participant_type, certificate)

    def type_of(self, participant_id: str) -> ParticipantType | None:
        entry = self._entries.get(participant_id)
        return entry[0] if entry else None

    def certificate_of(self, participant_id: str) -> Certificate | None:
        entry = self._entries.get(participant_id)
        return entry[1] if entry else None

    def __contains__(self, participant_id: str) -> bool:
        return participant_id in self._entries


# ---------------------------------------------------------------------------
# Proposals and endorsements
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TransactionProposal:
    tx_type: str
    payload: dict
    submitter: str
    proposal_id: str
    timestamp: str  # UTC ISO 8601, stamped by the submitting client
    signature: Signature

    def signed_bytes(self) -> bytes:
        return canonical_json(
            {
                "tx_type": self.tx_type,
                "payload": self.payload,
                "submitter": self.submitter,
                "proposal_id": self.proposal_id,
                "timestamp": self.timestamp,
            }
        )

    def to_dict(self) -> dict:
        return {
            "tx_type": self.tx_type,
            "payload": self.payload,
            "submitter": self.submitter,
            "proposal_id": self.proposal_id,
            "timestamp": self.timestamp,
            "signature": self.signature.to_hex(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TransactionProposal":
        return cls(
            tx_type=data["tx_type"],
            payload=data["payload"],
            submitter=data["submitter"],
            proposal_id=data["proposal_id"],
            timestamp=data["timestamp"],
            signature=Signature.from_hex(data["signature"]),
        )


def build_proposal(
    identity: Identity,
    tx_type: str,
    payload: dict,
    *,
    timestamp: str | None = None,
    proposal_id: str | None = None,
) -> TransactionProposal:
    """Create and sign a proposal as the given identity."""
    from datetime import datetime, timezone

    body = {
        "tx_type": tx_type,
        "payload": payload,
        "submitter": identity.id,
        "proposal_id": proposal_id or uuid4().hex,
        "timestamp": timestamp or datetime.now(timezone.utc).isoformat(),
    }
    signature = identity.sign(canonical_json(body))
    return TransactionProposal(signature=signature, **body)


@dataclass(frozen=True)
class Endorsement:
    peer_id: str
    proposal_id: str
    ok: bool
    message: str
    read_set: ReadSet
    write_set: WriteSet
    response: dict | None
    signature: Signature

    def signed_bytes(self) -> bytes:
        return canonical_json(
            {
                "peer_id": self.peer_id,
                "proposal_id": self.proposal_id,
                "ok": self.ok,
                "message": self.message,
                "read_set": self.read_set,
                "write_set": self.write_set,
                "response": self.response,
            }
        )

    def effect_bytes(self) -> bytes:
        """Canonical effect for cross-peer agreement checks."""
        return canonical_json(
            {"ok": self.ok, "read_set": self.read_set, "write_set": self.write_set,
             "response": self.response}
        )

    def to_dict(self) -> dict:
        return {
            "peer_id": self.peer_id,
            "proposal_id": self.proposal_id,
            "ok": self.ok,
            "message": self.message,
            "read_set": self.read_set,
            "write_set": self.write_set,
            "response": self.response,
            "signature": self.signature.to_hex(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Endorsement":
        return cls(
            peer_id=data["peer_id"],
            proposal_id=data["proposal_id"],
            ok=data["ok"],
            message=data["message"],
            read_set=[(k, v) for k, v in data["read_set"]],
            write_set=[(k, v) for k, v in data["write_set"]],
            response=data["response"],
            signature=Signature.from_hex(data["signature"]),
        )


# ---------------------------------------------------------------------------
# World state
# ---------------------------------------------------------------------------


class WorldState:
    """Versioned key/value store. Versions count every committed write,
    deletes included, so a deleted-then-recreated key cannot satisfy a stale
    read."""

    def __init__(self) -> None:
        self._values: dict[str, JsonValue] = {}
        self._versions: dict[str, int] = {}

    def get(self, key: str) -> JsonValue | None:
        value = self._values.get(key)
        return json.loads(json.dumps(value)) if value is not None else None

    def version(self, key: str) -> int:
        return self._versions.get(key, 0)

    def exists(self, key: str) -> bool:
        return key in self._values

    def scan(self, prefix: str) -> dict[str, JsonValue]:
        return {
            key: json.loads(json.dumps(value))
            for key, value in sorted(self._values.items())
            if key.startswith(prefix)
        }

    def apply(self, write_set: WriteSet) -> None:
        for key, value in write_set:
            if value is None:
                self._values.pop(key, None)
            else:
                self._values[key] = json.loads(json.dumps(value))
            self._versions[key] = self._versions.get(key, 0) + 1

    def digest(self) -> str:
        return hashlib.sha256(
            canonical_json({"values": self._values, "versions": self._versions})
        ).hexdigest()


class StateView:
    """Read-through view used during handler execution.

    Records the committed version of every key read and buffers writes;
    reads of a key the handler already wrote come from the buffer without
    growing the read set.
    """

    _DELETED = object()

    def __init__(self, state: WorldState) -> None:
        self._state = state
        self._reads: dict[str, int] = {}
        self._writes: dict[str, JsonValue] = {}

    def get(self, key: str) -> JsonValue | None:
        if key in self._writes:
            value = self._writes[key]
            return None if value is None else json.loads(json.dumps(value))
        self._reads.setdefault(key, self._state.version(key))
        return self._state.get(key)

    def put(self, key: str, value: JsonValue) -> None:
        if value is None:
            raise ValueError("use delete() to remove a key")
        self._writes[key] = json.loads(json.dumps(value))

    def delete(self, key: str) -> None:
        self._writes[key] = None

    def read_set(self) -> ReadSet:
        return sorted(self._reads.items())

    def write_set(self) -> WriteSet:
        return sorted(self._writes.items())


@dataclass
class TxContext:
    """Everything a transaction handler may see.

    Handlers must be deterministic: all variability (ids, timestamps) comes
    from the proposal itself, never from the clock or RNG.
    """

    params: dict
    submitter: str
    submitter_type: ParticipantType | None
    timestamp: str
    proposal_id: str
    _view: StateView

    def get(self, key: str) -> JsonValue | None:
        return self._view.get(key)

    def put(self, key: str, value: JsonValue) -> None:
        self._view.put(key, value)

    def delete(self, key: str) -> None:
        self._view.delete(key)


Handler = Callable[[TxContext], dict | None]


# ---------------------------------------------------------------------------
# Blocks
# ---------------------------------------------------------------------------


@dataclass
class BlockTransaction:
    proposal: TransactionProposal
    endorsements: list[Endorsement]
    valid: bool | None = None

    def encode(self) -> bytes:
        return canonical_json(self.to_dict())

    def to_dict(self) -> dict:
        return {
            "proposal": self.proposal.to_dict(),
            "endorsements": [e.to_dict() for e in self.endorsements],
            "valid": self.valid,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BlockTransaction":
        return cls(
            proposal=TransactionProposal.from_dict(data["proposal"]),
            endorsements=[Endorsement.from_dict(e) for e in data["endorsements"]],
            valid=data["valid"],
        )


@dataclass
class Block:
    transactions: list[BlockTransaction]
    number: int | None = None
    prev_hash: bytes | None = None
    data_hash: bytes | None = None

    @property
    def sealed(self) -> bool:
        return self.number is not None and self.prev_hash is not None and self.data_hash is not None

    def header_bytes(self) -> bytes:
        if not self.sealed:
            raise LedgerError("block is not sealed")
        return struct.pack(">Q", self.number) + self.prev_hash + self.data_hash

    def block_hash(self) -> bytes:
        return sha256(self.header_bytes())

    def compute_data_hash(self) -> bytes:
        parts = []
        for tx in self.transactions:
            encoded = tx.encode()
            parts.append(struct.pack(">I", len(encoded)) + encoded)
        return sha256(b"".join(parts))

    def to_dict(self) -> dict:
        if not self.sealed:
            raise LedgerError("block is not sealed")
        return {
            "number": self.number,
            "prev_hash": self.prev_hash.hex(),
            "data_hash": self.data_hash.hex(),
            "transactions": [tx.to_dict() for tx in self.transactions],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Block":
        return cls(
            number=data["number"],
            prev_hash=bytes.fromhex(data["prev_hash"]),
            data_hash=bytes.fromhex(data["data_hash"]),
            transactions=[BlockTransaction.from_dict(tx) for tx in data["transactions"]],
        )


# ---------------------------------------------------------------------------
# Peers
# ---------------------------------------------------------------------------


class Peer:
    """A deterministic endorsing replica."""

    def __init__(self, peer_id: str, identity: Identity, handlers: dict[str, Handler]) -> None:
        self.peer_id = peer_id
        self.identity = identity
        self._handlers = handlers
        self.crashed = False

    def endorse(
        self,
        proposal: TransactionProposal,
        state: WorldState,
        submitter_type: ParticipantType | None,
    ) -> Endorsement:
        view = StateView(state)
        ctx = TxContext(
            params=proposal.payload,
            submitter=proposal.submitter,
            submitter_type=submitter_type,
            timestamp=proposal.timestamp,
            proposal_id=proposal.proposal_id,
            _view=view,
        )
        handler = self._handlers.get(proposal.tx_type)
        ok = True
        message = "OK"
        response: dict | None = None
        if handler is None:
            ok, message = False, "unknown transaction type %r" % proposal.tx_type
        else:
            try:
                response = handler(ctx)
            except HandlerError as exc:
                ok, message, response = False, str(exc), None
        body = {
            "peer_id": self.peer_id,
            "proposal_id": proposal.proposal_id,
            "ok": ok,
            "message": message,
            "read_set": view.read_set(),
            "write_set": view.write_set() if ok else [],
            "response": response,
        }
        signature = self.identity.sign(canonical_json(body))
        return Endorsement(signature=signature, **body)


# ---------------------------------------------------------------------------
# Ordering
# ---------------------------------------------------------------------------


class Orderer:
    """FIFO batcher: cuts a block when the batch is full or the timeout
    since the first queued transaction has elapsed."""

    def __init__(
        self,
        max_block_size: int = DEFAULT_MAX_BLOCK_SIZE,
        batch_timeout: float = DEFAULT_BATCH_TIMEOUT,
        clock: Callable[[], float] = time.monotonic,
    ) -> None:
        if max_block_size < 1:
            raise ValueError("max_block_size must be at least 1")
        self.max_block_size = max_block_size
        self.batch_timeout = batch_timeout
        self._clock = clock
        self._lock = threading.Lock()
        # Queue entries carry their arrival time; the batch timer runs from
        # the oldest queued transaction.
        self._queue: list[tuple[BlockTransaction, float]] = []

    def enqueue(self, tx: BlockTransaction) -> list[Block]:
        with self._lock:
            self._queue.append((tx, self._clock()))
            return self._cut_full_locked()

    def poll(self) -> list[Block]:
        """Cut the pending batch if its timeout has expired."""
        with self._lock:
            if self._queue and self._clock() - self._queue[0][1] >= self.batch_timeout:
                return self._drain_locked()
            return []

    def flush(self) -> list[Block]:
        with self._lock:
            return self._drain_locked()

    def pending(self) -> int:
        with self._lock:
            return len(self._queue)

    def _cut_full_locked(self) -> list[Block]:
        blocks = []
        while len(self._queue) >= self.max_block_size:
            batch = [tx for tx, _ in self._queue[: self.max_block_size]]
            del self._queue[: self.max_block_size]
            blocks.append(Block(transactions=batch))
        return blocks

    def _drain_locked(self) -> list[Block]:
        blocks = self._cut_full_locked()
        if self._queue:
            blocks.append(Block(transactions=[tx for tx, _ in self._queue]))
            self._queue.clear()
        return blocks


# ---------------------------------------------------------------------------
# The ledger
# ---------------------------------------------------------------------------


@dataclass
class TxResult:
    committed: bool
    message: str
    response: dict | None = None
    block_number: int | None = None


class Ledger:
    """The full pipeline plus chain and world state for one deployment."""

    def __init__(
        self,
        num_peers: int = DEFAULT_PEER_COUNT,
        *,
        directory: ParticipantDirectory | None = None,
        max_block_size: int = DEFAULT_MAX_BLOCK_SIZE,
        batch_timeout: float = DEFAULT_BATCH_TIMEOUT,
        clock: Callable[[], float] = time.monotonic,
    ) -> None:
        if not MIN_PEER_COUNT <= num_peers <= MAX_PEER_COUNT:
            raise ValueError(
                "num_peers must be in [%d, %d]" % (MIN_PEER_COUNT, MAX_PEER_COUNT)
            )
        self.directory = directory or ParticipantDirectory()
        self.handlers: dict[str, Handler] = {}
        self.state = WorldState()
        self.orderer = Orderer(max_block_size, batch_timeout, clock)
        self._peer_ca = CertificateAuthority("peer-ca")
        self.peers: dict[str, Peer] = {}
        # Peer ids carry a per-ledger suffix so a replayed chain's foreign
        # peers can never collide with this node's own.
        suffix = uuid4().hex[:8]
        for index in range(num_peers):
            peer_id = "peer%d-%s" % (index, suffix)
            ident = self._peer_ca.issue_identity(peer_id, msp_id="peers")
            self.directory.register(peer_id, ParticipantType.PEER, ident.certificate)
            self.peers[peer_id] = Peer(peer_id, ident, self.handlers)
        self._chain: list[Block] = [self._genesis()]
        self._seen_proposals: set[str] = set()
        self._pipeline_lock = threading.RLock()
        self._store_path: Path | None = None

    @staticmethod
    def _genesis() -> Block:
        block = Block(transactions=[], number=0, prev_hash=ZERO_HASH)
        block.data_hash = block.compute_data_hash()
        return block

    # -- configuration ------------------------------------------------------

    def register_handler(self, tx_type: str, handler: Handler) -> None:
        if tx_type in self.handlers:
            raise LedgerError("handler for %r already registered" % tx_type)
        self.handlers[tx_type] = handler

    def register_participant(
        self, participant_id: str, participant_type: ParticipantType, certificate: Certificate
    ) -> None:
        self.directory.register(participant_id, participant_type, certificate)

    # -- peer failure simulation --------------------------------------------

    def crash_peer(self, peer_id: str) -> None:
        self.peers[peer_id].crashed = True

    def restore_peer(self, peer_id: str) -> None:
        self.peers[peer_id].crashed = False

    @property
    def quorum(self) -> int:
        """Endorsements required: a strict majority of all peers."""
        return len(self.peers) // 2 + 1

    # -- pipeline stages -----------------------------------------------------

    def submit(self, proposal: TransactionProposal) -> list[Endorsement]:
        """Endorsement phase: verify the proposal signature, then execute on
        every live peer."""
        certificate = self.directory.certificate_of(proposal.submitter)
        if certificate is None:
            raise InvalidProposal("unknown submitter %r" % proposal.submitter)
        if not verify(certificate.public_key, proposal.signed_bytes(), proposal.signature):
            raise InvalidProposal("proposal signature verification failed")
        submitter_type = self.directory.type_of(proposal.submitter)
        return [
            peer.endorse(proposal, self.state, submitter_type)
            for peer in self.peers.values()
            if not peer.crashed
        ]

    def endorsement_policy_satisfied(self, endorsements: list[Endorsement]) -> bool:
        """Majority of all peers endorsed successfully with identical effects."""
        ok = [e for e in endorsements if e.ok]
        if len(ok) < self.quorum:
            return False
        reference = ok[0].effect_bytes()
        return all(e.effect_bytes() == reference for e in ok[1:])

    def validate_and_commit(self, block: Block) -> list[bool]:
        """Validation phase: seal (or check) the block, flag each transaction
        under MVCC, apply valid writes, and append to the chain.

        An unsealed block comes from the local orderer and gets its number,
        previous hash, validity flags, and data hash assigned here. A sealed
        block comes from a persisted chain: its hashes must match exactly and
        the locally re-derived flags must equal the recorded ones.
        """
        with self._pipeline_lock:
            replaying = block.sealed
            tip = self._chain[-1]
            expected_number = tip.number + 1
            expected_prev = tip.block_hash()
            if replaying:
                if block.number != expected_number:
                    raise LedgerError(
                        "block number %s does not extend chain at height %s"
                        % (block.number, tip.number)
                    )
                if block.prev_hash != expected_prev:
                    raise LedgerError("block %d breaks the hash chain" % block.number)
                if block.data_hash != block.compute_data_hash():
                    raise LedgerError("block %d data hash mismatch" % block.number)

            flags = []
            for tx in block.transactions:
                valid = self._transaction_valid(tx)
                if replaying:
                    if tx.valid != valid:
                        raise LedgerError(
                            "block %d replays with divergent validity flags" % block.number
                        )
                else:
                    tx.valid = valid
                flags.append(valid)
                if valid:
                    agreeing = next(e for e in tx.endorsements if e.ok)
                    self.state.apply(agreeing.write_set)
                    self._seen_proposals.add(tx.proposal.proposal_id)

            if not replaying:
                block.number = expected_number
                block.prev_hash = expected_prev
                block.data_hash = block.compute_data_hash()
            self._chain.append(block)
            if self._store_path is not None:
                self._append_record(block)
            return flags

    def _transaction_valid(self, tx: BlockTransaction) -> bool:
        proposal = tx.proposal
        if proposal.proposal_id in self._seen_proposals:
            return False
        certificate = self.directory.certificate_of(proposal.submitter)
        if certificate is None or not verify(
            certificate.public_key, proposal.signed_bytes(), proposal.signature
        ):
            return False
        if not self.endorsement_policy_satisfied(tx.endorsements):
            return False
        agreeing = next(e for e in tx.endorsements if e.ok)
        for key, version in agreeing.read_set:
            if self.state.version(key) != version:
                return False
        return True

    # -- client conveniences ---------------------------------------------------

    def process(self, proposal: TransactionProposal) -> TxResult:
        """Run one proposal through the whole pipeline synchronously.

        Anything already queued in the orderer is flushed ahead of it, so
        FIFO order is preserved.
        """
        with self._pipeline_lock:
            endorsements = self.submit(proposal)
            if not self.endorsement_policy_satisfied(endorsements):
                failure = next((e.message for e in endorsements if not e.ok), None)
                return TxResult(
                    committed=False,
                    message=failure or "endorsement policy unsatisfied",
                )
            response = next(e.response for e in endorsements if e.ok)
            blocks = self.orderer.enqueue(BlockTransaction(proposal, endorsements))
            blocks.extend(self.orderer.flush())
            result = TxResult(committed=False, message="not ordered")
            for block in blocks:
                flags = self.validate_and_commit(block)
                for tx, valid in zip(block.transactions, flags):
                    if tx.proposal.proposal_id == proposal.proposal_id:
                        result = (
                            TxResult(
                                committed=True,
                                message="committed",
                                response=response,
                                block_number=block.number,
                            )
                            if valid
                            else TxResult(committed=False, message="invalidated at validation")
                        )
            return result

    def enqueue(self, proposal: TransactionProposal) -> list[int]:
        """Endorse and queue without forcing a block cut. Returns the numbers
        of any blocks the enqueue caused to commit (batch full)."""
        with self._pipeline_lock:
            endorsements = self.submit(proposal)
            if not self.endorsement_policy_satisfied(endorsements):
                failure = next((e.message for e in endorsements if not e.ok), None)
                raise LedgerError(failure or "endorsement policy unsatisfied")
            blocks = self.orderer.enqueue(BlockTransaction(proposal, endorsements))
            return [self._commit_assigned(b) for b in blocks]

    def flush_pending(self) -> list[int]:
        with self._pipeline_lock:
            return [self._commit_assigned(b) for b in self.orderer.flush()]

    def poll_batches(self) -> list[int]:
        """Commit any batch whose timeout has expired."""
        with self._pipeline_lock:
            return [self._commit_assigned(b) for b in self.orderer.poll()]

    def _commit_assigned(self, block: Block) -> int:
        self.validate_and_commit(block)
        return block.number

    # -- queries ---------------------------------------------------------------

    @property
    def height(self) -> int:
        return len(self._chain)

    @property
    def blocks(self) -> tuple[Block, ...]:
        return tuple(self._chain)

    def get_block(self, number: int) -> Block:
        return self._chain[number]

    def query_state(self, key: str) -> JsonValue | None:
        return self.state.get(key)

    def state_version(self, key: str) -> int:
        return self.state.version(key)

    def scan_state(self, prefix: str) -> dict[str, JsonValue]:
        return self.state.scan(prefix)

    def state_digest(self) -> str:
        return self.state.digest()

    def verify_chain(self) -> bool:
        """Recompute every hash and signature on the chain.

        Endorsement signatures are checked for peers the directory knows;
        a replayed foreign chain's peer set is covered by the data hash.
        """
        prev = ZERO_HASH
        for index, block in enumerate(self._chain):
            if block.number != index or block.prev_hash != prev:
                return False
            if block.data_hash != block.compute_data_hash():
                return False
            for tx in block.transactions:
                certificate = self.directory.certificate_of(tx.proposal.submitter)
                if certificate is None or not verify(
                    certificate.public_key, tx.proposal.signed_bytes(), tx.proposal.signature
                ):
                    return False
                for endorsement in tx.endorsements:
                    peer_cert = self.directory.certificate_of(endorsement.peer_id)
                    if peer_cert is not None and not verify(
                        peer_cert.public_key, endorsement.signed_bytes(), endorsement.signature
                    ):
                        return False
            prev = block.block_hash()
        return True

    # -- persistence -------------------------------------------------------------

    def open_store(self, path: str | Path) -> int:
        """Attach an append-only chain store, replaying any existing records.

        Must be called after handlers and participants are registered and
        before any transaction is committed. Returns the number of blocks
        replayed from disk.
        """
        with self._pipeline_lock:
            if self._store_path is not None:
                raise LedgerError("store already attached")
            if self.height != 1:
                raise LedgerError("cannot attach a store to a ledger with history")
            path = Path(path)
            replayed = 0
            if path.exists() and path.stat().st_size > 0:
                blocks = list(_read_store(path))
                if not blocks:
                    raise LedgerError("store corrupt: no readable records")
                genesis = blocks[0]
                if genesis.to_dict() != self._chain[0].to_dict():
                    raise LedgerError("store corrupt: genesis mismatch")
                for block in blocks[1:]:
                    self.validate_and_commit(block)
                    replayed += 1
                self._store_path = path
            else:
                path.parent.mkdir(parents=True, exist_ok=True)
                self._store_path = path
                self._append_record(self._chain[0])
            return replayed

    def _append_record(self, block: Block) -> None:
        record = canonical_json(block.to_dict())
        with open(self._store_path, "ab") as fh:
            fh.write(struct.pack(">I", len(record)) + record)


def _read_store(path: Path) -> Iterator[Block]:
    data = path.read_bytes()
    offset = 0
    while offset < len(data):
        if offset + 4 > len(data):
            raise LedgerError("store corrupt: truncated record length")
        (length,) = struct.unpack_from(">I", data, offset)
        offset += 4
        if offset + length > len(data):
            raise LedgerError("store corrupt: truncated record")
        chunk = data[offset : offset + length]
        try:
            block = Block.from_dict(json.loads(chunk))
            # Records are written canonically, so re-encoding the decoded
            # block must give back the stored bytes exactly. Anything else
            # means the file was edited, even if the edit survives decoding
            # (hex strings, for one, decode case-insensitively).
            if canonical_json(block.to_dict()) != chunk:
                raise LedgerError("store corrupt: non-canonical record")
            yield block
        except (ValueError, KeyError, TypeError, IdentityError) as exc:
            raise LedgerError("store corrupt: %s" % exc) from exc
        offset += length
