"""Append-only, hash-chained block store.

Digest layout (all SHA-256 over :mod:`delivchain.encoding`):

* ``tx_hash = H([caller, operation, input, block_timestamp, seq])`` where
  ``seq`` is the transaction's position inside its block.
* A transaction's Merkle leaf is ``H([tx_hash, caller, operation, input,
  output, events, gas_charged])`` so every stored transaction field,
  including the emitted events, is committed by ``tx_root``.
* ``block_hash = H([index, prev_hash, timestamp, nonce, tx_root])``.

The NDJSON dump writes one block per line with digests as lowercase hex
without a ``0x`` prefix; ``input`` and ``output`` are hex of their canonical
bytes.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Iterable, Iterator, Optional, Sequence

from .encoding import ZERO_DIGEST, digest, sha256
from .errors import (
    EmptyBlock,
    EmptyList,
    InvalidTransaction,
    MalformedBlock,
    TimestampRegression,
)

EVENT_NAMES = ("order_update", "warning", "message")


@dataclass(frozen=True)
class EventRecord:
    name: str
    order_id: int = 0
    status: Optional[int] = None
    msg: str = ""

    def __post_init__(self) -> None:
        if self.name not in EVENT_NAMES:
            raise ValueError(f"unknown event name {self.name!r}")
        if self.name == "order_update" and (self.order_id < 1 or self.status is None):
            raise ValueError("order_update needs order_id >= 1 and a status")
        if self.name == "warning" and not self.msg.startswith("Late in"):
            raise ValueError("warning msg must start with 'Late in'")

    def as_dict(self) -> dict[str, Any]:
        return {"name": self.name, "order_id": self.order_id, "status": self.status, "msg": self.msg}


def transaction_hash(caller: str, operation: str, input: bytes, timestamp: int, seq: int) -> bytes:
    return digest([caller, operation, input, timestamp, seq])


@dataclass(frozen=True)
class Transaction:
    tx_hash: bytes
    caller: str
    operation: str
    input: bytes
    output: bytes
    events: tuple[EventRecord, ...]
    gas_charged: int

    @classmethod
    def create(
        cls,
        caller: str,
        operation: str,
        input: bytes,
        output: bytes,
        events: Iterable[EventRecord],
        gas_charged: int,
        timestamp: int,
        seq: int = 0,
    ) -> "Transaction":
        return cls(
            tx_hash=transaction_hash(caller, operation, input, timestamp, seq),
            caller=caller,
            operation=operation,
            input=input,
            output=output,
            events=tuple(events),
            gas_charged=gas_charged,
        )

    def leaf(self) -> bytes:
        return digest([
            self.tx_hash,
            self.caller,
            self.operation,
            self.input,
            self.output,
            [e.as_dict() for e in self.events],
            self.gas_charged,
        ])

    def as_dict(self) -> dict[str, Any]:
        return {
            "tx_hash": self.tx_hash.hex(),
            "caller": self.caller,
            "operation": self.operation,
            "input": self.input.hex(),
            "output": self.output.hex(),
            "events": [e.as_dict() for e in self.events],
            "gas_charged": self.gas_charged,
        }


def merkle_root(digests: Sequence[bytes]) -> bytes:
    """Binary Merkle root; a level with an odd count duplicates its last node.

    The rule applies to the leaf level too, so a single leaf ``d`` has root
    ``H(d || d)``.
    """
    if not digests:
        raise EmptyList("merkle_root of an empty list")
    level = list(digests)
    while True:
        if len(level) % 2:
            level.append(level[-1])
        level = [sha256(level[i] + level[i + 1]) for i in range(0, len(level), 2)]
        if len(level) == 1:
            return level[0]


def block_hash(index: int, prev_hash: bytes, timestamp: int, nonce: int, tx_root: bytes) -> bytes:
    return digest([index, prev_hash, timestamp, nonce, tx_root])


@dataclass(frozen=True)
class Block:
    index: int
    prev_hash: bytes
    timestamp: int
    nonce: int
    tx_root: bytes
    transactions: tuple[Transaction, ...]
    block_hash: bytes

    def recompute_hash(self) -> bytes:
        return block_hash(self.index, self.prev_hash, self.timestamp, self.nonce, self.tx_root)

    def as_dict(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "prev_hash": self.prev_hash.hex(),
            "timestamp": self.timestamp,
            "nonce": self.nonce,
            "tx_root": self.tx_root.hex(),
            "transactions": [tx.as_dict() for tx in self.transactions],
            "block_hash": self.block_hash.hex(),
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), separators=(",", ":"))


@dataclass(frozen=True)
class VerificationReport:
    ok: bool
    first_failure: Optional[int] = None
    reason: str = ""


def _check_block(block: Block, position: int, previous: Optional[Block]) -> Optional[str]:
    if block.index != position:
        return f"index {block.index} at position {position}"
    expected_prev = ZERO_DIGEST if previous is None else previous.block_hash
    if block.prev_hash != expected_prev:
        return "prev_hash does not link to previous block"
    if previous is not None and block.timestamp < previous.timestamp:
        return "timestamp regression"
    if block.nonce != 0:
        return "nonzero nonce"
    if not block.transactions:
        return "empty block"
    for seq, tx in enumerate(block.transactions):
        if tx.tx_hash != transaction_hash(tx.caller, tx.operation, tx.input, block.timestamp, seq):
            return f"tx {seq} hash mismatch"
    if block.tx_root != merkle_root([tx.leaf() for tx in block.transactions]):
        return "tx_root mismatch"
    if block.block_hash != block.recompute_hash():
        return "block_hash mismatch"
    return None


def verify_blocks(blocks: Sequence[Block]) -> VerificationReport:
    if not blocks:
        return VerificationReport(False, None, "empty chain")
    previous = None
    for position, block in enumerate(blocks):
        reason = _check_block(block, position, previous)
        if reason is not None:
            return VerificationReport(False, position, reason)
        previous = block
    return VerificationReport(True)


class Ledger:
    """Single-writer chain of blocks. Blocks are never removed or reordered."""

    def __init__(self) -> None:
        self._blocks: list[Block] = []

    def __len__(self) -> int:
        return len(self._blocks)

    def __iter__(self) -> Iterator[Block]:
        return iter(self._blocks)

    def __getitem__(self, index: int) -> Block:
        return self._blocks[index]

    @property
    def blocks(self) -> tuple[Block, ...]:
        return tuple(self._blocks)

    @property
    def head(self) -> Optional[Block]:
        return self._blocks[-1] if self._blocks else None

    @property
    def head_hash(self) -> bytes:
        return self._blocks[-1].block_hash if self._blocks else ZERO_DIGEST

    def append_block(self, transactions: Sequence[Transaction], timestamp: int) -> Block:
        if not transactions:
            raise EmptyBlock("a block needs at least one transaction")
        if timestamp < 0:
            raise TimestampRegression(f"negative timestamp {timestamp}")
        head = self.head
        if head is not None and timestamp < head.timestamp:
            raise TimestampRegression(f"timestamp {timestamp} precedes head timestamp {head.timestamp}")
        for seq, tx in enumerate(transactions):
            if tx.tx_hash != transaction_hash(tx.caller, tx.operation, tx.input, timestamp, seq):
                raise InvalidTransaction(f"tx {seq} was not hashed for timestamp {timestamp}, seq {seq}")
        index = len(self._blocks)
        prev = self.head_hash
        root = merkle_root([tx.leaf() for tx in transactions])
        block = Block(
            index=index,
            prev_hash=prev,
            timestamp=timestamp,
            nonce=0,
            tx_root=root,
            transactions=tuple(transactions),
            block_hash=block_hash(index, prev, timestamp, 0, root),
        )
        self._blocks.append(block)
        return block

    def verify_chain(self) -> VerificationReport:
        return verify_blocks(self._blocks)

    def query_events(self, order_id: int, name: Optional[str] = None) -> list[EventRecord]:
        """Events for ``order_id`` in chain order, optionally filtered by event name."""
        return [
            event
            for block in self._blocks
            for tx in block.transactions
            for event in tx.events
            if event.order_id == order_id and (name is None or event.name == name)
        ]

    def dumps(self) -> str:
        return "".join(block.to_json() + "\n" for block in self._blocks)

    @classmethod
    def from_blocks(cls, blocks: Iterable[Block]) -> "Ledger":
        """Wrap already-built blocks without validating them (see :meth:`verify_chain`)."""
        ledger = cls()
        ledger._blocks = list(blocks)
        return ledger


# --- NDJSON parsing ---------------------------------------------------------

def _hex(value: Any, what: str, size: Optional[int] = None) -> bytes:
    if not isinstance(value, str):
        raise ValueError(f"{what} is not a string")
    if value != value.lower() or value.startswith("0x"):
        raise ValueError(f"{what} is not lowercase unprefixed hex")
    raw = bytes.fromhex(value)
    if size is not None and len(raw) != size:
        raise ValueError(f"{what} has {len(raw)} bytes, expected {size}")
    return raw


def _int(value: Any, what: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < 0:
        raise ValueError(f"{what} is not a non-negative integer")
    return value


def _event_from_dict(raw: Any) -> EventRecord:
    if not isinstance(raw, dict) or set(raw) != {"name", "order_id", "status", "msg"}:
        raise ValueError("malformed event")
    status = raw["status"]
    if status is not None:
        status = _int(status, "status")
    if not isinstance(raw["msg"], str) or not isinstance(raw["name"], str):
        raise ValueError("malformed event")
    return EventRecord(raw["name"], _int(raw["order_id"], "order_id"), status, raw["msg"])


def _tx_from_dict(raw: Any) -> Transaction:
    keys = {"tx_hash", "caller", "operation", "input", "output", "events", "gas_charged"}
    if not isinstance(raw, dict) or set(raw) != keys:
        raise ValueError("malformed transaction")
    if not isinstance(raw["caller"], str) or not isinstance(raw["operation"], str):
        raise ValueError("malformed transaction")
    if not isinstance(raw["events"], list):
        raise ValueError("events is not a list")
    return Transaction(
        tx_hash=_hex(raw["tx_hash"], "tx_hash", 32),
        caller=raw["caller"],
        operation=raw["operation"],
        input=_hex(raw["input"], "input"),
        output=_hex(raw["output"], "output"),
        events=tuple(_event_from_dict(e) for e in raw["events"]),
        gas_charged=_int(raw["gas_charged"], "gas_charged"),
    )


def block_from_dict(raw: Any) -> Block:
    keys = {"index", "prev_hash", "timestamp", "nonce", "tx_root", "transactions", "block_hash"}
    if not isinstance(raw, dict) or set(raw) != keys:
        raise ValueError("malformed block")
    if not isinstance(raw["transactions"], list):
        raise ValueError("transactions is not a list")
    return Block(
        index=_int(raw["index"], "index"),
        prev_hash=_hex(raw["prev_hash"], "prev_hash", 32),
        timestamp=_int(raw["timestamp"], "timestamp"),
        nonce=_int(raw["nonce"], "nonce"),
        tx_root=_hex(raw["tx_root"], "tx_root", 32),
        transactions=tuple(_tx_from_dict(tx) for tx in raw["transactions"]),
        block_hash=_hex(raw["block_hash"], "block_hash", 32),
    )


def parse_dump_lines(text: str) -> list[Any]:
    """Split an NDJSON dump into decoded JSON values (raises ``ValueError`` on bad JSON)."""
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def load_dump(text: str) -> Ledger:
    """Parse an NDJSON dump; a structurally invalid line raises :class:`MalformedBlock`."""
    blocks = []
    for position, raw in enumerate(parse_dump_lines(text)):
        try:
            blocks.append(block_from_dict(raw))
        except ValueError as exc:
            raise MalformedBlock(position, str(exc)) from exc
    return Ledger.from_blocks(blocks)


def verify_dump(text: str) -> VerificationReport:
    """Verify an NDJSON dump.

    Bad JSON raises ``ValueError``. A line that is valid JSON but not a
    well-formed block counts as a verification failure at that position.
    """
    raws = parse_dump_lines(text)
    blocks: list[Block] = []
    for position, raw in enumerate(raws):
        try:
            blocks.append(block_from_dict(raw))
        except ValueError as exc:
            report = verify_blocks(blocks) if blocks else VerificationReport(True)
            if not report.ok:
                return report
            return VerificationReport(False, position, f"malformed block: {exc}")
    return verify_blocks(blocks)
