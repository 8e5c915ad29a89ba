import hashlib
import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from delivchain.encoding import ZERO_DIGEST
from delivchain.errors import EmptyBlock, EmptyList, InvalidTransaction, TimestampRegression
from delivchain.ledger import (
    EventRecord,
    Ledger,
    Transaction,
    load_dump,
    merkle_root,
    verify_blocks,
    verify_dump,
)

D1 = hashlib.sha256(b"leaf-1").digest()
D2 = hashlib.sha256(b"leaf-2").digest()
D3 = hashlib.sha256(b"leaf-3").digest()


def tx(timestamp: int, n: int = 0, seq: int = 0, events=()) -> Transaction:
    return Transaction.create("ab" * 20, "fund", bytes([n]), b"\x01", events, 0, timestamp, seq)


def chain(length: int) -> Ledger:
    ledger = Ledger()
    for i in range(length):
        t = 2 * i
        ledger.append_block([tx(t, i), tx(t, i + 1, seq=1)], t)
    return ledger


# merkle_root ------------------------------------------------------------------

def test_merkle_single_leaf_duplicates():
    assert merkle_root([D1]).hex() == "0a65018253178590fe9a63b2ff29f3307f8433dce8e8990ac7b0a46198d43b95"


def test_merkle_pair():
    assert merkle_root([D1, D2]).hex() == "436f8729cd6371869e8ddfaee3bd95e7b1c50ab83fd4773f810fac4138b02ac6"


def test_merkle_three_leaves_hand_computed():
    # sha256(sha256(d1|d2) | sha256(d3|d3)), computed with hashlib before the build
    assert merkle_root([D1, D2, D3]).hex() == "8bb7c208fc42da01b19f00fd117b8837e3b5fb50e3dcb31e51d50bc9efd80a9c"


def test_merkle_empty():
    with pytest.raises(EmptyList):
        merkle_root([])


@given(st.lists(st.binary(min_size=32, max_size=32), min_size=2, max_size=9, unique=True), st.data())
def test_merkle_order_sensitive(leaves, data):
    i = data.draw(st.integers(0, len(leaves) - 1))
    j = data.draw(st.integers(0, len(leaves) - 1).filter(lambda k: k != i))
    swapped = list(leaves)
    swapped[i], swapped[j] = swapped[j], swapped[i]
    assert merkle_root(leaves) != merkle_root(swapped)


# append_block -----------------------------------------------------------------

def test_genesis_block():
    ledger = Ledger()
    block = ledger.append_block([tx(0)], 0)
    assert block.index == 0
    assert block.prev_hash == ZERO_DIGEST
    assert block.nonce == 0
    assert block.block_hash == block.recompute_hash()


def test_append_links_to_previous():
    ledger = Ledger()
    genesis = ledger.append_block([tx(0)], 0)
    block = ledger.append_block([tx(5)], 5)
    assert block.index == 1
    assert block.prev_hash == genesis.block_hash


def test_timestamp_regression():
    ledger = Ledger()
    ledger.append_block([tx(0)], 0)
    ledger.append_block([tx(5)], 5)
    with pytest.raises(TimestampRegression):
        ledger.append_block([tx(3)], 3)
    assert len(ledger) == 2


def test_empty_block():
    with pytest.raises(EmptyBlock):
        Ledger().append_block([], 0)


def test_transaction_hashed_for_other_timestamp():
    with pytest.raises(InvalidTransaction):
        Ledger().append_block([tx(1)], 2)


# verify_chain -------------------------------------------------------------------

def test_single_block_chain_verifies():
    assert chain(1).verify_chain().ok


def _mutated(ledger: Ledger, position: int, mutate) -> str:
    lines = ledger.dumps().splitlines()
    raw = json.loads(lines[position])
    mutate(raw)
    lines[position] = json.dumps(raw)
    return "\n".join(lines) + "\n"


def _flip(hex_text: str, at: int = 0) -> str:
    c = hex_text[at]
    return hex_text[:at] + ("0" if c != "0" else "1") + hex_text[at + 1:]


def full_rehash_first_failure(text: str):
    """Independent oracle: rebuild every digest from the dump with hashlib alone."""
    from delivchain.encoding import encode

    def h(value):
        return hashlib.sha256(encode(value)).digest()

    prev = bytes(32)
    last_t = None
    for position, line in enumerate(text.splitlines()):
        b = json.loads(line)
        leaves = []
        for seq, t in enumerate(b["transactions"]):
            inp = bytes.fromhex(t["input"])
            if h([t["caller"], t["operation"], inp, b["timestamp"], seq]).hex() != t["tx_hash"]:
                return position
            leaves.append(h([bytes.fromhex(t["tx_hash"]), t["caller"], t["operation"], inp,
                             bytes.fromhex(t["output"]), t["events"], t["gas_charged"]]))
        level = leaves
        while True:
            if len(level) % 2:
                level = level + [level[-1]]
            level = [hashlib.sha256(level[i] + level[i + 1]).digest() for i in range(0, len(level), 2)]
            if len(level) == 1:
                break
        ok = (
            b["index"] == position
            and bytes.fromhex(b["prev_hash"]) == prev
            and (last_t is None or b["timestamp"] >= last_t)
            and bytes.fromhex(b["tx_root"]) == level[0]
            and h([b["index"], bytes.fromhex(b["prev_hash"]), b["timestamp"], b["nonce"], level[0]]).hex()
            == b["block_hash"]
        )
        if not ok:
            return position
        prev, last_t = bytes.fromhex(b["block_hash"]), b["timestamp"]
    return None


def test_oracle_accepts_untouched_chain():
    assert full_rehash_first_failure(chain(10).dumps()) is None


def test_flip_byte_in_block_3_transactions():
    def mutate(raw):
        raw["transactions"][0]["input"] = _flip(raw["transactions"][0]["input"])

    text = _mutated(chain(10), 3, mutate)
    assert full_rehash_first_failure(text) == 3
    report = verify_dump(text)
    assert not report.ok and report.first_failure == 3


def test_zeroed_prev_hash_of_block_2():
    def mutate(raw):
        raw["prev_hash"] = "00" * 32

    text = _mutated(chain(10), 2, mutate)
    assert full_rehash_first_failure(text) == 2
    assert verify_dump(text).first_failure == 2


def test_event_mutation_detected():
    ledger = Ledger()
    ledger.append_block([tx(0)], 0)
    ledger.append_block([tx(1, events=[EventRecord("order_update", 1, 0)])], 1)

    def mutate(raw):
        raw["transactions"][0]["events"][0]["status"] = 1

    assert verify_dump(_mutated(ledger, 1, mutate)).first_failure == 1


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 7), st.integers(0, 2**16), st.data())
def test_any_single_bit_flip_is_detected(position, bit_seed, data):
    ledger = chain(8)
    blocks = list(ledger.blocks)
    block = blocks[position]
    field = data.draw(st.sampled_from(["prev_hash", "tx_root", "block_hash", "index", "timestamp", "nonce", "tx"]))
    rng = random.Random(bit_seed)
    if field in ("prev_hash", "tx_root", "block_hash"):
        raw = bytearray(getattr(block, field))
        raw[rng.randrange(32)] ^= 1 << rng.randrange(8)
        changes = {field: bytes(raw)}
    elif field == "tx":
        t = block.transactions[0]
        raw = bytearray(t.input)
        raw[0] ^= 1 << rng.randrange(8)
        changes = {"transactions": (Transaction(t.tx_hash, t.caller, t.operation, bytes(raw), t.output,
                                                t.events, t.gas_charged),) + block.transactions[1:]}
    else:
        changes = {field: getattr(block, field) ^ (1 << rng.randrange(8))}
    from dataclasses import replace
    blocks[position] = replace(block, **changes)
    report = verify_blocks(blocks)
    assert not report.ok
    assert report.first_failure == position


def test_chain_length_is_monotone():
    ledger = Ledger()
    lengths = []
    for t in range(1, 6):
        ledger.append_block([tx(t)], t)
        lengths.append(len(ledger))
        with pytest.raises(TimestampRegression):
            ledger.append_block([tx(t - 1)], t - 1)
        lengths.append(len(ledger))
    assert lengths == sorted(lengths)
    assert len(ledger) == 5


# query_events / dump -------------------------------------------------------------

def test_query_unknown_order():
    assert chain(3).query_events(999) == []


def test_dump_roundtrip_and_format():
    ledger = chain(4)
    text = ledger.dumps()
    first = json.loads(text.splitlines()[0])
    assert list(first) == ["index", "prev_hash", "timestamp", "nonce", "tx_root", "transactions", "block_hash"]
    assert first["prev_hash"] == "0" * 64 and not first["block_hash"].startswith("0x")
    assert load_dump(text).blocks == ledger.blocks
    assert load_dump(text).dumps() == text
