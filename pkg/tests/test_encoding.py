import pytest
from hypothesis import given, strategies as st

from delivchain.encoding import EncodingError, decode, digest, encode

values = st.recursive(
    st.none() | st.booleans() | st.integers() | st.binary(max_size=40) | st.text(max_size=20),
    lambda children: st.lists(children, max_size=5)
    | st.dictionaries(st.text(max_size=8), children, max_size=5),
    max_leaves=20,
)


@given(values)
def test_roundtrip(value):
    assert decode(encode(value)) == value


def test_layout_is_tag_length_payload():
    assert encode(None) == b"\x00\x00\x00\x00\x00"
    assert encode(True) == b"\x02\x00\x00\x00\x00"
    assert encode(0) == b"\x03\x00\x00\x00\x00"
    assert encode(255) == b"\x03\x00\x00\x00\x02\x00\xff"
    assert encode(-1) == b"\x03\x00\x00\x00\x01\xff"
    assert encode("ab") == b"\x05\x00\x00\x00\x02ab"
    assert encode([1]) == b"\x06\x00\x00\x00\x06" + b"\x03\x00\x00\x00\x01\x01"


def test_bool_and_int_do_not_collide():
    assert encode(True) != encode(1)
    assert digest([0]) != digest([False])


def test_dict_order_is_significant():
    assert encode({"a": 1, "b": 2}) != encode({"b": 2, "a": 1})


@pytest.mark.parametrize("raw", [b"", b"\x03\x00\x00\x00\x05\x01", b"\x09\x00\x00\x00\x00",
                                 b"\x03\x00\x00\x00\x02\x00\x01", encode(1) + b"\x00"])
def test_decode_rejects_garbage(raw):
    with pytest.raises(EncodingError):
        decode(raw)


def test_unencodable_type():
    with pytest.raises(EncodingError):
        encode(1.5)
