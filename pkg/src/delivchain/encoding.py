"""Canonical byte encoding used for every digest in the engine.

Each value is written as ``tag (1 byte) | length (4 bytes, big-endian) |
payload``. Payloads:

========  ====  ==============================================================
type      tag   payload
========  ====  ==============================================================
None      0x00  empty
False     0x01  empty
True      0x02  empty
int       0x03  signed big-endian two's complement, minimal length (0 -> empty)
bytes     0x04  raw bytes
str       0x05  UTF-8
list      0x06  concatenated encodings of the items
dict      0x07  concatenated (key, value) encodings in insertion order
========  ====  ==============================================================

Dict keys must be ``str``. Field order is the declared order of the caller,
never sorted, so two implementations hash identical bytes as long as they
declare fields identically. Tuples encode as lists.
"""
from __future__ import annotations

import hashlib
import struct
from typing import Any

from .errors import EncodingError

_NONE, _FALSE, _TRUE, _INT, _BYTES, _STR, _LIST, _DICT = range(8)
_HEADER = struct.Struct(">BI")

ZERO_DIGEST = bytes(32)


def _int_bytes(value: int) -> bytes:
    if value == 0:
        return b""
    length = (value.bit_length() + 8) // 8
    return value.to_bytes(length, "big", signed=True)


def _encode_into(value: Any, out: list[bytes]) -> None:
    if value is None:
        out.append(_HEADER.pack(_NONE, 0))
    elif value is True:
        out.append(_HEADER.pack(_TRUE, 0))
    elif value is False:
        out.append(_HEADER.pack(_FALSE, 0))
    elif isinstance(value, int):
        payload = _int_bytes(value)
        out.append(_HEADER.pack(_INT, len(payload)))
        out.append(payload)
    elif isinstance(value, (bytes, bytearray)):
        out.append(_HEADER.pack(_BYTES, len(value)))
        out.append(bytes(value))
    elif isinstance(value, str):
        payload = value.encode("utf-8")
        out.append(_HEADER.pack(_STR, len(payload)))
        out.append(payload)
    elif isinstance(value, (list, tuple)):
        parts: list[bytes] = []
        for item in value:
            _encode_into(item, parts)
        body = b"".join(parts)
        out.append(_HEADER.pack(_LIST, len(body)))
        out.append(body)
    elif isinstance(value, dict):
        parts = []
        for key, item in value.items():
            if not isinstance(key, str):
                raise EncodingError(f"dict keys must be str, got {type(key).__name__}")
            _encode_into(key, parts)
            _encode_into(item, parts)
        body = b"".join(parts)
        out.append(_HEADER.pack(_DICT, len(body)))
        out.append(body)
    else:
        raise EncodingError(f"cannot encode {type(value).__name__}")


def encode(value: Any) -> bytes:
    out: list[bytes] = []
    _encode_into(value, out)
    return b"".join(out)


def _decode_at(data: bytes, pos: int) -> tuple[Any, int]:
    if pos + _HEADER.size > len(data):
        raise EncodingError("truncated header")
    tag, length = _HEADER.unpack_from(data, pos)
    start = pos + _HEADER.size
    end = start + length
    if end > len(data):
        raise EncodingError("truncated payload")
    payload = data[start:end]
    if tag in (_NONE, _FALSE, _TRUE):
        if length:
            raise EncodingError("constant with payload")
        return (None, False, True)[tag], end
    if tag == _INT:
        if length and _int_bytes(int.from_bytes(payload, "big", signed=True)) != payload:
            raise EncodingError("non-minimal integer")
        return int.from_bytes(payload, "big", signed=True), end
    if tag == _BYTES:
        return payload, end
    if tag == _STR:
        try:
            return payload.decode("utf-8"), end
        except UnicodeDecodeError as exc:
            raise EncodingError("invalid utf-8") from exc
    if tag == _LIST:
        items = []
        cursor = start
        while cursor < end:
            item, cursor = _decode_at(data[:end], cursor)
            items.append(item)
        return items, end
    if tag == _DICT:
        result: dict[str, Any] = {}
        cursor = start
        while cursor < end:
            key, cursor = _decode_at(data[:end], cursor)
            if not isinstance(key, str):
                raise EncodingError("dict key is not a string")
            result[key], cursor = _decode_at(data[:end], cursor)
        return result, end
    raise EncodingError(f"unknown tag {tag:#x}")


def decode(data: bytes) -> Any:
    """Inverse of :func:`encode`. Lists come back as ``list``, never tuple."""
    value, end = _decode_at(data, 0)
    if end != len(data):
        raise EncodingError("trailing bytes")
    return value


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def digest(value: Any) -> bytes:
    """SHA-256 of the canonical encoding of ``value``."""
    return hashlib.sha256(encode(value)).digest()
