"""Actor registration: customers, restaurants with menus, deliverymen."""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

from .errors import (
    DuplicateAddress,
    DuplicateFoodId,
    EmptyMenu,
    InvalidAddress,
    InvalidMenuItem,
    InvalidPrepTime,
    UnknownActor,
    UnknownRestaurant,
)

INITIAL_REPUTATION = 100

_ADDRESS_RE = re.compile(r"^[0-9a-f]{40}$")


def to_address(value: str | bytes) -> str:
    """Normalize a 20-byte address to 40 lowercase hex characters."""
    if isinstance(value, (bytes, bytearray)):
        if len(value) != 20:
            raise InvalidAddress(f"address must be 20 bytes, got {len(value)}")
        return bytes(value).hex()
    text = value.lower()
    if text.startswith("0x"):
        text = text[2:]
    if not _ADDRESS_RE.match(text):
        raise InvalidAddress(f"not a 20-byte hex address: {value!r}")
    return text


class ActorKind(str, enum.Enum):
    CUSTOMER = "Customer"
    RESTAURANT = "Restaurant"
    DELIVERYMAN = "Deliveryman"


@dataclass(frozen=True)
class MenuItem:
    food_id: int
    price: int
    prep_time: int

    def as_dict(self) -> dict[str, int]:
        return {"food_id": self.food_id, "price": self.price, "prep_time": self.prep_time}


@dataclass
class ActorRecord:
    address: str
    kind: ActorKind
    id: int
    reputation: int = INITIAL_REPUTATION
    menu: tuple[MenuItem, ...] = ()
    active_order_count: int = 0

    def menu_item(self, food_id: int) -> Optional[MenuItem]:
        for item in self.menu:
            if item.food_id == food_id:
                return item
        return None


def validate_menu(menu: Sequence[MenuItem]) -> tuple[MenuItem, ...]:
    if not menu:
        raise EmptyMenu("a restaurant menu needs at least one item")
    seen: set[int] = set()
    for item in menu:
        if not isinstance(item.food_id, int) or item.food_id < 1:
            raise InvalidMenuItem(f"food_id must be a positive integer, got {item.food_id!r}")
        if not isinstance(item.price, int) or item.price < 0:
            raise InvalidMenuItem(f"price must be a non-negative integer, got {item.price!r}")
        if not isinstance(item.prep_time, int) or item.prep_time < 1:
            raise InvalidPrepTime(f"prep_time must be >= 1, got {item.prep_time!r}")
        if item.food_id in seen:
            raise DuplicateFoodId(f"food_id {item.food_id} appears twice")
        seen.add(item.food_id)
    return tuple(menu)


class Registry:
    """Address-keyed actor records with dense per-kind ids.

    Registration methods validate fully before mutating anything, so a
    raised error leaves the registry untouched.
    """

    def __init__(self, initial_reputation: int = INITIAL_REPUTATION) -> None:
        self.initial_reputation = initial_reputation
        self._by_address: dict[str, ActorRecord] = {}
        self._by_kind: dict[ActorKind, list[ActorRecord]] = {kind: [] for kind in ActorKind}

    def __contains__(self, address: str) -> bool:
        return address in self._by_address

    def __iter__(self) -> Iterator[ActorRecord]:
        for kind in ActorKind:
            yield from self._by_kind[kind]

    def __len__(self) -> int:
        return len(self._by_address)

    def _register(self, address: str, kind: ActorKind, menu: tuple[MenuItem, ...] = ()) -> int:
        address = to_address(address)
        if address in self._by_address:
            raise DuplicateAddress(f"{address} is already registered")
        records = self._by_kind[kind]
        record = ActorRecord(address, kind, len(records) + 1, self.initial_reputation, menu)
        records.append(record)
        self._by_address[address] = record
        return record.id

    def register_customer(self, address: str) -> int:
        return self._register(address, ActorKind.CUSTOMER)

    def register_restaurant(self, address: str, menu: Sequence[MenuItem]) -> int:
        address = to_address(address)
        if address in self._by_address:
            raise DuplicateAddress(f"{address} is already registered")
        return self._register(address, ActorKind.RESTAURANT, validate_menu(menu))

    def register_deliveryman(self, address: str) -> int:
        return self._register(address, ActorKind.DELIVERYMAN)

    def get(self, address: str) -> Optional[ActorRecord]:
        return self._by_address.get(address)

    def require(self, address: str) -> ActorRecord:
        record = self._by_address.get(address)
        if record is None:
            raise UnknownActor(f"{address} is not registered")
        return record

    def by_id(self, kind: ActorKind, actor_id: int) -> Optional[ActorRecord]:
        records = self._by_kind[kind]
        if isinstance(actor_id, int) and 1 <= actor_id <= len(records):
            return records[actor_id - 1]
        return None

    def restaurant(self, restaurant_id: int) -> ActorRecord:
        record = self.by_id(ActorKind.RESTAURANT, restaurant_id)
        if record is None:
            raise UnknownRestaurant(f"no restaurant with id {restaurant_id}")
        return record

    def of_kind(self, kind: ActorKind) -> tuple[ActorRecord, ...]:
        return tuple(self._by_kind[kind])

    def food_available(self, restaurant_id: int, food_ids: Iterable[int]) -> bool:
        menu_ids = {item.food_id for item in self.restaurant(restaurant_id).menu}
        return all(food_id in menu_ids for food_id in food_ids)

    def reputations(self) -> dict[str, int]:
        return {record.address: record.reputation for record in self}
