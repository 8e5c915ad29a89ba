"""The order lifecycle contract.

Every accepted operation charges its scheduled gas to the caller and appends
exactly one block holding one transaction with the events it emitted.
Handlers check every precondition before touching state, so a rejected call
changes nothing: no gas, no block, no balance movement.
"""
from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Optional, Sequence

from . import settlement
from .encoding import decode, digest, encode
from .errors import (
    AlreadyCollected,
    DeliverymanAtCapacity,
    FoodUnavailable,
    InsufficientFunds,
    InvalidArgument,
    NotAssignedDeliveryman,
    NotOrderOwner,
    NotYetDelivered,
    RestaurantAtCapacity,
    TimestampRegression,
    Unauthorized,
    UnknownCustomer,
    UnknownDeliveryman,
    UnknownOperation,
    UnknownOrder,
    WrongStatus,
)
from .ledger import Block, EventRecord, Ledger, Transaction
from .registry import ActorKind, ActorRecord, MenuItem, Registry, to_address
from .settlement import BalanceSheet, GasMeter, GasSchedule, SettlementReceipt

MSG_ACCEPTED = "Your order has been placed"
MSG_COLLECTED = "Your package has been received by the deliveryman"
MSG_RECEIVED = "Order received by the customer"


class OrderStatus(enum.IntEnum):
    PLACED = 0
    ACCEPTED_BY_RESTAURANT = 1
    DELIVERY_ASSIGNED = 2
    PREPARED = 3
    WITH_DELIVERYMAN = 4
    RECEIVED_BY_CUSTOMER = 5


# Operations recorded on the chain but outside the metered gas schedule.
SYSTEM_OPERATIONS = ("deploy", "fund")
LIFECYCLE_OPERATIONS = (
    "place_order",
    "accept_order",
    "accept_package",
    "food_making",
    "collect_food",
    "food_fee_collecting",
    "deliver_food",
    "food_arrival",
    "collect_delivery_fee",
)
REGISTRATION_OPERATIONS = ("register_customer", "register_restaurant", "register_deliveryman")
OPERATIONS = SYSTEM_OPERATIONS + REGISTRATION_OPERATIONS + LIFECYCLE_OPERATIONS


@dataclass(frozen=True)
class ContractParams:
    restaurant_cap: int = 5
    deliveryman_cap: int = 3
    food_penalty_pct: int = settlement.FOOD_PENALTY_PCT
    delivery_penalty_pct: int = settlement.DELIVERY_PENALTY_PCT
    initial_reputation: int = 100
    reputation_decrement: int = settlement.REPUTATION_DECREMENT
    gas_overrides: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("restaurant_cap", "deliveryman_cap", "initial_reputation", "reputation_decrement"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 0:
                raise InvalidArgument(f"{name} must be a non-negative integer")
        for name in ("food_penalty_pct", "delivery_penalty_pct"):
            value = getattr(self, name)
            if not isinstance(value, int) or not 0 <= value <= 100:
                raise InvalidArgument(f"{name} must be an integer in [0, 100]")

    def as_dict(self) -> dict:
        out = asdict(self)
        out["gas_overrides"] = dict(sorted(self.gas_overrides.items()))
        return out


@dataclass
class Order:
    order_id: int
    order_hash: bytes
    customer: str
    restaurant_id: int
    food_items: tuple[int, ...]
    food_cost: int
    delivery_fee: int
    promised_delivery_time: int
    order_placing_time: int
    escrow: int
    deliveryman: Optional[str] = None
    promised_making_time: Optional[int] = None
    order_receive_time: Optional[int] = None
    order_delivery_time: Optional[int] = None
    delivery_start_time: Optional[int] = None
    declared_arrival_time: Optional[int] = None
    arrival_time: Optional[int] = None
    status: OrderStatus = OrderStatus.PLACED
    food_fee_paid: bool = False
    delivery_fee_paid: bool = False
    loc_x: int = 0
    loc_y: int = 0

    @property
    def delivered(self) -> bool:
        return self.declared_arrival_time is not None

    @property
    def settled(self) -> bool:
        return self.food_fee_paid and self.delivery_fee_paid

    def as_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["order_hash"] = self.order_hash.hex()
        out["food_items"] = list(self.food_items)
        out["status"] = int(self.status)
        return out


def _int_arg(name: str, value: Any, minimum: int = 0) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        raise InvalidArgument(f"{name} must be an integer >= {minimum}, got {value!r}")
    return value


_Outcome = tuple[Any, Any, Sequence[EventRecord]]


class DeliveryContract:
    """Single state machine owning the registry, balances, gas meter and chain.

    Construction writes the genesis block (a ``deploy`` transaction carrying
    the contract parameters), so a ledger is self-describing for replay.
    """

    def __init__(self, owner: str, params: Optional[ContractParams] = None, now: int = 0) -> None:
        self.owner = to_address(owner)
        self.params = params or ContractParams()
        self.registry = Registry(self.params.initial_reputation)
        self.balances = BalanceSheet()
        self.gas = GasMeter(GasSchedule(self.params.gas_overrides))
        self.ledger = Ledger()
        self.orders: dict[int, Order] = {}
        self.receipts: list[SettlementReceipt] = []
        self._handlers: dict[str, Callable[..., _Outcome]] = {
            op: getattr(self, f"_op_{op}") for op in OPERATIONS if op != "deploy"
        }
        self._append(self.owner, "deploy", self.params.as_dict(), True, (), 0, now)

    # --- plumbing -----------------------------------------------------------

    def _append(self, caller: str, operation: str, args: dict, output: Any,
                events: Sequence[EventRecord], gas: int, now: int) -> Block:
        tx = Transaction.create(caller, operation, encode(args), encode(output), events, gas, now)
        return self.ledger.append_block([tx], now)

    def submit(self, caller: str, operation: str, args: dict, now: int) -> Any:
        """Execute one operation; ``args`` keys must follow the handler's parameter order."""
        handler = self._handlers.get(operation)
        if handler is None:
            raise UnknownOperation(f"unknown operation {operation!r}")
        head = self.ledger.head
        if not isinstance(now, int) or now < 0 or (head is not None and now < head.timestamp):
            raise TimestampRegression(f"tick {now} precedes head tick {head.timestamp if head else 0}")
        caller = to_address(caller)
        result, output, events = handler(caller, now, **args)
        gas = 0 if operation in SYSTEM_OPERATIONS else self.gas.charge_gas(caller, operation)
        self._append(caller, operation, args, output, events, gas, now)
        return result

    def _order(self, order_id: Any) -> Order:
        order = self.orders.get(order_id) if isinstance(order_id, int) else None
        if order is None:
            raise UnknownOrder(f"no order {order_id!r}")
        return order

    def _restaurant_of(self, caller: str, order: Order) -> ActorRecord:
        record = self.registry.restaurant(order.restaurant_id)
        if record.address != caller:
            raise NotOrderOwner(f"{caller} does not own restaurant {order.restaurant_id}")
        return record

    def _assigned(self, caller: str, order: Order) -> None:
        if order.deliveryman is None or order.deliveryman != caller:
            raise NotAssignedDeliveryman(f"{caller} is not assigned to order {order.order_id}")

    @staticmethod
    def _expect(order: Order, status: OrderStatus) -> None:
        if order.status != status:
            raise WrongStatus(f"order {order.order_id} is {order.status.name}, expected {status.name}")

    @staticmethod
    def _update(order: Order) -> EventRecord:
        return EventRecord("order_update", order.order_id, int(order.status))

    # --- public API -----------------------------------------------------------

    def fund(self, address: str, amount: int, now: int) -> int:
        return self.submit(self.owner, "fund", {"address": to_address(address), "amount": amount}, now)

    def register_customer(self, address: str, now: int) -> int:
        return self.submit(address, "register_customer", {}, now)

    def register_restaurant(self, address: str, menu: Sequence[MenuItem], now: int) -> int:
        return self.submit(address, "register_restaurant", {"menu": [item.as_dict() for item in menu]}, now)

    def register_deliveryman(self, address: str, now: int) -> int:
        return self.submit(address, "register_deliveryman", {}, now)

    def food_available(self, restaurant_id: int, food_ids: Sequence[int]) -> bool:
        return self.registry.food_available(restaurant_id, food_ids)

    def place_order(self, customer: str, restaurant_id: int, food_items: Sequence[int], delivery_fee: int,
                    promised_delivery_time: int, now: int, loc_x: int = 0, loc_y: int = 0) -> Order:
        args = {
            "restaurant_id": restaurant_id,
            "food_items": list(food_items),
            "delivery_fee": delivery_fee,
            "promised_delivery_time": promised_delivery_time,
            "loc_x": loc_x,
            "loc_y": loc_y,
        }
        return self.submit(customer, "place_order", args, now)

    def accept_order(self, restaurant: str, order_id: int, now: int) -> bool:
        return self.submit(restaurant, "accept_order", {"order_id": order_id}, now)

    def accept_package(self, deliveryman: str, order_id: int, now: int) -> bool:
        return self.submit(deliveryman, "accept_package", {"order_id": order_id}, now)

    def food_making(self, restaurant: str, order_id: int, now: int) -> bool:
        return self.submit(restaurant, "food_making", {"order_id": order_id}, now)

    def collect_food(self, deliveryman: str, order_id: int, now: int) -> bool:
        return self.submit(deliveryman, "collect_food", {"order_id": order_id}, now)

    def deliver_food(self, deliveryman: str, order_id: int, now: int) -> bytes:
        return self.submit(deliveryman, "deliver_food", {"order_id": order_id}, now)

    def food_arrival(self, customer: str, order_id: int, now: int) -> bool:
        return self.submit(customer, "food_arrival", {"order_id": order_id}, now)

    def food_fee_collecting(self, restaurant: str, order_id: int, now: int) -> SettlementReceipt:
        return self.submit(restaurant, "food_fee_collecting", {"order_id": order_id}, now)

    def collect_delivery_fee(self, deliveryman: str, order_id: int, now: int) -> SettlementReceipt:
        return self.submit(deliveryman, "collect_delivery_fee", {"order_id": order_id}, now)

    # --- handlers ---------------------------------------------------------------

    def _op_fund(self, caller: str, now: int, address: str, amount: int) -> _Outcome:
        if caller != self.owner:
            raise Unauthorized("only the contract owner funds accounts")
        address = to_address(address)
        _int_arg("amount", amount)
        self.balances.fund(address, amount)
        balance = self.balances.balance(address)
        return balance, balance, ()

    def _op_register_customer(self, caller: str, now: int) -> _Outcome:
        actor_id = self.registry.register_customer(caller)
        return actor_id, actor_id, ()

    def _op_register_restaurant(self, caller: str, now: int, menu: list) -> _Outcome:
        try:
            items = [MenuItem(int(m["food_id"]), int(m["price"]), int(m["prep_time"])) for m in menu]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidArgument(f"malformed menu: {exc}") from exc
        actor_id = self.registry.register_restaurant(caller, items)
        return actor_id, actor_id, ()

    def _op_register_deliveryman(self, caller: str, now: int) -> _Outcome:
        actor_id = self.registry.register_deliveryman(caller)
        return actor_id, actor_id, ()

    def _op_place_order(self, caller: str, now: int, restaurant_id: int, food_items: list, delivery_fee: int,
                        promised_delivery_time: int, loc_x: int = 0, loc_y: int = 0) -> _Outcome:
        record = self.registry.get(caller)
        if record is None or record.kind is not ActorKind.CUSTOMER:
            raise UnknownCustomer(f"{caller} is not a registered customer")
        _int_arg("delivery_fee", delivery_fee)
        _int_arg("promised_delivery_time", promised_delivery_time, 1)
        _int_arg("loc_x", loc_x)
        _int_arg("loc_y", loc_y)
        if not isinstance(food_items, list) or not food_items:
            raise InvalidArgument("food_items must be a non-empty list")
        for food_id in food_items:
            _int_arg("food_id", food_id, 1)
        restaurant = self.registry.restaurant(_int_arg("restaurant_id", restaurant_id, 1))
        if not self.registry.food_available(restaurant_id, food_items):
            raise FoodUnavailable(f"restaurant {restaurant_id} does not serve {food_items}")
        food_cost = sum(restaurant.menu_item(food_id).price for food_id in food_items)
        total = food_cost + delivery_fee
        if self.balances.balance(caller) < total:
            raise InsufficientFunds(f"{caller} cannot cover {total}")

        order_id = len(self.orders) + 1
        order = Order(
            order_id=order_id,
            order_hash=digest([caller, restaurant_id, food_items, now, order_id]),
            customer=caller,
            restaurant_id=restaurant_id,
            food_items=tuple(food_items),
            food_cost=food_cost,
            delivery_fee=delivery_fee,
            promised_delivery_time=promised_delivery_time,
            order_placing_time=now,
            escrow=total,
            loc_x=loc_x,
            loc_y=loc_y,
        )
        self.balances.lock(caller, order_id, total)
        self.orders[order_id] = order
        return order, {"order_id": order_id, "order_hash": order.order_hash}, (self._update(order),)

    def _op_accept_order(self, caller: str, now: int, order_id: int) -> _Outcome:
        order = self._order(order_id)
        restaurant = self._restaurant_of(caller, order)
        self._expect(order, OrderStatus.PLACED)
        if restaurant.active_order_count >= self.params.restaurant_cap:
            raise RestaurantAtCapacity(f"restaurant {restaurant.id} already has {restaurant.active_order_count} orders")
        order.status = OrderStatus.ACCEPTED_BY_RESTAURANT
        order.promised_making_time = max(restaurant.menu_item(f).prep_time for f in order.food_items)
        restaurant.active_order_count += 1
        return True, True, (self._update(order), EventRecord("message", order.order_id, None, MSG_ACCEPTED))

    def _op_accept_package(self, caller: str, now: int, order_id: int) -> _Outcome:
        order = self._order(order_id)
        record = self.registry.get(caller)
        if record is None or record.kind is not ActorKind.DELIVERYMAN:
            raise UnknownDeliveryman(f"{caller} is not a registered deliveryman")
        self._expect(order, OrderStatus.ACCEPTED_BY_RESTAURANT)
        if record.active_order_count >= self.params.deliveryman_cap:
            raise DeliverymanAtCapacity(f"deliveryman {record.id} already carries {record.active_order_count}")
        order.status = OrderStatus.DELIVERY_ASSIGNED
        order.deliveryman = caller
        record.active_order_count += 1
        return True, True, (self._update(order),)

    def _op_food_making(self, caller: str, now: int, order_id: int) -> _Outcome:
        order = self._order(order_id)
        self._restaurant_of(caller, order)
        self._expect(order, OrderStatus.DELIVERY_ASSIGNED)
        order.status = OrderStatus.PREPARED
        order.order_receive_time = now
        return True, True, (self._update(order),)

    def _op_collect_food(self, caller: str, now: int, order_id: int) -> _Outcome:
        order = self._order(order_id)
        self._assigned(caller, order)
        self._expect(order, OrderStatus.PREPARED)
        order.status = OrderStatus.WITH_DELIVERYMAN
        order.order_delivery_time = now
        order.delivery_start_time = now
        return True, True, (self._update(order), EventRecord("message", order.order_id, None, MSG_COLLECTED))

    def _op_deliver_food(self, caller: str, now: int, order_id: int) -> _Outcome:
        order = self._order(order_id)
        self._assigned(caller, order)
        self._expect(order, OrderStatus.WITH_DELIVERYMAN)
        if order.delivered:
            raise WrongStatus(f"order {order.order_id} was already delivered")
        order.declared_arrival_time = now
        return order.order_hash, order.order_hash, ()

    def _op_food_arrival(self, caller: str, now: int, order_id: int) -> _Outcome:
        order = self._order(order_id)
        if caller != order.customer:
            raise NotOrderOwner(f"{caller} did not place order {order.order_id}")
        self._expect(order, OrderStatus.WITH_DELIVERYMAN)
        if not order.delivered:
            raise NotYetDelivered(f"order {order.order_id} has no delivery record yet")
        order.status = OrderStatus.RECEIVED_BY_CUSTOMER
        order.arrival_time = now
        restaurant = self.registry.restaurant(order.restaurant_id)
        restaurant.active_order_count -= 1
        self.registry.get(order.deliveryman).active_order_count -= 1
        return True, True, (EventRecord("message", order.order_id, None, MSG_RECEIVED), self._update(order))

    def _op_food_fee_collecting(self, caller: str, now: int, order_id: int) -> _Outcome:
        order = self._order(order_id)
        self._restaurant_of(caller, order)
        if order.status < OrderStatus.WITH_DELIVERYMAN:
            raise WrongStatus(f"food of order {order.order_id} has not been handed over")
        if order.food_fee_paid:
            raise AlreadyCollected(f"food fee of order {order.order_id} already collected")
        violated = settlement.making_violated(
            order.order_receive_time, order.order_delivery_time, order.promised_making_time
        )
        pct = self.params.food_penalty_pct
        receipt = settlement.settle(order.order_id, caller, ActorKind.RESTAURANT, order.food_cost, violated, pct)
        return self._pay(order, receipt, settlement.food_warning(pct), "food_fee_paid")

    def _op_collect_delivery_fee(self, caller: str, now: int, order_id: int) -> _Outcome:
        order = self._order(order_id)
        self._assigned(caller, order)
        self._expect(order, OrderStatus.RECEIVED_BY_CUSTOMER)
        if order.delivery_fee_paid:
            raise AlreadyCollected(f"delivery fee of order {order.order_id} already collected")
        violated = settlement.delivery_violated(
            order.delivery_start_time, order.arrival_time, order.promised_delivery_time
        )
        pct = self.params.delivery_penalty_pct
        receipt = settlement.settle(order.order_id, caller, ActorKind.DELIVERYMAN, order.delivery_fee, violated, pct)
        return self._pay(order, receipt, settlement.delivery_warning(pct), "delivery_fee_paid")

    def _pay(self, order: Order, receipt: SettlementReceipt, warning: str, flag: str) -> _Outcome:
        self.balances.release(order.order_id, {receipt.payee: receipt.net, order.customer: receipt.refund_to_customer})
        order.escrow -= receipt.gross
        setattr(order, flag, True)
        self.receipts.append(receipt)
        events: tuple[EventRecord, ...] = ()
        if receipt.violated:
            settlement.apply_reputation_penalty(self.registry, receipt.payee, self.params.reputation_decrement)
            events = (EventRecord("warning", order.order_id, None, warning),)
        return receipt, receipt.as_dict(), events

    # --- inspection -------------------------------------------------------------

    def state(self) -> dict[str, Any]:
        """Canonical snapshot of all contract state (ledger represented by its head)."""
        return {
            "owner": self.owner,
            "params": self.params.as_dict(),
            "actors": [
                {
                    "address": r.address,
                    "kind": r.kind.value,
                    "id": r.id,
                    "reputation": r.reputation,
                    "menu": [item.as_dict() for item in r.menu],
                    "active_order_count": r.active_order_count,
                }
                for r in self.registry
            ],
            "balances": {a: b for a, b in sorted(self.balances.balances.items()) if b},
            "escrows": [[k, v] for k, v in sorted(self.balances.escrows.items())],
            "orders": [self.orders[k].as_dict() for k in sorted(self.orders)],
            "receipts": [r.as_dict() for r in self.receipts],
            "gas": self.gas.report(),
            "chain_length": len(self.ledger),
            "head_hash": self.ledger.head_hash,
        }

    def state_digest(self) -> bytes:
        return digest(self.state())

    @classmethod
    def replay_ledger(cls, ledger: Ledger) -> "DeliveryContract":
        """Re-execute every transaction of ``ledger`` on a fresh contract.

        Raises ``ValueError`` if the re-executed chain diverges from the
        recorded one at any block.
        """
        genesis = ledger[0]
        deploy = genesis.transactions[0]
        if deploy.operation != "deploy" or len(genesis.transactions) != 1:
            raise ValueError("block 0 is not a deploy block")
        params = decode(deploy.input)
        if not isinstance(params, dict):
            raise ValueError("deploy input is not a parameter map")
        try:
            contract = cls(deploy.caller, ContractParams(**params), genesis.timestamp)
        except TypeError as exc:
            raise ValueError(f"bad deploy parameters: {exc}") from exc
        if contract.ledger.head_hash != genesis.block_hash:
            raise ValueError("genesis block does not match its parameters")
        for block in ledger.blocks[1:]:
            if len(block.transactions) != 1:
                raise ValueError(f"block {block.index} does not hold exactly one transaction")
            tx = block.transactions[0]
            args = decode(tx.input)
            if not isinstance(args, dict):
                raise ValueError(f"block {block.index}: input is not an argument map")
            try:
                contract.submit(tx.caller, tx.operation, args, block.timestamp)
            except TypeError as exc:
                raise ValueError(f"block {block.index}: bad arguments: {exc}") from exc
            if contract.ledger.head_hash != block.block_hash:
                raise ValueError(f"block {block.index} diverges on re-execution")
        return contract
