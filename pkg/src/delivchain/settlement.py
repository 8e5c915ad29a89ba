"""Escrowed payouts, time-violation penalties, gas metering and reputation."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import asdict, dataclass
from typing import Mapping, Optional

from .errors import InsufficientFunds, UnknownActor, UnknownOperation
from .registry import ActorKind, Registry

FOOD_PENALTY_PCT = 10
DELIVERY_PENALTY_PCT = 5
REPUTATION_DECREMENT = 1


@dataclass(frozen=True)
class GasCost:
    transaction: int
    execution: int


# Measured per-call costs, keyed by engine operation name. Registration is
# priced separately for each actor kind.
TABLE2_GAS: dict[str, GasCost] = {
    "register_restaurant": GasCost(385_355, 385_355),
    "register_customer": GasCost(93_566, 93_566),
    "register_deliveryman": GasCost(140_108, 140_108),
    "place_order": GasCost(223_985, 223_985),
    "accept_order": GasCost(51_981, 51_981),
    "accept_package": GasCost(75_571, 75_571),
    "food_making": GasCost(55_157, 55_157),
    "collect_food": GasCost(57_026, 57_026),
    "food_fee_collecting": GasCost(57_133, 57_133),
    "deliver_food": GasCost(28_677, 28_677),
    "food_arrival": GasCost(77_356, 77_356),
    "collect_delivery_fee": GasCost(33_344, 33_344),
}


class GasSchedule:
    """Operation name -> (transaction_cost, execution_cost)."""

    def __init__(self, overrides: Optional[Mapping[str, int | GasCost]] = None) -> None:
        self._costs = dict(TABLE2_GAS)
        for name, cost in (overrides or {}).items():
            if name not in self._costs:
                raise UnknownOperation(f"no gas entry for {name!r}")
            if isinstance(cost, int):
                cost = GasCost(cost, cost)
            if cost.transaction < 0 or cost.execution < 0:
                raise ValueError(f"negative gas cost for {name!r}")
            self._costs[name] = cost

    def __contains__(self, operation: str) -> bool:
        return operation in self._costs

    def __getitem__(self, operation: str) -> GasCost:
        try:
            return self._costs[operation]
        except KeyError:
            raise UnknownOperation(f"no gas entry for {operation!r}") from None

    def items(self):
        return self._costs.items()

    def transaction_costs(self) -> dict[str, int]:
        return {name: cost.transaction for name, cost in self._costs.items()}


class GasMeter:
    """Accumulates transaction gas per caller and per operation. Gas is never debited."""

    def __init__(self, schedule: Optional[GasSchedule] = None) -> None:
        self.schedule = schedule or GasSchedule()
        self.per_actor: dict[str, int] = defaultdict(int)
        self.per_operation: dict[str, int] = defaultdict(int)
        self.total = 0

    def cost(self, operation: str) -> int:
        return self.schedule[operation].transaction

    def charge_gas(self, caller: str, operation: str) -> int:
        amount = self.cost(operation)
        self.per_actor[caller] += amount
        self.per_operation[operation] += amount
        self.total += amount
        return amount

    def report(self) -> dict:
        return {
            "per_actor": dict(sorted(self.per_actor.items())),
            "per_operation": dict(self.per_operation),
            "total": self.total,
        }


class BalanceSheet:
    """Actor balances plus per-order escrow held by the contract."""

    def __init__(self) -> None:
        self.balances: dict[str, int] = defaultdict(int)
        self.escrows: dict[int, int] = {}

    def balance(self, address: str) -> int:
        return self.balances.get(address, 0)

    def escrow(self, order_id: int) -> int:
        return self.escrows.get(order_id, 0)

    def total(self) -> int:
        return sum(self.balances.values()) + sum(self.escrows.values())

    def fund(self, address: str, amount: int) -> None:
        if amount < 0:
            raise ValueError("funding amount must be non-negative")
        self.balances[address] += amount

    def lock(self, address: str, order_id: int, amount: int) -> None:
        if self.balance(address) < amount:
            raise InsufficientFunds(f"{address} holds {self.balance(address)}, needs {amount}")
        self.balances[address] -= amount
        self.escrows[order_id] = self.escrow(order_id) + amount

    def release(self, order_id: int, payouts: Mapping[str, int]) -> None:
        needed = sum(payouts.values())
        if needed > self.escrow(order_id):
            raise InsufficientFunds(f"escrow of order {order_id} cannot cover {needed}")
        for address, amount in payouts.items():
            self.balances[address] += amount
        remaining = self.escrow(order_id) - needed
        if remaining:
            self.escrows[order_id] = remaining
        else:
            self.escrows.pop(order_id, None)


@dataclass(frozen=True)
class SettlementReceipt:
    order_id: int
    payee: str
    role: str
    gross: int
    penalty_pct: int
    penalty_amount: int
    net: int
    refund_to_customer: int
    violated: bool

    def as_dict(self) -> dict:
        return asdict(self)


def penalty(gross: int, pct: int) -> int:
    return gross * pct // 100


def settle(order_id: int, payee: str, role: ActorKind, gross: int, violated: bool, pct: int) -> SettlementReceipt:
    """Build the payout receipt; the deduction is refunded to the customer."""
    applied = pct if violated else 0
    amount = penalty(gross, applied)
    return SettlementReceipt(
        order_id=order_id,
        payee=payee,
        role=role.value,
        gross=gross,
        penalty_pct=applied,
        penalty_amount=amount,
        net=gross - amount,
        refund_to_customer=amount,
        violated=violated,
    )


def making_violated(making_start: int, handover: int, promised_making_time: int) -> bool:
    return handover - making_start > promised_making_time


def delivery_violated(delivery_start: int, arrival: int, promised_delivery_time: int) -> bool:
    return arrival - delivery_start > promised_delivery_time


def food_warning(pct: int) -> str:
    return f"Late in food making, you will be deducted {pct}% from food fees"


def delivery_warning(pct: int) -> str:
    return f"Late in food delivery, you will be deducted {pct}% from food delivery fees"


def apply_reputation_penalty(registry: Registry, address: str, decrement: int = REPUTATION_DECREMENT) -> int:
    record = registry.get(address)
    if record is None:
        raise UnknownActor(f"{address} is not registered")
    record.reputation = max(0, record.reputation - decrement)
    return record.reputation
