"""Deterministic discrete-event driver for the delivery contract.

Time advances in integer ticks. Within a tick the simulator runs passes:
each pass asks every actor (customers, then restaurants, then deliverymen,
ids ascending) for the operations it wants to submit given the state at the
start of the pass, then submits them in that order. Passes repeat until one
yields no new intents. A rejected intent is recorded and not retried within
the same tick.
"""
from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterator, Optional, Union

import jsonschema

from .contract import ContractParams, DeliveryContract, OrderStatus
from .encoding import digest
from .errors import CorruptDump, DelivchainError, InvalidConfig, LedgerError
from .ledger import load_dump, verify_blocks
from .registry import ActorKind, MenuItem

# --- behaviour policies ------------------------------------------------------


@dataclass(frozen=True)
class Honest:
    kind: str = field(default="honest", init=False)


@dataclass(frozen=True)
class TardyCook:
    extra_ticks: int
    kind: str = field(default="tardy_cook", init=False)


@dataclass(frozen=True)
class TardyRider:
    extra_ticks: int
    kind: str = field(default="tardy_rider", init=False)


@dataclass(frozen=True)
class Greedy:
    batch_size: int
    kind: str = field(default="greedy", init=False)


BehaviorPolicy = Union[Honest, TardyCook, TardyRider, Greedy]

_POLICY_KINDS = {
    ActorKind.CUSTOMER: (Honest,),
    ActorKind.RESTAURANT: (Honest, TardyCook),
    ActorKind.DELIVERYMAN: (Honest, TardyRider, Greedy),
}


def policy_from_dict(raw: dict) -> BehaviorPolicy:
    kind = raw.get("kind", "honest")
    if kind == "honest":
        return Honest()
    if kind == "tardy_cook":
        return TardyCook(int(raw["extra_ticks"]))
    if kind == "tardy_rider":
        return TardyRider(int(raw["extra_ticks"]))
    if kind == "greedy":
        return Greedy(int(raw["batch_size"]))
    raise InvalidConfig(f"unknown policy kind {kind!r}")


def policy_to_dict(policy: BehaviorPolicy) -> dict:
    return {"kind": policy.kind, **{k: v for k, v in asdict(policy).items() if k != "kind"}}


# --- configuration -----------------------------------------------------------


@dataclass(frozen=True)
class PopulationSpec:
    count: int
    balance: int = 0
    policy: BehaviorPolicy = Honest()
    menu: tuple[MenuItem, ...] = ()
    travel_time: int = 1


@dataclass(frozen=True)
class PlannedOrder:
    tick: int
    customer: int
    restaurant: int
    items: tuple[int, ...]
    delivery_fee: int
    promised_delivery_time: int
    loc_x: int = 0
    loc_y: int = 0


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int
    customers: tuple[PopulationSpec, ...]
    restaurants: tuple[PopulationSpec, ...]
    deliverymen: tuple[PopulationSpec, ...]
    orders: tuple[PlannedOrder, ...]
    params: ContractParams = ContractParams()
    max_ticks: int = 100_000
    name: str = ""

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        try:
            jsonschema.validate(raw, scenario_schema())
        except jsonschema.ValidationError as exc:
            raise InvalidConfig(f"scenario does not match schema: {exc.message}") from exc

        def population(items: list, kind: ActorKind) -> tuple[PopulationSpec, ...]:
            specs = []
            for item in items:
                menu = tuple(MenuItem(m["food_id"], m["price"], m["prep_time"]) for m in item.get("menu", []))
                specs.append(PopulationSpec(
                    count=item["count"],
                    balance=item.get("balance", 0),
                    policy=policy_from_dict(item.get("policy", {})),
                    menu=menu,
                    travel_time=item.get("travel_time", 1),
                ))
            return tuple(specs)

        caps = raw.get("caps", {})
        pcts = raw.get("penalty_pcts", {})
        reputation = raw.get("reputation", {})
        params = ContractParams(
            restaurant_cap=caps.get("restaurant", 5),
            deliveryman_cap=caps.get("deliveryman", 3),
            food_penalty_pct=pcts.get("food", 10),
            delivery_penalty_pct=pcts.get("delivery", 5),
            initial_reputation=reputation.get("initial", 100),
            reputation_decrement=reputation.get("decrement", 1),
            gas_overrides=dict(raw.get("gas_overrides", {})),
        )
        orders = tuple(
            PlannedOrder(
                tick=o["tick"],
                customer=o["customer"],
                restaurant=o["restaurant"],
                items=tuple(o["items"]),
                delivery_fee=o["delivery_fee"],
                promised_delivery_time=o["promised_delivery_time"],
                loc_x=o.get("loc_x", 0),
                loc_y=o.get("loc_y", 0),
            )
            for o in raw.get("orders", [])
        )
        config = cls(
            seed=raw["seed"],
            customers=population(raw.get("customers", []), ActorKind.CUSTOMER),
            restaurants=population(raw.get("restaurants", []), ActorKind.RESTAURANT),
            deliverymen=population(raw.get("deliverymen", []), ActorKind.DELIVERYMAN),
            orders=orders,
            params=params,
            max_ticks=raw.get("max_ticks", 100_000),
            name=raw.get("name", ""),
        )
        config.validate()
        return config

    def to_dict(self) -> dict:
        def population(specs: tuple[PopulationSpec, ...], kind: ActorKind) -> list:
            out = []
            for spec in specs:
                item: dict[str, Any] = {"count": spec.count, "balance": spec.balance,
                                        "policy": policy_to_dict(spec.policy)}
                if kind is ActorKind.RESTAURANT:
                    item["menu"] = [m.as_dict() for m in spec.menu]
                if kind is ActorKind.DELIVERYMAN:
                    item["travel_time"] = spec.travel_time
                out.append(item)
            return out

        p = self.params
        return {
            "name": self.name,
            "seed": self.seed,
            "customers": population(self.customers, ActorKind.CUSTOMER),
            "restaurants": population(self.restaurants, ActorKind.RESTAURANT),
            "deliverymen": population(self.deliverymen, ActorKind.DELIVERYMAN),
            "orders": [
                {**asdict(o), "items": list(o.items)} for o in self.orders
            ],
            "caps": {"restaurant": p.restaurant_cap, "deliveryman": p.deliveryman_cap},
            "penalty_pcts": {"food": p.food_penalty_pct, "delivery": p.delivery_penalty_pct},
            "reputation": {"initial": p.initial_reputation, "decrement": p.reputation_decrement},
            "gas_overrides": dict(p.gas_overrides),
            "max_ticks": self.max_ticks,
        }

    def population_of(self, kind: ActorKind) -> tuple[PopulationSpec, ...]:
        return {
            ActorKind.CUSTOMER: self.customers,
            ActorKind.RESTAURANT: self.restaurants,
            ActorKind.DELIVERYMAN: self.deliverymen,
        }[kind]

    def count(self, kind: ActorKind) -> int:
        return sum(spec.count for spec in self.population_of(kind))

    def validate(self) -> None:
        """Semantic checks the schema cannot express."""
        for kind in ActorKind:
            for spec in self.population_of(kind):
                if not isinstance(spec.policy, _POLICY_KINDS[kind]):
                    raise InvalidConfig(f"policy {spec.policy.kind!r} does not apply to {kind.value}")
                if (kind is ActorKind.RESTAURANT) != bool(spec.menu):
                    raise InvalidConfig("restaurant populations need a menu; other actors take none")
                if isinstance(spec.policy, Greedy) and spec.policy.batch_size < 1:
                    raise InvalidConfig("greedy batch_size must be >= 1")
        previous = 0
        for n, order in enumerate(self.orders):
            if order.tick < previous:
                raise InvalidConfig(f"order plan entry {n} is out of tick order")
            previous = order.tick
            if not 1 <= order.customer <= self.count(ActorKind.CUSTOMER):
                raise InvalidConfig(f"order plan entry {n} names unknown customer {order.customer}")
            if not 1 <= order.restaurant <= self.count(ActorKind.RESTAURANT):
                raise InvalidConfig(f"order plan entry {n} names unknown restaurant {order.restaurant}")


def scenario_schema() -> dict:
    return json.loads(resources.files("delivchain").joinpath("scenarios/scenario.schema.json").read_text())


CANONICAL_SCENARIOS = ("happy_path", "tardy_cook", "tardy_rider", "greedy_rider")


def canonical_scenario(name: str) -> ScenarioConfig:
    path = resources.files("delivchain").joinpath(f"scenarios/{name}.json")
    return ScenarioConfig.from_dict(json.loads(path.read_text()))


def load_config(path: Union[str, Path]) -> ScenarioConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"{path}: not JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise InvalidConfig(f"{path}: top level must be an object")
    return ScenarioConfig.from_dict(raw)


def actor_address(seed: int, kind: str, actor_id: int) -> str:
    return digest(["delivchain-actor", seed, kind, actor_id])[:20].hex()


# --- simulation state ----------------------------------------------------------


@dataclass
class Agent:
    kind: ActorKind
    id: int
    address: str
    policy: BehaviorPolicy
    travel_time: int = 1
    # deliverymen only: order_id -> tick at which deliver_food is due
    deliver_at: dict[int, int] = field(default_factory=dict)


@dataclass
class Rejection:
    tick: int
    actor: str
    operation: str
    order_id: Optional[int]
    error: str


Intent = tuple[Agent, str, dict]


class Simulation:
    """Mutable run state: the contract plus the simulator's own bookkeeping."""

    def __init__(self, config: ScenarioConfig) -> None:
        config.validate()
        self.config = config
        self.tick = -1
        self.owner = actor_address(config.seed, "Owner", 0)
        self.contract = DeliveryContract(self.owner, config.params, now=0)
        self.agents: dict[ActorKind, list[Agent]] = {kind: [] for kind in ActorKind}
        self.by_address: dict[str, Agent] = {}
        self.plan_cursor = 0
        self.plan_outcomes: list[dict] = []
        self.ready_at: dict[int, int] = {}
        self.open_orders: set[int] = set()
        self.rejections: list[Rejection] = []
        self.stalled: list[int] = []
        self.finished = False
        self._setup()

    def _setup(self) -> None:
        for kind in ActorKind:
            for spec in self.config.population_of(kind):
                for _ in range(spec.count):
                    actor_id = len(self.agents[kind]) + 1
                    agent = Agent(kind, actor_id, actor_address(self.config.seed, kind.value, actor_id),
                                  spec.policy, spec.travel_time)
                    self.agents[kind].append(agent)
                    self.by_address[agent.address] = agent
                    if spec.balance:
                        self.contract.fund(agent.address, spec.balance, 0)
                    if kind is ActorKind.CUSTOMER:
                        self.contract.register_customer(agent.address, 0)
                    elif kind is ActorKind.RESTAURANT:
                        self.contract.register_restaurant(agent.address, spec.menu, 0)
                    else:
                        self.contract.register_deliveryman(agent.address, 0)

    def agent(self, kind: ActorKind, actor_id: int) -> Agent:
        return self.agents[kind][actor_id - 1]

    def all_agents(self) -> Iterator[Agent]:
        for kind in ActorKind:
            yield from self.agents[kind]

    # --- intents ---------------------------------------------------------------

    def _customer_intents(self, agent: Agent, tick: int) -> list[Intent]:
        intents: list[Intent] = []
        plan = self.config.orders
        cursor = self.plan_cursor
        while cursor < len(plan) and plan[cursor].tick <= tick:
            entry = plan[cursor]
            if entry.customer == agent.id and cursor not in self._submitted_plan:
                intents.append((agent, "place_order", {
                    "plan_index": cursor,
                    "restaurant_id": entry.restaurant,
                    "food_items": list(entry.items),
                    "delivery_fee": entry.delivery_fee,
                    "promised_delivery_time": entry.promised_delivery_time,
                    "loc_x": entry.loc_x,
                    "loc_y": entry.loc_y,
                }))
            cursor += 1
        for order_id in sorted(self.open_orders):
            order = self.contract.orders[order_id]
            if (order.customer == agent.address and order.status == OrderStatus.WITH_DELIVERYMAN
                    and order.delivered):
                intents.append((agent, "food_arrival", {"order_id": order_id}))
        return intents

    def _restaurant_intents(self, agent: Agent, tick: int) -> list[Intent]:
        record = self.contract.registry.get(agent.address)
        room = self.contract.params.restaurant_cap - record.active_order_count
        intents: list[Intent] = []
        for order_id in sorted(self.open_orders):
            order = self.contract.orders[order_id]
            if order.restaurant_id != agent.id:
                continue
            if order.status == OrderStatus.PLACED and room > 0:
                intents.append((agent, "accept_order", {"order_id": order_id}))
                room -= 1
            elif order.status == OrderStatus.DELIVERY_ASSIGNED:
                intents.append((agent, "food_making", {"order_id": order_id}))
            elif order.status >= OrderStatus.WITH_DELIVERYMAN and not order.food_fee_paid:
                intents.append((agent, "food_fee_collecting", {"order_id": order_id}))
        return intents

    def _deliveryman_intents(self, agent: Agent, tick: int, claimable: list[int]) -> list[Intent]:
        intents: list[Intent] = []
        held = []
        for order_id in sorted(self.open_orders):
            order = self.contract.orders[order_id]
            if order.deliveryman != agent.address:
                continue
            if order.status == OrderStatus.RECEIVED_BY_CUSTOMER:
                if not order.delivery_fee_paid:
                    intents.append((agent, "collect_delivery_fee", {"order_id": order_id}))
                continue
            if order.delivered:
                continue
            held.append(order_id)
            if order.status == OrderStatus.PREPARED and self.ready_at.get(order_id, tick + 1) <= tick:
                intents.append((agent, "collect_food", {"order_id": order_id}))
            elif order.status == OrderStatus.WITH_DELIVERYMAN and agent.deliver_at.get(order_id, tick + 1) <= tick:
                intents.append((agent, "deliver_food", {"order_id": order_id}))
        if not held:
            batch = agent.policy.batch_size if isinstance(agent.policy, Greedy) else 1
            for order_id in claimable[:batch]:
                intents.append((agent, "accept_package", {"order_id": order_id}))
        return intents

    def _intents(self, tick: int) -> list[Intent]:
        claimable = [
            order_id for order_id in sorted(self.open_orders)
            if self.contract.orders[order_id].status == OrderStatus.ACCEPTED_BY_RESTAURANT
        ]
        intents: list[Intent] = []
        for agent in self.agents[ActorKind.CUSTOMER]:
            intents += self._customer_intents(agent, tick)
        for agent in self.agents[ActorKind.RESTAURANT]:
            intents += self._restaurant_intents(agent, tick)
        for agent in self.agents[ActorKind.DELIVERYMAN]:
            intents += self._deliveryman_intents(agent, tick, claimable)
        return intents

    # --- reactions to accepted operations ----------------------------------------

    def _after(self, agent: Agent, operation: str, order_id: int, tick: int) -> None:
        order = self.contract.orders[order_id]
        if operation == "food_making":
            extra = agent.policy.extra_ticks if isinstance(agent.policy, TardyCook) else 0
            self.ready_at[order_id] = tick + order.promised_making_time + extra
        elif operation == "collect_food":
            self._schedule_route(agent, tick)
        elif operation == "deliver_food":
            agent.deliver_at.pop(order_id, None)
        elif order.settled:
            self.open_orders.discard(order_id)
            self.ready_at.pop(order_id, None)

    def _schedule_route(self, agent: Agent, tick: int) -> None:
        """Once every held parcel is collected, deliver them one leg at a time."""
        held = [
            order for order in (self.contract.orders[i] for i in sorted(self.open_orders))
            if order.deliveryman == agent.address and not order.delivered
        ]
        if any(order.status != OrderStatus.WITH_DELIVERYMAN for order in held):
            return
        extra = agent.policy.extra_ticks if isinstance(agent.policy, TardyRider) else 0
        due = tick
        for order in held:
            if order.order_id in agent.deliver_at:
                due = max(due, agent.deliver_at[order.order_id])
        for order in held:
            if order.order_id not in agent.deliver_at:
                due += agent.travel_time + extra
                agent.deliver_at[order.order_id] = due

    # --- stepping ------------------------------------------------------------------

    def _pending_timers(self, tick: int) -> bool:
        for order_id in self.open_orders:
            order = self.contract.orders[order_id]
            if order.status == OrderStatus.PREPARED and self.ready_at.get(order_id, -1) > tick:
                return True
        return any(due > tick for agent in self.agents[ActorKind.DELIVERYMAN] for due in agent.deliver_at.values())

    def step(self, tick: int) -> int:
        """Process one tick; returns the number of accepted operations."""
        if tick != self.tick + 1:
            raise ValueError(f"expected tick {self.tick + 1}, got {tick}")
        self.tick = tick
        self._submitted_plan: set[int] = set()
        rejected: set[tuple[str, str, Any]] = set()
        accepted = 0
        while True:
            intents = [
                i for i in self._intents(tick)
                if (i[0].address, i[1], i[2].get("plan_index", i[2].get("order_id"))) not in rejected
            ]
            if not intents:
                break
            for agent, operation, args in intents:
                accepted += self._submit(agent, operation, args, tick, rejected)
        while self.plan_cursor < len(self.config.orders) and self.config.orders[self.plan_cursor].tick <= tick:
            self.plan_cursor += 1
        return accepted

    def _submit(self, agent: Agent, operation: str, args: dict, tick: int, rejected: set) -> int:
        args = dict(args)
        plan_index = args.pop("plan_index", None)
        if plan_index is not None:
            self._submitted_plan.add(plan_index)
        try:
            result = self.contract.submit(agent.address, operation, args, tick)
        except DelivchainError as exc:
            order_id = args.get("order_id")
            rejected.add((agent.address, operation, plan_index if plan_index is not None else order_id))
            self.rejections.append(Rejection(tick, agent.address, operation, order_id, type(exc).__name__))
            if plan_index is not None:
                self.plan_outcomes.append({"plan_index": plan_index, "tick": tick, "order_id": None,
                                           "error": type(exc).__name__})
            return 0
        if operation == "place_order":
            self.open_orders.add(result.order_id)
            self.plan_outcomes.append({"plan_index": plan_index, "tick": tick, "order_id": result.order_id,
                                       "error": None})
        else:
            self._after(agent, operation, args["order_id"], tick)
        return 1

    @property
    def done(self) -> bool:
        return self.plan_cursor >= len(self.config.orders) and not self.open_orders

    def run(self) -> "RunReport":
        while not self.done:
            tick = self.tick + 1
            if tick > self.config.max_ticks:
                break
            accepted = self.step(tick)
            if (not accepted and self.plan_cursor >= len(self.config.orders)
                    and not self._pending_timers(tick)):
                break
        self.stalled = sorted(self.open_orders)
        self.finished = True
        return RunReport.from_simulation(self)


def run_step(state: Simulation, tick: int) -> Simulation:
    state.step(tick)
    return state


def run_scenario(config: ScenarioConfig) -> "RunReport":
    return Simulation(config).run()


# --- reporting --------------------------------------------------------------------


@dataclass
class RunReport:
    scenario: str
    seed: int
    head_hash: str
    chain_length: int
    final_tick: int
    completed: bool
    orders: list[dict]
    plan_outcomes: list[dict]
    receipts: list[dict]
    actors: list[dict]
    gas: dict
    violations: dict
    rejections: list[dict]
    stalled: list[int]
    total_funds: int

    @classmethod
    def from_simulation(cls, sim: Simulation) -> "RunReport":
        contract = sim.contract
        traces: dict[int, list[dict]] = {order_id: [] for order_id in contract.orders}
        for block in contract.ledger:
            for tx in block.transactions:
                for event in tx.events:
                    if event.order_id in traces:
                        traces[event.order_id].append({
                            "tick": block.timestamp,
                            "name": event.name,
                            "status": event.status,
                            "msg": event.msg,
                        })
        orders = [
            {
                "order_id": order.order_id,
                "order_hash": order.order_hash.hex(),
                "status": int(order.status),
                "food_cost": order.food_cost,
                "delivery_fee": order.delivery_fee,
                "food_fee_paid": order.food_fee_paid,
                "delivery_fee_paid": order.delivery_fee_paid,
                "events": traces[order.order_id],
            }
            for order in contract.orders.values()
        ]
        actors = []
        for agent in sim.all_agents():
            record = contract.registry.get(agent.address)
            actors.append({
                "kind": agent.kind.value,
                "id": agent.id,
                "address": agent.address,
                "policy": policy_to_dict(agent.policy),
                "balance": contract.balances.balance(agent.address),
                "reputation": record.reputation,
                "gas": contract.gas.per_actor.get(agent.address, 0),
            })
        receipts = [r.as_dict() for r in contract.receipts]
        return cls(
            scenario=sim.config.name,
            seed=sim.config.seed,
            head_hash=contract.ledger.head_hash.hex(),
            chain_length=len(contract.ledger),
            final_tick=max(sim.tick, 0),
            completed=sim.done,
            orders=orders,
            plan_outcomes=sorted(sim.plan_outcomes, key=lambda o: o["plan_index"]),
            receipts=receipts,
            actors=actors,
            gas=contract.gas.report(),
            violations={
                "food": sum(1 for r in receipts if r["violated"] and r["role"] == ActorKind.RESTAURANT.value),
                "delivery": sum(1 for r in receipts if r["violated"] and r["role"] == ActorKind.DELIVERYMAN.value),
            },
            rejections=[asdict(r) for r in sim.rejections],
            stalled=list(sim.stalled),
            total_funds=contract.balances.total(),
        )

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


# --- replay -------------------------------------------------------------------------


def replay(dump: str) -> DeliveryContract:
    """Rebuild the final contract state from an NDJSON ledger dump."""
    try:
        ledger = load_dump(dump)
    except (ValueError, LedgerError) as exc:
        raise CorruptDump(f"unreadable dump: {exc}") from exc
    report = verify_blocks(ledger.blocks)
    if not report.ok:
        raise CorruptDump(f"chain fails verification at block {report.first_failure}: {report.reason}")
    try:
        return DeliveryContract.replay_ledger(ledger)
    except (ValueError, DelivchainError) as exc:
        raise CorruptDump(str(exc)) from exc


# --- random scenarios -----------------------------------------------------------------


def random_scenario(seed: int, max_orders: int = 50) -> ScenarioConfig:
    """A random but valid scenario mixing every policy; used for stress runs."""
    rng = random.Random(seed)

    def menu() -> tuple[MenuItem, ...]:
        ids = rng.sample(range(1, 10), rng.randint(1, 4))
        return tuple(MenuItem(i, rng.randint(0, 300), rng.randint(1, 6)) for i in ids)

    customers = tuple(PopulationSpec(1, rng.choice([0, 400, 5_000, 50_000])) for _ in range(rng.randint(1, 4)))
    restaurants = tuple(
        PopulationSpec(1, rng.randint(0, 100), rng.choice([Honest(), TardyCook(rng.randint(0, 3))]), menu())
        for _ in range(rng.randint(1, 3))
    )
    deliverymen = tuple(
        PopulationSpec(
            1,
            rng.randint(0, 100),
            rng.choice([Honest(), TardyRider(rng.randint(0, 3)), Greedy(rng.randint(1, 4))]),
            travel_time=rng.randint(1, 3),
        )
        for _ in range(rng.randint(0, 4))
    )
    orders = []
    tick = 0
    for _ in range(rng.randint(0, max_orders)):
        tick += rng.choice([0, 0, 1, 2, 5])
        restaurant = rng.randint(1, len(restaurants))
        food_ids = [item.food_id for item in restaurants[restaurant - 1].menu]
        items = tuple(rng.choice(food_ids) for _ in range(rng.randint(1, 3)))
        if rng.random() < 0.05:
            items += (99,)  # never on a menu
        orders.append(PlannedOrder(tick, rng.randint(1, len(customers)), restaurant, items,
                                   rng.randint(0, 60), rng.randint(1, 6)))
    params = ContractParams(
        restaurant_cap=rng.randint(1, 5),
        deliveryman_cap=rng.randint(1, 4),
    )
    return ScenarioConfig(seed, customers, restaurants, deliverymen, tuple(orders), params,
                          name=f"random-{seed}")


# --- post-run audit ---------------------------------------------------------------------


def audit(sim: Simulation) -> list[str]:
    """Return every invariant breach found after a run (empty when healthy)."""
    contract = sim.contract
    problems = []
    report = contract.ledger.verify_chain()
    if not report.ok:
        problems.append(f"ledger fails at block {report.first_failure}: {report.reason}")
    funded = sum(spec.count * spec.balance for kind in ActorKind for spec in sim.config.population_of(kind))
    if contract.balances.total() != funded:
        problems.append(f"funds not conserved: {contract.balances.total()} != {funded}")
    paid: dict[int, int] = {}
    for receipt in contract.receipts:
        paid[receipt.order_id] = paid.get(receipt.order_id, 0) + receipt.net + receipt.refund_to_customer
    for order in contract.orders.values():
        if order.settled and paid.get(order.order_id) != order.food_cost + order.delivery_fee:
            problems.append(f"order {order.order_id}: payouts do not match the customer debit")
    warnings: dict[str, int] = {}
    for block in contract.ledger:
        for tx in block.transactions:
            warnings[tx.caller] = warnings.get(tx.caller, 0) + sum(e.name == "warning" for e in tx.events)
    params = contract.params
    for record in contract.registry:
        expected = max(0, params.initial_reputation - params.reputation_decrement * warnings.get(record.address, 0))
        if record.reputation != expected:
            problems.append(f"{record.address}: reputation {record.reputation} != {expected}")
    return problems
