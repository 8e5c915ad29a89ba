from __future__ import annotations

import pytest

from delivchain.contract import ContractParams, DeliveryContract
from delivchain.registry import MenuItem

OWNER = "00" * 19 + "ff"


def addr(n: int) -> str:
    return f"{n:040x}"


CUSTOMER, CUSTOMER2, BROKE = addr(0xC1), addr(0xC2), addr(0xC0)
RESTAURANT, RESTAURANT2 = addr(0xA1), addr(0xA2)
RIDER, RIDER2, RIDER3 = addr(0xD1), addr(0xD2), addr(0xD3)
STRANGER = addr(0xEE)

MENU = [MenuItem(1, 100, 10), MenuItem(2, 50, 5)]
MENU2 = [MenuItem(1, 99, 3), MenuItem(7, 10, 1)]


def build_world(params: ContractParams | None = None, balance: int = 10_000) -> DeliveryContract:
    contract = DeliveryContract(OWNER, params)
    for customer in (CUSTOMER, CUSTOMER2):
        contract.fund(customer, balance, 0)
        contract.register_customer(customer, 0)
    contract.register_customer(BROKE, 0)
    contract.register_restaurant(RESTAURANT, MENU, 0)
    contract.register_restaurant(RESTAURANT2, MENU2, 0)
    for rider in (RIDER, RIDER2, RIDER3):
        contract.register_deliveryman(rider, 0)
    return contract


@pytest.fixture
def world() -> DeliveryContract:
    return build_world()


def drive(contract: DeliveryContract, order_id: int, *, start: int = 0, making: int | None = None,
          travel: int = 2, rider: str = RIDER, restaurant: str = RESTAURANT, customer: str = CUSTOMER):
    """Walk one placed order through the remaining eight operations."""
    order = contract.orders[order_id]
    contract.accept_order(restaurant, order_id, start)
    contract.accept_package(rider, order_id, start)
    contract.food_making(restaurant, order_id, start)
    handover = start + (order.promised_making_time if making is None else making)
    contract.collect_food(rider, order_id, handover)
    food = contract.food_fee_collecting(restaurant, order_id, handover)
    contract.deliver_food(rider, order_id, handover + travel)
    contract.food_arrival(customer, order_id, handover + travel)
    delivery = contract.collect_delivery_fee(rider, order_id, handover + travel)
    return food, delivery


# --- acceptance summary ---------------------------------------------------------

_acceptance: dict[int, list[tuple[str, str]]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _acceptance.setdefault(marker.args[0], []).append((item.name, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        results = _acceptance[number]
        ok = all(outcome == "passed" for _, outcome in results)
        failed = [name for name, outcome in results if outcome != "passed"]
        detail = f"{len(results)} tests" + (f"; failed: {', '.join(failed)}" if failed else "")
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  ({detail})")
