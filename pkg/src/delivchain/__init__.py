"""Penalty-based food-delivery protocol engine on a hash-chained ledger."""
from .contract import ContractParams, DeliveryContract, Order, OrderStatus
from .ledger import Block, EventRecord, Ledger, Transaction, merkle_root
from .registry import ActorKind, MenuItem, Registry
from .settlement import GasSchedule, SettlementReceipt
from .simulator import ScenarioConfig, Simulation, replay, run_scenario, run_step

__all__ = [
    "ActorKind",
    "Block",
    "ContractParams",
    "DeliveryContract",
    "EventRecord",
    "GasSchedule",
    "Ledger",
    "MenuItem",
    "Order",
    "OrderStatus",
    "Registry",
    "ScenarioConfig",
    "SettlementReceipt",
    "Simulation",
    "Transaction",
    "merkle_root",
    "replay",
    "run_scenario",
    "run_step",
]
__version__ = "0.1.0"
