"""Exception hierarchy shared across the engine."""


class DelivchainError(Exception):
    """Base class for every error raised by the engine."""


# ledger
class LedgerError(DelivchainError):
    pass


class TimestampRegression(LedgerError):
    pass


class EmptyBlock(LedgerError):
    pass


class EmptyList(LedgerError, ValueError):
    pass


class InvalidTransaction(LedgerError):
    pass


class MalformedBlock(LedgerError):
    def __init__(self, index: int, reason: str):
        super().__init__(f"block {index}: {reason}")
        self.index = index
        self.reason = reason


class EncodingError(DelivchainError, ValueError):
    pass


# registry
class RegistryError(DelivchainError):
    pass


class DuplicateAddress(RegistryError):
    pass


class EmptyMenu(RegistryError):
    pass


class DuplicateFoodId(RegistryError):
    pass


class InvalidPrepTime(RegistryError):
    pass


class InvalidMenuItem(RegistryError):
    pass


class UnknownRestaurant(RegistryError):
    pass


class UnknownActor(RegistryError):
    pass


class InvalidAddress(RegistryError, ValueError):
    pass


# order lifecycle
class ContractError(DelivchainError):
    pass


class Unauthorized(ContractError):
    pass


class UnknownCustomer(ContractError):
    pass


class UnknownDeliveryman(ContractError):
    pass


class UnknownOrder(ContractError):
    pass


class FoodUnavailable(ContractError):
    pass


class InsufficientFunds(ContractError):
    pass


class InvalidArgument(ContractError, ValueError):
    pass


class WrongStatus(ContractError):
    pass


class NotOrderOwner(ContractError):
    pass


class NotAssignedDeliveryman(ContractError):
    pass


class NotYetDelivered(ContractError):
    pass


class RestaurantAtCapacity(ContractError):
    pass


class DeliverymanAtCapacity(ContractError):
    pass


class AlreadyCollected(ContractError):
    pass


# settlement
class UnknownOperation(DelivchainError):
    pass


# simulator
class InvalidConfig(DelivchainError, ValueError):
    pass


class CorruptDump(DelivchainError):
    pass
