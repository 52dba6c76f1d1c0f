"""Exception hierarchy shared by every layer of the package."""


class CloudPlusError(Exception):
    """Base class for all errors raised by cloudplus."""


# group / backend
class UnknownBackend(CloudPlusError):
    pass


class BackendMismatch(CloudPlusError):
    pass


class EmptyAttribute(CloudPlusError):
    pass


# policy
class ParseError(CloudPlusError):
    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class Unsatisfiable(CloudPlusError):
    pass


# time
class LifetimeExceeded(CloudPlusError):
    pass


class DateBeforeGenesis(CloudPlusError):
    pass


# access denials; decrypt raises these in this precedence order
class AccessDenied(CloudPlusError):
    reason = "AccessDenied"


class KeyExpired(AccessDenied):
    reason = "KeyExpired"


class IdentityRevoked(AccessDenied):
    reason = "IdentityRevoked"


class AttributeSetUnsatisfying(AccessDenied):
    reason = "AttributeSetUnsatisfying"


class IntegrityFailure(CloudPlusError):
    pass


# scheme
class EmptyAttributeSet(CloudPlusError):
    pass


class DuplicateTag(CloudPlusError):
    pass


class UnknownWellFormedKey(CloudPlusError):
    pass


class StaleRevocationList(CloudPlusError):
    pass


# serialization
class FormatError(CloudPlusError):
    pass


class InvariantViolation(FormatError):
    pass


# services
class StoreExists(CloudPlusError):
    pass


class NotFound(CloudPlusError):
    pass


class UnknownIdentity(CloudPlusError):
    pass


class DuplicateIdentity(CloudPlusError):
    pass


class EvenPanel(CloudPlusError):
    pass
