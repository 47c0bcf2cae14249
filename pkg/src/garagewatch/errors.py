"""Exception hierarchy shared by every garagewatch module."""


class GarageWatchError(Exception):
    """Base class; the CLI maps these to exit status 1."""


class DimensionError(GarageWatchError, ValueError):
    pass


class SingularMatrixError(GarageWatchError, ArithmeticError):
    pass


class ZeroDiagonalError(GarageWatchError, ArithmeticError):
    pass


class ConfigurationError(GarageWatchError, ValueError):
    pass


class InputError(GarageWatchError, ValueError):
    """Malformed or non-finite input data."""


class IdentityError(GarageWatchError, ValueError):
    """A reading was paired with the wrong beacon."""


class DegenerateGeometryError(GarageWatchError, ValueError):
    pass


class RegistryParseError(GarageWatchError, ValueError):
    def __init__(self, line, message):
        super().__init__(f"line {line}: {message}")
        self.line = line


class IntegrityError(GarageWatchError, ValueError):
    def __init__(self, field, value):
        super().__init__(f"duplicate {field} {value!r}")
        self.field = field
        self.value = value


class LookupTimeoutError(GarageWatchError, TimeoutError):
    pass


class ProtocolError(GarageWatchError):
    """The owner-lookup backend answered with something unparseable."""


class FrameError(GarageWatchError, ValueError):
    pass


class MapError(GarageWatchError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "map error"


class ScenarioError(GarageWatchError, ValueError):
    pass
