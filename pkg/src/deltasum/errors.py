"""Exception hierarchy shared by the engine, workload and CLI layers."""


class DeltaSumError(Exception):
    """Base class for every error raised by this package."""


class CapacityExceeded(DeltaSumError):
    pass


class OutOfOrderInsert(DeltaSumError):
    """A delta insert would lower a class's running total.

    Raised only while monotonic enforcement is on; with it off the same
    insert is accepted and the class falls back to last-write semantics.
    """

    def __init__(self, cls: str, attempted: int, current: int):
        self.cls = cls
        self.attempted = attempted
        self.current = current
        super().__init__(
            f"class {cls!r}: value {attempted} is below the current latest {current}"
        )


class NegativeDecodedValue(DeltaSumError):
    def __init__(self, pk: int, value: int):
        self.pk = pk
        self.value = value
        super().__init__(f"prefix sum at pk={pk} decodes to {value} < 0")


class InvalidSpec(DeltaSumError, ValueError):
    pass


class InvalidPredicate(DeltaSumError, ValueError):
    pass


class FormatError(DeltaSumError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)


class ModeMismatch(DeltaSumError):
    def __init__(self, expected, actual):
        self.expected = expected
        self.actual = actual
        super().__init__(f"expected a relation in {expected} mode, got {actual}")


class EmptyInput(DeltaSumError, ValueError):
    pass


class ZeroRows(DeltaSumError, ValueError):
    pass


class InvalidIdentifier(DeltaSumError, ValueError):
    pass
