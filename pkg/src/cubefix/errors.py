"""Shared exception types."""


class InternalInvariantError(RuntimeError):
    """A property the algorithm guarantees failed to hold.

    Raised when something the correctness argument promises is observed to be
    false at runtime (halving failure, missing balanced point, solver failure
    on an instance whose transcript shows no contraction violation).  These
    are bugs or broken promises, never user errors; the CLI maps them to exit
    code 3.
    """


class InstanceTooLargeError(ValueError):
    """The initial candidate grid would exceed the configured cap."""

    def __init__(self, count: int, cap: int):
        super().__init__(
            f"candidate grid has {count} points, above the cap of {cap}; "
            f"raise the cap to run this instance")
        self.count = count
        self.cap = cap
