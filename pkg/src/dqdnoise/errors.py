"""Exception types shared across the package."""


class ParameterError(ValueError):
    """Invalid model parameter, config key or CLI argument."""


class DegenerateSteadyStateError(RuntimeError):
    """The Liouvillian kernel is not one-dimensional.

    Carries the two smallest singular values so callers can see how
    degenerate the kernel actually is.
    """

    def __init__(self, smallest, second_smallest, largest):
        self.smallest = smallest
        self.second_smallest = second_smallest
        self.largest = largest
        super().__init__(
            "steady state is not unique: two smallest singular values "
            f"{smallest:.3e}, {second_smallest:.3e} (largest {largest:.3e})"
        )


class NumericalError(RuntimeError):
    """A numerical routine failed to reach its accuracy contract."""
