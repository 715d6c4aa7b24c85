"""Exception types shared across the package."""


class DataFormatError(ValueError):
    """Raised when an input file is missing or malformed."""


class TrainingAbortedError(RuntimeError):
    """Raised when the objective becomes non-finite during training."""

    def __init__(self, iteration: int, learning_rate: float):
        self.iteration = iteration
        self.learning_rate = learning_rate
        super().__init__(
            f"objective became non-finite at iteration {iteration} "
            f"(learning_rate={learning_rate}); reduce the learning rate"
        )
