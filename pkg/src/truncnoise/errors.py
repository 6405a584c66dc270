class InvalidArgument(ValueError):
    pass


class SchemaError(ValueError):
    """A noise, pair or config file does not match its schema."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class ResourceLimitError(RuntimeError):
    pass


class BracketError(RuntimeError):
    """Bisection could not bracket a root inside the searched interval."""

    def __init__(self, lo, hi, message="no sign change"):
        super().__init__(f"{message} in [{lo:.6g}, {hi:.6g}]")
        self.interval = (lo, hi)


class TrainingError(RuntimeError):
    """Non-finite loss or parameters during training."""

    def __init__(self, epoch, message, snapshot=None):
        super().__init__(f"epoch {epoch}: {message}")
        self.epoch = epoch
        self.snapshot = snapshot
