"""Exception types shared across the library."""


class GraphOodError(Exception):
    """Base class for every error raised by this package."""


class InsufficientNodes(GraphOodError):
    """Raised when a split cannot be built with the requested counts."""

    def __init__(self, id_available, ood_available, id_needed, ood_needed):
        self.id_available = id_available
        self.ood_available = ood_available
        self.id_needed = id_needed
        self.ood_needed = ood_needed
        super().__init__(
            f"need {id_needed} ID and {ood_needed} OOD nodes, "
            f"have {id_available} ID and {ood_available} OOD"
        )


class UnknownDataset(GraphOodError):
    pass


class ShapeMismatch(GraphOodError):
    pass


class EmptyTrainingSet(GraphOodError):
    pass


class NonFiniteLoss(GraphOodError):
    def __init__(self, epoch):
        self.epoch = epoch
        super().__init__(f"loss or weights became non-finite at epoch {epoch}")


class MissingText(GraphOodError):
    def __init__(self, node_ids):
        self.node_ids = tuple(node_ids)
        super().__init__(f"nodes without text: {list(self.node_ids)[:20]}")


class RemoteFailure(GraphOodError):
    def __init__(self, node_id, reason=""):
        self.node_id = node_id
        super().__init__(f"remote annotation failed for node {node_id}: {reason}")


class CacheMiss(GraphOodError):
    """No API key available and the response cache has no entry."""


class EmptySet(GraphOodError):
    pass


class UnknownModelPrice(GraphOodError):
    def __init__(self, model_name):
        self.model_name = model_name
        super().__init__(f"no price entry for model {model_name!r}")


class BudgetExhausted(GraphOodError):
    def __init__(self, kind, requested, remaining):
        self.kind = kind
        self.requested = requested
        self.remaining = remaining
        super().__init__(
            f"{kind} budget exhausted: requested {requested}, remaining {remaining}"
        )


class DegenerateLabels(GraphOodError):
    pass


class EmptyIdTestSet(GraphOodError):
    pass


class ConfigError(GraphOodError):
    def __init__(self, path, reason):
        self.path = path
        self.reason = reason
        super().__init__(f"{path}: {reason}")


class LeakageError(GraphOodError):
    """An annotation touched a validation or test node."""


class BundleFormatError(GraphOodError):
    pass
