class CapExceededError(ValueError):
    """A construction would exceed its configured size cap."""


class InconsistentDataError(ValueError):
    """Sampled data cannot come from an operator with the declared Lipschitz constant."""


class NondeterminismError(RuntimeError):
    """An estimator issued different query sequences on indistinguishable oracles."""
