"""Exception types shared across the package."""


class PreconditionError(ValueError):
    """An operation was called with input outside its declared domain."""


class SearchCapExceeded(RuntimeError):
    """A bounded search ran out of steps before finding what it looked for.

    Carries enough context to report the cap-limited outcome instead of
    treating it as a genuine divergence.
    """

    def __init__(self, message, *, cap, context=None):
        super().__init__(message)
        self.cap = cap
        self.context = dict(context or {})
