class LatlabError(Exception):
    """Base class for errors raised by this package."""


class CapExceededError(LatlabError):
    """A size cap (field order, head order, point count) would be exceeded."""


class NotALatticeError(LatlabError):
    """The covolume series diverges, so the subgroup is not a lattice."""


class EstimateInapplicableError(LatlabError, ValueError):
    """The tail estimate log(q/(q-1)) < 2/q needs every q > 4."""


class InvariantError(LatlabError):
    """An internal consistency check failed; this indicates a bug."""
