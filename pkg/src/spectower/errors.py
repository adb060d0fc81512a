"""Exception hierarchy shared by the whole package.

The CLI maps these onto its exit-code contract: ParseError -> 2,
InvariantError -> 3, PreconditionError -> 4.
"""


class SpectowerError(Exception):
    pass


class ParseError(SpectowerError):
    """Malformed input document (bad JSON, bad schema, unresolved ids)."""


class InvariantError(SpectowerError):
    """A mathematical invariant failed: d^2 != 0, a transport is not
    invertible, a relation word does not transport to the identity,
    a span containment was violated, or an internal cross-check
    disagreed (the latter always signals an engine bug)."""


class PreconditionError(SpectowerError):
    """An operation was called on data that violates its stated
    precondition (disconnected support, non-composable word, ...)."""
