"""Exception types shared across the package."""


class ZkowfError(Exception):
    """Base class for every error raised deliberately by this package."""


class BudgetError(ZkowfError):
    """An exact computation would exceed its enumeration budget."""


class GridError(ZkowfError):
    """A value is not representable on its declared dyadic or q-ary grid."""


class ScheduleError(ZkowfError):
    """A message or prefix does not fit the protocol's round schedule."""


class EncodingMismatch(ZkowfError):
    """Two distributions are over incompatible outcome encodings."""


class RelationError(ZkowfError):
    """A witness does not satisfy the instance relation."""


class DomainError(ZkowfError):
    """A map or candidate was used outside of its declared domain."""


class DepthError(ZkowfError):
    """An oracle stack has the wrong depth for the requested level."""


class ContractViolation(ZkowfError):
    """A caller-supplied procedure broke its documented contract."""


class InvariantViolation(ZkowfError):
    """An internal invariant failed; this indicates a bug, not bad input."""


class ParseError(ZkowfError):
    """Malformed input file. Carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)
