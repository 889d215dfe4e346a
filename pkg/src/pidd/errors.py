"""Error types shared across the package and mapped to CLI exit codes."""


class UsageError(Exception):
    """Bad command line: unknown flags, missing or contradictory arguments."""


class DataError(Exception):
    """Unreadable or inconsistent data: files, headers, shapes, or an
    output directory that already has content."""


class NumericalError(Exception):
    """Computation failed numerically: NaN loss, no SVD convergence."""
