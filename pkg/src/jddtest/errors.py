"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid caller input: bad dimensions, parameters out of range, malformed data."""


class IdxFormatError(InputError):
    """An IDX file is malformed: wrong magic, truncated payload, or inconsistent counts."""


class BoundViolationError(RuntimeError):
    """An internal mathematical bound was violated.

    Kernel values and derived quantities are asserted against their bounds
    rather than clamped, so a violation here means a library bug (or data fed
    to a kernel whose declared bound it does not satisfy) and is surfaced
    loudly instead of being masked.
    """
