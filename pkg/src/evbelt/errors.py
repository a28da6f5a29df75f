"""Exception hierarchy shared by all pipeline stages."""


class EvbeltError(Exception):
    """Base class for all errors raised by this package."""


class DataError(EvbeltError):
    """Invalid input data: malformed files, out-of-bounds values, bad shapes.

    CLI maps this to exit code 2.
    """
