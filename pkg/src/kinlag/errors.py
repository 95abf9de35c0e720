"""Exception types.

Two families, matching the CLI exit codes: :class:`ValidationError` (bad input,
exit 2) and :class:`NumericalError` (a computation could not be completed,
exit 3).  Messages start with a short keyword (``"width: ..."``,
``"cfl: ..."``) so callers and tests can match on it.
"""


class KinlagError(Exception):
    exit_code = 1

    def __init__(self, keyword, detail=""):
        self.keyword = keyword
        msg = keyword if not detail else f"{keyword}: {detail}"
        super().__init__(msg)


class ValidationError(KinlagError, ValueError):
    exit_code = 2


class NumericalError(KinlagError, RuntimeError):
    exit_code = 3
