from enum import IntEnum


class ExitCode(IntEnum):
    """Process exit codes of the ``ambit-field`` command line."""

    OK = 0
    VERDICT_FAILURE = 1
    CONFIG_ERROR = 2
    NUMERICAL_ERROR = 3
