"""Exception types shared across the library.

Split by failure domain so the CLI can map them onto exit codes:
data problems (malformed files, missing records) exit 2, backend
problems (LLM endpoint, trainer process) exit 3.
"""


class GnarchError(Exception):
    """Base class for library errors."""


class DataError(GnarchError):
    """Malformed or inconsistent input data (files, tables, vectors)."""


class FileFormatError(DataError):
    """A data file violates its format contract.

    Carries file path and, when known, the 1-based line number.
    """

    def __init__(self, path, message, line=None):
        self.path = str(path)
        self.line = line
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")


class RecordMissingError(DataError):
    """A (dataset, architecture) pair has no recorded performance."""

    def __init__(self, dataset, arch_key):
        self.dataset = dataset
        self.arch_key = arch_key
        super().__init__(f"no record for architecture {arch_key} on dataset {dataset!r}")


class LeakageGuardError(GnarchError):
    """An excluded dataset was about to be read without the simulation flag."""


class BackendError(GnarchError):
    """An external backend (LLM endpoint, trainer process) failed."""


class TrainerProtocolError(BackendError):
    """The external evaluator broke the line-delimited JSON contract."""
