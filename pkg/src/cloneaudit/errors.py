"""Exception hierarchy; the CLI maps these onto exit codes."""


class CloneAuditError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(CloneAuditError):
    """Bad inputs or configuration: wrong corpus pairing, invalid record,
    missing root directory. CLI exit code 3."""


class PhaseError(CloneAuditError):
    """A pipeline phase failed mid-flight. CLI exit code 2."""


class DumpTruncatedError(PhaseError):
    """The posts dump ended inside a row element. Everything before the
    truncation point has already been yielded."""


class AmbiguousOriginError(ValidationError):
    """Two or more latest-version files match an origin equally well."""

    def __init__(self, origin_path: str, candidates: list[str]):
        self.origin_path = origin_path
        self.candidates = sorted(candidates)
        listing = ", ".join(self.candidates)
        super().__init__(
            f"ambiguous latest-version match for {origin_path}: {listing}"
        )
