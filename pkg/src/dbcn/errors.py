"""Exception hierarchy shared by every dbcn module."""


class DBCNError(Exception):
    """Base class for all library errors."""


class SizeError(DBCNError):
    """A payload exceeds the configured maximum object size."""


class DecodeError(DBCNError):
    """A buffer is not a valid canonical encoding."""


class NameParseError(DBCNError, ValueError):
    pass


class ScriptRangeError(DBCNError):
    """An edit op addresses bytes or ids outside the previous version."""


class BodyError(DBCNError):
    """A catalog body is invalid for its variant."""


class UnsupportedSchemeError(DBCNError):
    pass


class ResolutionError(DBCNError):
    """A catalog tree cannot be resolved to a reconstruction plan."""


class DanglingParentError(ResolutionError):
    pass


class CycleError(ResolutionError):
    pass


class VerificationError(DBCNError):
    """A catalog signature or payload digest failed to verify."""


class NotFound(DBCNError, KeyError):
    def __str__(self) -> str:
        # KeyError would repr() the argument; keep the plain message
        return f"object {self.args[0]} not found" if self.args else "object not found"


class IntegrityError(DBCNError):
    """Stored bytes do not hash to the digest they are filed under."""


class IoError(DBCNError, OSError):
    pass


class RepoIncompleteError(DBCNError):
    """The remote store lacks an object required by a fetch."""


class ScenarioError(DBCNError, ValueError):
    """A simulation scenario is malformed."""
