"""Exception hierarchy shared by the service modules.

Every error carries a stable ``code`` that the gateway copies verbatim into
the wire error body, so clients can branch on it without parsing messages.
"""


class PodkeeperError(Exception):
    code = "INTERNAL"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)
        self.message = message or self.code


# authsvc

class AuthError(PodkeeperError):
    code = "AUTH_ERROR"


class InvalidUsername(AuthError):
    code = "INVALID_USERNAME"


class DuplicateUser(AuthError):
    code = "DUPLICATE_USER"


class UnknownUser(AuthError):
    code = "UNKNOWN_USER"


class BadCredentials(AuthError):
    code = "BAD_CREDENTIALS"


class TokenError(AuthError):
    code = "TOKEN_INVALID"


class TokenMissing(TokenError):
    code = "TOKEN_MISSING"


class TokenMalformed(TokenError):
    code = "TOKEN_MALFORMED"


class TokenTampered(TokenError):
    code = "TOKEN_TAMPERED"


class TokenExpired(TokenError):
    code = "TOKEN_EXPIRED"


# podman

class PodError(PodkeeperError):
    code = "POD_ERROR"


class InvalidPodId(PodError):
    code = "INVALID_POD_ID"


class DuplicatePodId(PodError):
    code = "DUPLICATE_POD_ID"


class UnknownTemplate(PodError):
    code = "UNKNOWN_TEMPLATE"


class PodNotFound(PodError):
    code = "POD_NOT_FOUND"


class Forbidden(PodError):
    code = "FORBIDDEN"


class PodNotReady(PodError):
    code = "POD_NOT_READY"


class PodDeleted(PodError):
    code = "POD_DELETED"


class CannotDowngradeOwner(PodError):
    code = "CANNOT_DOWNGRADE_OWNER"


class IllegalTransition(PodError):
    code = "ILLEGAL_TRANSITION"


# graphstore

class GraphError(PodkeeperError):
    code = "EXEC_ERROR"


class ExecError(GraphError):
    code = "EXEC_ERROR"


class WriteInReadOnlyMode(GraphError):
    code = "WRITE_IN_READ_ONLY"


class DeleteWithRelationships(GraphError):
    code = "DELETE_WITH_RELATIONSHIPS"


class SourceUnavailable(GraphError):
    code = "SOURCE_UNAVAILABLE"


class CsvMalformed(GraphError):
    code = "CSV_MALFORMED"

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UnknownColumn(GraphError):
    code = "UNKNOWN_COLUMN"

    def __init__(self, name: str):
        super().__init__(f"unknown CSV column {name!r}")
        self.name = name


class SnapshotError(GraphError):
    code = "SNAPSHOT_ERROR"


class SnapshotCorrupt(SnapshotError):
    code = "SNAPSHOT_CORRUPT"


class SnapshotVersionUnsupported(SnapshotError):
    code = "SNAPSHOT_VERSION_UNSUPPORTED"
