"""Exception types shared across the toolkit."""


class FollowsimError(Exception):
    """Base class for all toolkit errors."""


class FormatError(FollowsimError):
    """A data file violates its documented format.

    Carries the offending path and 1-based line number when known.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}: "
        if line is not None:
            prefix += f"line {line}: "
        super().__init__(prefix + message)


class DuplicateUserError(FormatError):
    """The same user_id appears more than once in a corpus file."""


class SelfLoopError(FormatError):
    """An edge file contains a row whose source equals its target."""


class ModelVersionError(FollowsimError):
    """A model artifact was written by an incompatible format version."""


class ModelIntegrityError(FollowsimError):
    """A model artifact is truncated or fails its checksum."""


class VocabularyMismatchError(FollowsimError):
    """A vocabulary does not match the one the model was built with."""


class DegenerateModelError(FollowsimError):
    """The word matrix has a zero singular direction; the projection
    normal equations are singular."""

    def __init__(self, dimension):
        self.dimension = dimension
        super().__init__(
            f"word matrix is rank deficient: singular value at dimension "
            f"{dimension} is zero, out-of-sample projection is not defined"
        )


class MissingVectorError(FollowsimError):
    """A classified user has no vector available for similarity analysis."""

    def __init__(self, user_id):
        self.user_id = user_id
        super().__init__(f"no vector available for classified user {user_id!r}")


class MissingAssignmentError(FollowsimError):
    """A graph user has no category assignment."""

    def __init__(self, user_id):
        self.user_id = user_id
        super().__init__(f"no category assignment for graph user {user_id!r}")


class InfeasibleSharesError(FollowsimError):
    """Requested category shares cannot be realized as a degree sequence."""
