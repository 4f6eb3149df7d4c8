"""Exception types shared across the package."""


class GridtutorError(Exception):
    """Base class for package-specific errors."""


class SchemaError(GridtutorError):
    """A document failed schema validation."""


class UnsolvableEnvironmentError(GridtutorError):
    """The goal cannot be reached from the start state."""


class InvalidTrajectoryError(GridtutorError):
    """A trajectory is not legal under the environment dynamics."""


class InvalidDemonstrationError(GridtutorError):
    """A demonstration is not optimal under the teacher's reward weights."""


class EmptyRegionError(GridtutorError):
    """A constraint region contains no samplable mass."""


class CurriculumExhaustedError(GridtutorError):
    """No environment in the pool can convey the requested concept."""


class ProtocolError(GridtutorError):
    """A session received input that does not match its current phase."""
