class HockeyError(Exception):
    """Base class for every domain error raised by PuckPilot.

    Modules subclass this next to the code that raises it. The CLI turns any
    HockeyError into a machine-readable JSON line on stderr.
    """

    pass


class ConfigError(HockeyError):
    """Raised when a configuration file or block fails validation."""

    pass


class ArtifactError(HockeyError):
    """Raised when a persisted model or dataset cannot be used."""

    pass


class SchemaVersionError(ArtifactError):
    """Raised when an artifact was written with another schema version."""

    pass


class MissingArtifactError(ArtifactError):
    """Raised when a required artifact file does not exist."""

    pass
