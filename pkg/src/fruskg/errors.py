"""Exception hierarchy shared across pipeline stages."""


class FrusKgError(Exception):
    """Base class for all pipeline errors."""


class MalformedXml(FrusKgError):
    pass


class MissingVolumeId(FrusKgError):
    pass


class DirectoryNotFound(FrusKgError):
    pass


class EndpointUnavailable(FrusKgError):
    pass


class MalformedResponse(FrusKgError):
    pass


class EmbedderUnavailable(FrusKgError):
    pass


class ProviderUnavailable(FrusKgError):
    pass


class UnknownEntity(FrusKgError):
    pass


class DatabaseNotLoaded(FrusKgError):
    pass


class OverrideCountryUnknown(FrusKgError):
    pass


class UnknownCountry(FrusKgError):
    pass


class DateOutOfRange(FrusKgError):
    pass


class DanglingReference(FrusKgError):
    pass


class DuplicateDocId(FrusKgError):
    pass


class IoFailure(FrusKgError):
    pass


class EmptyProjection(FrusKgError):
    pass


class DimensionTooSmall(FrusKgError):
    pass


class NotConverged(FrusKgError):
    pass


class MissingTopics(FrusKgError):
    pass


class ConfigInvalid(FrusKgError):
    pass


class StageFailed(FrusKgError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


class StageIncomplete(FrusKgError):
    pass
