"""Typed exceptions raised across the package."""


class TrajCurateError(Exception):
    """Base class for every error raised by this package."""


# trajectory model
class TrajectoryTooShort(TrajCurateError, ValueError):
    pass


class AllStationary(TrajCurateError, ValueError):
    pass


class EmptyTrajectory(TrajCurateError, ValueError):
    pass


class InvalidTrajectory(TrajCurateError, ValueError):
    pass


# pretext labels
class HorizonTooShort(TrajCurateError, ValueError):
    pass


class EmptyOverlap(TrajCurateError, ValueError):
    pass


# losses
class LabelOutOfRange(TrajCurateError, ValueError):
    pass


class EmptyPairSet(TrajCurateError, ValueError):
    pass


# metrics
class LengthMismatch(TrajCurateError, ValueError):
    pass


class EmptyCorpus(TrajCurateError, ValueError):
    pass


class MissingPrediction(TrajCurateError, KeyError):
    pass


# scenario generation
class InvalidSpec(TrajCurateError, ValueError):
    pass


# dataset io
class DatasetError(TrajCurateError):
    """Base for input-data errors; the CLI maps these to exit code 1."""


class MissingColumn(DatasetError):
    pass


class NoTargetAgent(DatasetError):
    pass


class NonMonotonicTimestamps(DatasetError):
    pass


class MalformedInput(DatasetError):
    pass


class SchemaVersionMismatch(DatasetError):
    pass


class MalformedRecord(DatasetError):
    pass


class NoScenesFound(DatasetError):
    pass
