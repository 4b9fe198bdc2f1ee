from __future__ import annotations

EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_DATA = 3


class TmfwcError(Exception):
    """
    Base error. `exit_code` is the CLI exit status for this family:

    1 -> I/O (missing, unreadable or unwritable files)
    2 -> configuration (invalid parameters, impossible geometry)
    3 -> data (malformed audio, labels, dimensions)
    """

    exit_code: int = EXIT_DATA


class IoFailure(TmfwcError, OSError):
    exit_code = EXIT_IO


class ConfigInvalid(TmfwcError, ValueError):
    exit_code = EXIT_CONFIG


class DataError(TmfwcError, ValueError):
    exit_code = EXIT_DATA


# dsp.signal_io
class MalformedContainer(DataError):
    pass


class UnsupportedEncoding(DataError):
    pass


class EmptyAudio(DataError):
    pass


class InvalidFraming(ConfigInvalid):
    pass


# dsp.mfcc
class NegativeFrequency(DataError):
    pass


class DegenerateFilter(ConfigInvalid):
    pass


class DimensionMismatch(DataError):
    pass


class EmptyTrajectory(DataError):
    pass


class SampleRateMismatch(DataError):
    pass


# dsp.wavelet
class SignalTooShort(DataError):
    pass


class TooManyLevels(ConfigInvalid):
    pass


class InvalidScale(ConfigInvalid):
    pass


# dsp.tmfwc
class EmptySupport(ConfigInvalid):
    pass


class AliasedComponent(ConfigInvalid):
    pass


class InvalidComponentTable(DataError):
    pass


# reservoir
class SingularRescale(ConfigInvalid):
    pass


class InsufficientData(DataError):
    pass


class IllConditioned(ConfigInvalid):
    pass


# core.dataset
class UnparseableName(DataError):
    pass


class EmptyDataset(DataError):
    pass


class EmptyCell(DataError):
    pass


class DuplicateUtterance(DataError):
    pass


class PreflightFailed(DataError):
    pass


class EmptyResults(DataError):
    pass
