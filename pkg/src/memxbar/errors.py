"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`MemxbarError`
so the CLI can map it to an exit code without catching unrelated bugs.
"""


class MemxbarError(Exception):
    """Base class for all package errors."""

    exit_code = 1
    category = "error"


class ConfigError(MemxbarError, ValueError):
    exit_code = 2
    category = "config"


class DatasetError(MemxbarError, ValueError):
    exit_code = 3
    category = "dataset"


class ReadSafetyError(MemxbarError, ValueError):
    """An encoded read voltage would reach a device threshold."""

    exit_code = 4
    category = "read-safety"


class TimingError(MemxbarError, ValueError):
    """Waveform durations do not fit the write-phase quarters."""

    exit_code = 4
    category = "timing"


class CharacterizationError(MemxbarError, RuntimeError):
    exit_code = 4
    category = "characterization"
