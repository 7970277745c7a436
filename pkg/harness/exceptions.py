class HarnessError(Exception):
    """Base class for experiment harness errors."""


class SequenceFormatError(HarnessError):
    """A recorded sequence file could not be parsed."""

    def __init__(self, line_number, message):
        self.line_number = line_number
        super().__init__(f'line {line_number}: {message}')


class SequenceVersionError(HarnessError):
    """A sequence file was written by an incompatible format version."""
