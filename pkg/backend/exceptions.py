class BackendError(Exception):
    """Base class for backend failures"""


class InvalidPayloadError(BackendError):
    """A request payload does not carry a usable pose"""
