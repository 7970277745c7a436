class TransportError(Exception):
    """Base class for transport failures"""


class ConnectionFailedError(TransportError):
    """The peer could not be reached"""


class ConnectionClosedError(TransportError):
    """The peer closed or reset the connection"""


class FramingError(TransportError):
    """The byte stream does not carry a well-formed frame"""


class FrameTooLargeError(FramingError):

    def __init__(self, size, limit):
        self.size = size
        self.limit = limit
        super().__init__(f'Frame of {size} bytes exceeds the {limit} byte limit')


class BadMagicError(FramingError):
    pass


class UnsupportedVersionError(FramingError):

    def __init__(self, version):
        self.version = version
        super().__init__(f'Unsupported wire protocol version {version}')


class MalformedMessageError(FramingError):
    pass
