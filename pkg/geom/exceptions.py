class GeometryError(ValueError):
    """Raised when geometric input violates a documented precondition"""


class NotProjectableError(GeometryError):
    """A point lies on or behind the camera plane and has no pixel location"""

    def __init__(self, depth, message=None):
        self.depth = depth
        super().__init__(message or f'Point at depth {depth:.6g} m is not in front of the camera')
