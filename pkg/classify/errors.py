"""Errors raised while loading classification databases"""

from utils.errors import DataError


class ParseError(DataError):
    """A database line could not be parsed"""

    def __init__(self, path: str, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no
        self.message = message

    def __reduce__(self):
        return type(self), (self.path, self.line_no, self.message)


class OverlapError(DataError):
    """A LAN prefix overlaps a MAN prefix"""
