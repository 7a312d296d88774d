class ShapeError(ValueError):
    """Array shapes do not satisfy an operation's contract."""


class TensorFormatError(ValueError):
    """A TSR1 or PGM file is malformed; the message names the byte offset."""


class DegenerateGeometryError(RuntimeError):
    """A geometric estimate is undefined for the given input (rank deficiency, zero baseline)."""
