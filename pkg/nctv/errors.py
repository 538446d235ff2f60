class NctvException(Exception):
    """Base class for all errors raised by nctv."""
    pass
