"""Exception hierarchy.

Everything raised for bad input data derives from :class:`AmlError` (and from
``ValueError`` so generic callers can still catch it).
"""


class AmlError(ValueError):
    """Base class for validation errors raised by this package."""


class TensorFormatError(AmlError):
    pass


class BadMagicError(TensorFormatError):
    pass


class VersionMismatchError(TensorFormatError):
    pass


class TruncatedError(TensorFormatError):
    pass


class NonFiniteError(TensorFormatError):
    pass


class ImageFormatError(AmlError):
    pass


class MaskNotBinaryError(ImageFormatError):
    pass


class ShapeError(AmlError):
    pass
