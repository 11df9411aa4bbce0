"""Exception hierarchy shared across the package.

The CLI maps these onto its exit-code contract: usage errors exit 1,
I/O errors exit 2, validation errors exit 3.
"""


class IComposeError(Exception):
    """Base class for all errors raised by this package."""


class ImageIOError(IComposeError):
    """Unreadable, unwritable or malformed image file."""


class ValidationError(IComposeError):
    """Input data violates a declared range or consistency rule."""


class ManifestError(ValidationError):
    """Channel-set manifest is malformed or references bad files."""
