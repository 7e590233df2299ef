"""Exception types shared across the toolkit."""


class GlyphDescError(Exception):
    """Base class for all toolkit errors."""


class ImageTooSmall(GlyphDescError):
    pass


class RectOutOfBounds(GlyphDescError):
    pass


class EvenKernel(GlyphDescError):
    pass


class SingularHomography(GlyphDescError):
    pass


class WrongWindowSize(GlyphDescError):
    pass


class NonFiniteLoss(GlyphDescError):
    pass


class DimensionMismatch(GlyphDescError):
    pass


class EmptyDataset(GlyphDescError):
    pass


class BadLabel(GlyphDescError):
    pass


class ClassTooSmall(GlyphDescError):
    pass


class DegenerateConfiguration(GlyphDescError):
    pass


class CornersNotFound(GlyphDescError):
    pass


class SpecMismatch(GlyphDescError):
    pass


class LengthMismatch(GlyphDescError):
    pass


class NoConvergenceWarning(UserWarning):
    """Raised as a warning when an SVM subproblem hits its update budget."""
