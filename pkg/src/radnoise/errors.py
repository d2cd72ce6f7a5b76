"""Exception hierarchy shared by all radnoise modules."""


class RadnoiseError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(RadnoiseError):
    """An image or target shape has a zero or negative dimension."""


class NumericError(RadnoiseError):
    """Pixel data is non-finite or outside its declared value range."""


class DomainError(RadnoiseError):
    """A parameter lies outside the domain an operation is defined on."""


class UndefinedSNRError(DomainError):
    """The requested SNR is undefined (zero signal or zero noise scale)."""


class ShapeError(RadnoiseError):
    """Two arrays that must agree in shape (or class count) do not."""


class DegenerateInputError(RadnoiseError):
    """Input is structurally valid but the result is undefined on it
    (e.g. AUROC with a single class, curves from an empty record list)."""


class InfeasibleSplitError(RadnoiseError):
    """Fewer patients than non-empty splits requested."""


class ParseError(RadnoiseError):
    """A manifest, split, or prediction file is malformed; the message
    names the file and, where possible, the line."""


class FormatError(RadnoiseError):
    """An image file is not 8-bit single-channel grayscale PNG/PGM."""


class MissingBaselineError(RadnoiseError):
    """Sweep evaluation cannot proceed: no baseline (0, 0) predictions."""
