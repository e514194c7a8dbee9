"""Exception and warning types shared across the package."""


class WVAError(Exception):
    """Base class for all errors raised by atomwva."""


class ContractError(WVAError):
    """An operation was called on an input in the wrong state or representation."""


class DomainError(WVAError, ValueError):
    """A parameter lies outside the domain where the model is defined."""


class NormalizationError(WVAError):
    """A state that should be normalized is not.

    The offending norm is kept on ``.norm`` so callers can report it.
    """

    def __init__(self, norm, message=None):
        self.norm = float(norm)
        super().__init__(message or f"state is not normalized (norm = {self.norm!r})")


class RegimeError(WVAError):
    """A validity ratio exceeded its hard limit."""


class AliasingError(WVAError):
    """A spectral operation would push amplitude past the edge of the grid."""


class CutoffError(WVAError):
    """The Fock cutoff is too small for the requested accuracy."""


class PostselectionError(WVAError):
    """Post-selection has zero (or numerically zero) success probability."""


class RegimeWarning(UserWarning):
    """A validity ratio is above the warning threshold but below the hard limit."""
