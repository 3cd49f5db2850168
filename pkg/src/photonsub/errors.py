"""Exception types shared across the package."""


class PhotonsubError(Exception):
    """Base class for all package-specific errors."""


class LayoutError(PhotonsubError):
    """Operands live on different Hilbert-space layouts."""


class DimensionError(PhotonsubError):
    """A dimension or index is out of range for the layout."""


class TruncationError(PhotonsubError):
    """A requested state does not fit in the truncated space."""


class ConfigError(PhotonsubError):
    """An experiment configuration is malformed or inconsistent."""


class IntegrationError(PhotonsubError):
    """A propagator or ODE integration failed a sanity check."""


class ModelInconsistencyError(PhotonsubError):
    """The non-Hermitian decomposition of a model failed to close."""


class TrajectoryError(PhotonsubError):
    """A stochastic trajectory violated an invariant during evolution."""


class AnalysisError(PhotonsubError):
    """An ensemble reduction has no data or an undefined estimator."""
