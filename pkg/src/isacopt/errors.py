"""Exception types raised by the solvers."""


class IsacError(Exception):
    """Base class for all solver errors."""


class DomainError(IsacError, ValueError):
    """An input lies outside the domain of a metric (e.g. non-PSD covariance)."""


class InfeasibleError(IsacError):
    """The QoS targets cannot be met (e.g. positive rate with a zero channel)."""


class NoCommChannel(InfeasibleError):
    """The communication channel has rank zero."""


class EEDegenerate(IsacError):
    """Energy-efficiency maximisation is degenerate because P_c = 0."""


class DegenerateDual(IsacError):
    """Dual iterate makes the inner problem ill-posed (gamma = 0 with r < M)."""


class NotApplicable(IsacError):
    """A benchmark scheme cannot be applied to this channel."""


class ConfigError(IsacError, ValueError):
    """Invalid experiment configuration."""
