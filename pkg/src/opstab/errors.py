"""Exception types shared across the package."""


class OpstabError(Exception):
    """Base class for package errors."""


class QuadratureError(OpstabError):
    """An integral could not be computed to the requested tolerance."""


class DomainError(OpstabError, ValueError):
    """Evaluation requested outside the truncated domain or admissible range."""


class DescriptorError(OpstabError, ValueError):
    """A kernel/weight descriptor string failed to parse."""


class KernelError(OpstabError):
    """Kernel-level inconsistency (e.g. non-monotone claimed-radial profile)."""


class ConfigError(OpstabError, ValueError):
    """Invalid run configuration."""
