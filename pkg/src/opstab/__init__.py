"""Dyadic discretization of localized integral operators on weighted spaces.

Library + CLI that evaluates kernel decay constants, Muckenhoupt weight
inequalities, discretization matrices and their off-diagonal/commutator
decay, and scans stability constants of z*I - T across (p, weight) pairs.
"""

from .errors import (ConfigError, DescriptorError, DomainError, KernelError,
                     OpstabError, QuadratureError)
from .kernels import (KernelConditionReport, KernelSpec, RadialProfile,
                      WienerAmalgamReport, bessel_kernel, fourier_symbol,
                      kernel_condition_constants, modulus_of_continuity,
                      parse_kernel, radial_dominator, wiener_amalgam_condition)

__all__ = [name for name in dir() if not name.startswith("_")]

__version__ = "0.1.0"
