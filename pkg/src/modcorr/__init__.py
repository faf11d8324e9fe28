"""Numerical laboratory for long-range correlations of sequences modulo one.

Modules
-------
seqgen    fractional parts and certified phases {k a(n)} in double-double
testfn    compactly supported test functions
correlate windowed long-range m-level correlations
counting  exact window-count moments
weyl      Weyl sums and the error functional built from them
oscphase  stationary phase integrals and the B-process evaluator
cli       batch front-end (``modcorr``)
"""

from modcorr import _threads  # noqa: F401  (configures numba before first use)
from modcorr.errors import (
    ConfigError,
    CostGuardError,
    ModcorrError,
    PrecisionLossError,
    PreconditionError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "CostGuardError",
    "ModcorrError",
    "PrecisionLossError",
    "PreconditionError",
    "__version__",
]
