"""Non-Euclidean mixture model for link prediction (C++ core)."""

from ._core import *  # noqa: F401,F403
from ._core import ContractViolation, NumericalError, train  # noqa: F401
