"""Hermite and Laguerre expansions with log-domain certification of weighted decay bounds."""
from .errors import AccuracyError, ConsistencyError, CoverageError, DomainError, RangeError
from .specfun import LogScaled

__version__ = "0.1.0"
