#!/usr/bin/env python

__all__ = ['RelayAserError', 'ValidationError', 'NumericalError',
           'ConvergenceError', 'OverflowReport', 'PrecisionLossError',
           'RangeError']

class RelayAserError(Exception):
    """Base error for this package."""

class ValidationError(RelayAserError, ValueError):
    """Inputs violate a contract: unsupported order, bad count, bad key."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = 'line %d: %s' % (line, message)
        super().__init__(message)

class NumericalError(RelayAserError, ArithmeticError):
    """A computation did not produce a trustworthy number."""

class ConvergenceError(NumericalError):
    """Series cap hit or quadrature did not converge."""

    def __init__(self, message, error_estimate=None):
        self.error_estimate = error_estimate
        if error_estimate is not None:
            message = '%s (error estimate %r)' % (message, error_estimate)
        super().__init__(message)

class OverflowReport(NumericalError):
    """Non-finite value met while assembling terms."""

class PrecisionLossError(NumericalError):
    """Cancellation left no significant digits in a sum."""

class RangeError(NumericalError):
    """A probability came out outside [0, 1]."""
