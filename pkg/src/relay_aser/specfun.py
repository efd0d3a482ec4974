#!/usr/bin/env python

"""Real-parameter special functions used by the closed-form expressions."""

import logging
import math
import threading
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import special

from .errors import ConvergenceError, OverflowReport, ValidationError

__all__ = ['SeriesControl', 'OmegaTable', 'q_function', 'log_gamma',
           'pochhammer', 'double_factorial', 'bessel_k', 'log_bessel_k',
           'hyp1f1', 'hyp1f1e', 'hyp2f1', 'multinomial_omega', 'omega_row']

@dataclass(frozen=True)
class SeriesControl:
    """Truncation rule for infinite sums.

    A sum stops once the current term contributes less than `rel_tol` of the
    running total; reaching `max_terms` first is an error, never a result.
    """
    rel_tol: float = 1e-13
    max_terms: int = 500

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValidationError('rel_tol must be positive, got %r' % self.rel_tol)
        if int(self.max_terms) != self.max_terms or self.max_terms < 1:
            raise ValidationError('max_terms must be a positive integer, got %r' % self.max_terms)

DEFAULT_SERIES = SeriesControl()

def _is_nonpositive_integer(x):
    return x <= 0 and float(x).is_integer()

def q_function(x):
    """Gaussian tail probability Q(x); accepts scalars or arrays."""
    return 0.5 * special.erfc(np.asarray(x, dtype=float) / math.sqrt(2))

def log_gamma(x):
    """ln Gamma(x) for x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValidationError('log_gamma is defined here for x > 0 only')
    return special.gammaln(x)

def pochhammer(a, n):
    """Rising factorial (a)_n = a (a+1) ... (a+n-1), with (a)_0 = 1."""
    if int(n) != n or n < 0:
        raise ValidationError('pochhammer needs a non-negative integer n, got %r' % n)
    return float(np.prod(a + np.arange(int(n), dtype=float)))

def double_factorial(n):
    """n!! for odd n >= -1, with (-1)!! = 1."""
    if int(n) != n or n % 2 == 0 or n < -1:
        raise ValidationError('double_factorial needs an odd integer >= -1, got %r' % n)
    if n == -1:
        return 1.0
    return float(special.factorial2(int(n), exact=True))

def bessel_k(order, x):
    """Modified Bessel function of the second kind K_order(x), x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValidationError('bessel_k needs x > 0')
    value = special.kv(order, x)
    if not np.all(np.isfinite(value)):
        raise OverflowReport('K_%s overflows at x = %s' % (order, x))
    return value

def log_bessel_k(order, x):
    """ln K_order(x) through the exponentially scaled kve, x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValidationError('log_bessel_k needs x > 0')
    return np.log(special.kve(order, x)) - x

def hyp1f1(a, b, x):
    """Confluent hypergeometric function 1F1(a; b; x)."""
    if _is_nonpositive_integer(b):
        raise ValidationError('1F1 undefined for b = %r' % b)
    value = special.hyp1f1(a, b, x)
    if not np.all(np.isfinite(value)):
        raise ConvergenceError('1F1(%r, %r, x) did not converge' % (a, b))
    return value

def hyp1f1e(a, b, x):
    """exp(-x) 1F1(a; b; x), evaluated as 1F1(b-a; b; -x) so it stays bounded
    for large positive x."""
    return hyp1f1(b - a, b, -np.asarray(x, dtype=float))

def hyp2f1(a, b, c, z):
    """Gauss hypergeometric function 2F1(a, b; c; z) on the real line.

    Args:
        a, b, c: Real parameters (scalars or arrays); c must not be a
            non-positive integer.
        z: Real argument, z < 1 (z = 1 only when c - a - b > 0).

    Returns:
        The series value; scipy applies the linear transformations that move
        0.5 < |z| < 1 and z <= -1 into the fast-converging region.
    """
    c_arr = np.asarray(c, dtype=float)
    if np.any((c_arr <= 0) & (c_arr == np.round(c_arr))):
        raise ValidationError('2F1 undefined for non-positive integer c')
    z_arr = np.asarray(z, dtype=float)
    gap = c_arr - np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    if np.any(z_arr > 1) or np.any((z_arr == 1) & (gap <= 0)):
        raise ConvergenceError('2F1 series diverges for z >= 1')
    value = special.hyp2f1(a, b, c, z)
    if not np.all(np.isfinite(value)):
        raise ConvergenceError('2F1 did not converge')
    return value

class OmegaTable:
    """Memo of the coefficients of (sum_{q<c} y^q/q!)^b.

    Rows are built with the recurrence
    Omega(a, b, c) = sum_{i=a-c+1}^{a} Omega(i, b-1, c) / (a-i)!
    restricted to 0 <= i <= (b-1)(c-1), and kept as exact fractions.
    Rows are immutable once stored; building is serialized by a lock.
    """

    def __init__(self):
        self._rows = {}
        self._lock = threading.Lock()

    def row(self, b, c):
        """Tuple of Fractions: coefficients of y^0 .. y^{b(c-1)}."""
        if b < 0 or c < 1:
            raise ValidationError('Omega needs b >= 0 and c >= 1, got b=%r c=%r' % (b, c))
        key = (int(b), int(c))
        row = self._rows.get(key)
        if row is not None:
            return row
        with self._lock:
            return self._build(*key)

    def _build(self, b, c):
        row = self._rows.get((b, c))
        if row is not None:
            return row
        if b == 0:
            row = (Fraction(1),)
        else:
            prev = self._rows.get((b - 1, c)) or self._build(b - 1, c)
            inv_fact = [Fraction(1, math.factorial(k)) for k in range(c)]
            top = b * (c - 1)
            row = []
            for a in range(top + 1):
                total = Fraction(0)
                for i in range(max(a - c + 1, 0), a + 1):
                    if i < len(prev):
                        total += prev[i] * inv_fact[a - i]
                row.append(total)
            row = tuple(row)
        self._rows[(b, c)] = row
        logging.debug('omega row b=%d c=%d built (%d entries)' % (b, c, len(row)))
        return row

    def __call__(self, a, b, c):
        if a < 0:
            raise ValidationError('Omega needs a >= 0, got %r' % a)
        row = self.row(b, c)
        return row[a] if a < len(row) else Fraction(0)

_OMEGA = OmegaTable()

def multinomial_omega(a, b, c):
    """Coefficient of y^a in (sum_{q=0}^{c-1} y^q/q!)^b, as a float."""
    return float(_OMEGA(a, b, c))

def omega_row(b, c):
    """All non-zero coefficients for (b, c) as a float array."""
    return np.array([float(x) for x in _OMEGA.row(b, c)])
