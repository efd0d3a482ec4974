#!/usr/bin/env python

import math

import numpy as np

from ..constellation import RqamParams, Scheme
from ..errors import ValidationError

__all__ = ['RectangularQam', 'split_order']

def _is_power_of_two(n):
    return isinstance(n, (int, np.integer)) and n >= 1 and n & (n - 1) == 0

def split_order(order):
    """MI x MQ for a power-of-two order, the wider side in-phase."""
    if not _is_power_of_two(order) or order < 2:
        raise ValidationError('RQAM order must be a power of two >= 2, got %r' % order)
    k = int(order).bit_length() - 1
    return 2 ** ((k + 1) // 2), 2 ** (k // 2)

class RectangularQam(Scheme):
    """MI x MQ grid; in-phase spacing d_I, quadrature spacing d_Q = sigma d_I."""
    name = 'rqam'

    def layout(self, order=None, mi=None, mq=None, sigma=1.0):
        if mi is None and mq is None:
            if order is None:
                raise ValidationError('RQAM needs an order or mi and mq')
            mi, mq = split_order(order)
        elif mi is None or mq is None:
            raise ValidationError('RQAM needs both mi and mq')
        if not (_is_power_of_two(mi) and _is_power_of_two(mq)) or mi < 2:
            raise ValidationError('RQAM needs mi >= 2 and mq >= 1, both powers of two, got %rx%r' % (mi, mq))
        if order is not None and order != mi * mq:
            raise ValidationError('order %r does not match %dx%d' % (order, mi, mq))
        if not sigma > 0 or not math.isfinite(sigma):
            raise ValidationError('sigma must be positive, got %r' % sigma)

        in_phase = np.arange(mi) - (mi - 1) / 2
        quadrature = sigma * (np.arange(mq)[::-1] - (mq - 1) / 2)
        points = (in_phase[None, :] + 1j * quadrature[:, None]).ravel()
        return points, dict(mi=int(mi), mq=int(mq), d_i=1.0, d_q=float(sigma), sigma=float(sigma))

    def sep_params(self, c):
        mi, mq, sigma = c.mi, c.mq, c.sigma
        zeta = math.sqrt(6 / ((mi * mi - 1) + (mq * mq - 1) * sigma * sigma))
        return RqamParams(n1=1 - 1 / mi, n2=1 - 1 / mq, zeta=zeta, rho=sigma * zeta)

scheme = RectangularQam()
generate = scheme.generate
sep_params = scheme.sep_params
