#!/usr/bin/env python

import math

import numpy as np

from ..constellation import Scheme, XqamParams
from ..errors import ValidationError

__all__ = ['CrossQam']

class CrossQam(Scheme):
    """32-point cross: the 6x6 square grid without its four corner points."""
    name = 'xqam'
    orders = (32,)

    def layout(self, order=None, **kwargs):
        if kwargs:
            raise ValidationError('XQAM takes no %s' % ', '.join(sorted(kwargs)))
        self.check_order(32 if order is None else order)
        axis = np.arange(6) - 2.5
        grid = (axis[None, :] + 1j * axis[::-1, None]).ravel()
        corner = (np.abs(grid.real) == 2.5) & (np.abs(grid.imag) == 2.5)
        return grid[~corner], {}

    def sep_params(self, c):
        m = c.order
        root = math.sqrt(2 * m)
        return XqamParams(e1=4 - 6 / root,
                          e2=4 - 12 / root + 12 / m,
                          c=48 / (31 * m - 32),
                          order=m)

scheme = CrossQam()
generate = scheme.generate
sep_params = scheme.sep_params
