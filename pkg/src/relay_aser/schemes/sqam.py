#!/usr/bin/env python

import math

from .rqam import RectangularQam
from ..errors import ValidationError

__all__ = ['SquareQam']

class SquareQam(RectangularQam):
    name = 'sqam'
    orders = (4, 16, 64, 256, 1024)

    def layout(self, order=None, **kwargs):
        if kwargs:
            raise ValidationError('SQAM takes no %s' % ', '.join(sorted(kwargs)))
        self.check_order(order)
        side = math.isqrt(order)
        return super().layout(order, mi=side, mq=side)

scheme = SquareQam()
generate = scheme.generate
sep_params = scheme.sep_params
