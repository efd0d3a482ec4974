#!/usr/bin/env python

import math

import numpy as np

from ..constellation import HqamParams, Scheme, adjacency, stats
from ..errors import ValidationError

__all__ = ['HexagonalQam']

# second basis vector of the triangular lattice
OMEGA = complex(0.5, math.sqrt(3) / 2)

class HexagonalQam(Scheme):
    """QAM on the triangular lattice.

    For a given order the M lattice points nearest to a candidate centre are
    taken for every centre on a `shift_steps` x `shift_steps` grid of the
    lattice cell, and the subset with the lowest energy about its own
    centroid wins. The first minimum (within 1e-9 relative) is kept so the
    layout is deterministic.
    """
    name = 'hqam'
    orders = (4, 8, 16, 32, 64)
    shift_steps = 24

    def layout(self, order=None, **kwargs):
        if kwargs:
            raise ValidationError('HQAM takes no %s' % ', '.join(sorted(kwargs)))
        self.check_order(order)

        radius = math.ceil(math.sqrt(order)) + 3
        a, b = np.meshgrid(np.arange(-radius, radius + 1),
                           np.arange(-radius, radius + 1), indexing='ij')
        lattice = (a + b * OMEGA).ravel()

        steps = np.arange(self.shift_steps) / self.shift_steps
        s1, s2 = np.meshgrid(steps, steps, indexing='ij')
        shifts = (s1 + s2 * OMEGA).ravel()

        candidates = lattice[None, :] - shifts[:, None]
        nearest = np.argsort(np.abs(candidates) ** 2, axis=1, kind='stable')[:, :order]
        chosen = np.take_along_axis(candidates, nearest, axis=1)
        centred = chosen - chosen.mean(axis=1, keepdims=True)
        energy = np.mean(np.abs(centred) ** 2, axis=1)
        best = int(np.flatnonzero(energy <= energy.min() * (1 + 1e-9))[0])

        points = centred[best]
        # top row first, left to right
        ordering = np.lexsort((np.round(points.real, 9), -np.round(points.imag, 9)))
        return points[ordering], {}

    def sep_params(self, c):
        links = adjacency(c).astype(float)
        triangles = np.trace(links @ links @ links)
        d_min = stats(c).d_min
        return HqamParams(m=float(links.sum()) / c.order,
                          m_c=float(triangles) / (2 * c.order),
                          alpha=d_min ** 2 / 2)

scheme = HexagonalQam()
generate = scheme.generate
sep_params = scheme.sep_params
