#!/usr/bin/env python

"""Constellations, their geometry, and conditional SEP over AWGN.

Each scheme family lives in its own module under `relay_aser.schemes` and is
looked up through `SCHEMES`. A scheme turns an order into an un-normalized
layout (unit minimum distance), and `Scheme.generate` normalizes it to unit
average energy.

The conditional SEP of every scheme is a weighted sum of products of at most
two Q-functions of c*sqrt(lambda) (`QTerm`). Its derivative is generated from
those terms as two families of atoms:

    RootAtom: coef * lambda^(-1/2) * exp(-rate*lambda)
    HypAtom:  coef * exp(-rate*lambda) * 1F1(1; 3/2; kappa*lambda), kappa < rate

which is also the shape the closed-form ASER integrates.
"""

SCHEMES = {
    'hqam'   : 'hqam',
    'rqam'   : 'rqam',
    'sqam'   : 'sqam',
    'xqam'   : 'xqam',
    'xqam32' : 'xqam',
}

import logging
import math
from collections import namedtuple
from dataclasses import dataclass
from importlib import import_module

import numpy as np

from .errors import ValidationError
from .specfun import hyp1f1e, q_function

__all__ = ['SCHEMES', 'Constellation', 'GeometryStats', 'QTerm', 'RootAtom',
           'HypAtom', 'SepParams', 'HqamParams', 'RqamParams', 'XqamParams',
           'Scheme', 'generate', 'stats', 'adjacency', 'detect', 'sep_params',
           'sep_conditional', 'sep_derivative', 'derivative_atoms',
           'evaluate_atoms']

QTerm = namedtuple('QTerm', ['weight', 'c1', 'c2'])
RootAtom = namedtuple('RootAtom', ['coef', 'rate'])
HypAtom = namedtuple('HypAtom', ['coef', 'rate', 'kappa'])

DETECT_CHUNK = 1 << 14

@dataclass(frozen=True, eq=False)
class Constellation:
    """A normalized symbol set.

    `points` is a read-only complex128 array (I + jQ) with unit mean energy.
    `base_energy` is the mean energy of the same layout scaled to unit
    minimum distance, before normalization. `mi`, `mq`, `d_i`, `d_q` and
    `sigma` are set for rectangular layouts only.
    """
    scheme: str
    order: int
    points: np.ndarray
    base_energy: float
    mi: int = None
    mq: int = None
    d_i: float = None
    d_q: float = None
    sigma: float = None

    def __len__(self):
        return self.order

@dataclass(frozen=True)
class GeometryStats:
    d_min: float
    avg_neighbors: float
    peak_energy: float
    avg_energy: float
    papr: float

class SepParams:
    """Per-scheme conditional-SEP parameters."""
    scheme = None

    def q_terms(self):
        raise NotImplementedError()

@dataclass(frozen=True)
class HqamParams(SepParams):
    """m: average nearest-neighbor count; m_c: average number of adjacent
    nearest-neighbor pairs (60 degrees apart); alpha: SNR scale."""
    m: float
    m_c: float
    alpha: float
    scheme = 'hqam'

    def q_terms(self):
        a = self.alpha
        return (QTerm(self.m, math.sqrt(a), None),
                QTerm(2 * self.m_c / 3, math.sqrt(2 * a / 3), math.sqrt(2 * a / 3)),
                QTerm(-2 * self.m_c, math.sqrt(a), math.sqrt(a / 3)))

@dataclass(frozen=True)
class RqamParams(SepParams):
    n1: float
    n2: float
    zeta: float
    rho: float
    scheme = 'rqam'

    def q_terms(self):
        terms = [QTerm(2 * self.n1, self.zeta, None),
                 QTerm(2 * self.n2, self.rho, None),
                 QTerm(-4 * self.n1 * self.n2, self.zeta, self.rho)]
        return tuple(t for t in terms if t.weight != 0)

@dataclass(frozen=True)
class XqamParams(SepParams):
    e1: float
    e2: float
    c: float
    order: int = 32
    scheme = 'xqam'

    def q_terms(self):
        root = math.sqrt(2 * self.c)
        return (QTerm(self.e1, root, None),
                QTerm(4 / self.order, 2 * math.sqrt(self.c), None),
                QTerm(-self.e2, root, root))

def derivative_atoms(p):
    """Atoms of dP/dlambda for SepParams `p`; atoms sharing a rate are merged.

    Returns:
        (roots, hyps): tuples of RootAtom and HypAtom.
    """
    roots, hyps = {}, {}

    def add(table, key, coef):
        k = tuple(round(x, 15) for x in key)
        prev = table.get(k)
        table[k] = (key, coef + (prev[1] if prev else 0.0))

    norm = 1 / math.sqrt(2 * math.pi)
    for w, c1, c2 in p.q_terms():
        if c2 is None:
            add(roots, (c1 * c1 / 2,), -w * c1 * norm / 2)
            continue
        add(roots, (c1 * c1 / 2,), -w * c1 * norm / 4)
        add(roots, (c2 * c2 / 2,), -w * c2 * norm / 4)
        rate = (c1 * c1 + c2 * c2) / 2
        cross = w * c1 * c2 / (4 * math.pi)
        add(hyps, (rate, c2 * c2 / 2), cross)
        add(hyps, (rate, c1 * c1 / 2), cross)

    return (tuple(RootAtom(c, key[0]) for key, c in roots.values() if c != 0),
            tuple(HypAtom(c, key[0], key[1]) for key, c in hyps.values() if c != 0))

def sep_conditional(p, snr):
    """Conditional SEP at linear SNR `snr` (scalar or array, >= 0)."""
    snr = np.asarray(snr, dtype=float)
    if np.any(snr < 0):
        raise ValidationError('SNR must be non-negative')
    root = np.sqrt(snr)
    total = np.zeros_like(root)
    for w, c1, c2 in p.q_terms():
        term = q_function(c1 * root)
        if c2 is not None:
            term = term * q_function(c2 * root)
        total = total + w * term
    return total if total.ndim else float(total)

def sep_derivative(p, snr):
    """d/dlambda of the conditional SEP, lambda > 0."""
    snr = np.asarray(snr, dtype=float)
    if np.any(snr <= 0):
        raise ValidationError('SEP derivative is singular at lambda = 0')
    return evaluate_atoms(derivative_atoms(p), snr)

def evaluate_atoms(atoms, snr):
    """Sum of (roots, hyps) atoms at positive SNR values."""
    roots, hyps = atoms
    snr = np.asarray(snr, dtype=float)
    total = np.zeros_like(snr)
    for coef, rate in roots:
        total = total + coef * np.exp(-rate * snr) / np.sqrt(snr)
    for coef, rate, kappa in hyps:
        total = total + coef * np.exp(-(rate - kappa) * snr) * hyp1f1e(1.0, 1.5, kappa * snr)
    return total if total.ndim else float(total)

def stats(c):
    """Exact pairwise geometry of a constellation."""
    pts = c.points
    dist = np.abs(pts[:, None] - pts[None, :])
    np.fill_diagonal(dist, np.inf)
    d_min = float(dist.min())
    neighbors = dist <= d_min * (1 + 1e-9)
    energy = np.abs(pts) ** 2
    peak, avg = float(energy.max()), float(energy.mean())
    return GeometryStats(d_min=d_min,
                         avg_neighbors=float(neighbors.sum()) / len(pts),
                         peak_energy=peak,
                         avg_energy=avg,
                         papr=peak / avg)

def adjacency(c):
    """Boolean nearest-neighbor matrix."""
    pts = c.points
    dist = np.abs(pts[:, None] - pts[None, :])
    np.fill_diagonal(dist, np.inf)
    return dist <= dist.min() * (1 + 1e-9)

def detect(received, c):
    """Minimum-distance decision; ties go to the lowest index.

    Args:
        received: A complex sample or an array of them.
        c: The Constellation.

    Returns:
        Symbol index (int) or an int array shaped like `received`.
    """
    r = np.asarray(received, dtype=complex)
    flat = r.ravel()
    out = np.empty(flat.shape, dtype=np.intp)
    for start in range(0, flat.size, DETECT_CHUNK):
        chunk = flat[start:start + DETECT_CHUNK]
        out[start:start + DETECT_CHUNK] = np.argmin(np.abs(chunk[:, None] - c.points[None, :]), axis=1)
    return int(out[0]) if r.ndim == 0 else out.reshape(r.shape)

class Scheme():
    """Base class of a constellation family.

    Subclasses set `name` and `orders` and implement `layout` and
    `sep_params`.
    """
    name = None
    orders = ()

    def check_order(self, order):
        if order not in self.orders:
            raise ValidationError('%s supports orders %s, got %r'
                                  % (self.name.upper(), ', '.join(str(o) for o in self.orders), order))

    def layout(self, order, **kwargs):
        """Return (points at unit minimum distance, extra Constellation fields)."""
        raise NotImplementedError()

    def sep_params(self, c):
        raise NotImplementedError()

    def generate(self, order=None, **kwargs):
        raw, extra = self.layout(order, **kwargs)
        raw = np.asarray(raw, dtype=complex)
        raw = raw - raw.mean()
        d = np.abs(raw[:, None] - raw[None, :])
        np.fill_diagonal(d, np.inf)
        base = raw / d.min()
        base_energy = float(np.mean(np.abs(base) ** 2))
        scale = 1 / math.sqrt(base_energy)
        points = base * scale
        points.setflags(write=False)
        for key in ('d_i', 'd_q'):
            if extra.get(key) is not None:
                extra[key] = extra[key] / d.min() * scale
        logging.debug('generated %d-%s, base energy %.6g' % (len(points), self.name, base_energy))
        return Constellation(scheme=self.name, order=len(points), points=points,
                             base_energy=base_energy, **extra)

def scheme_module(name):
    key = str(name).lower()
    if key not in SCHEMES:
        raise ValidationError('unknown scheme %r (supported: %s)' % (name, ', '.join(sorted(SCHEMES))))
    return import_module('.'.join(['relay_aser', 'schemes', SCHEMES[key]]))

def generate(scheme, order=None, **kwargs):
    """Build a normalized constellation.

    `kwargs` are scheme specific: only RQAM takes `mi`, `mq` and `sigma`.
    """
    return scheme_module(scheme).generate(order, **kwargs)

def sep_params(c):
    """SepParams for a constellation built by `generate`."""
    return scheme_module(c.scheme).sep_params(c)
