#!/usr/bin/env python

import math
import unittest

import numpy as np
from scipy import optimize

from relay_aser.constellation import *
from relay_aser.errors import ValidationError
from relay_aser.montecarlo import awgn_symbol_sim
from relay_aser.specfun import q_function

def db(x):
    return 10 ** (x / 10)

ALL = [('hqam', o) for o in (4, 8, 16, 32, 64)] + \
      [('sqam', o) for o in (4, 16, 64)] + [('rqam', 8), ('rqam', 32), ('xqam', 32)]

class TestGenerate(unittest.TestCase):

    def test_unit_energy(self):
        for scheme, order in ALL:
            c = generate(scheme, order)
            self.assertEqual(len(c), order)
            self.assertAlmostEqual(float(np.mean(np.abs(c.points) ** 2)), 1.0, places=12)
            self.assertEqual(len(np.unique(np.round(c.points, 9))), order)
            self.assertFalse(c.points.flags.writeable)

    def test_rqam(self):
        c = generate('rqam', mi=4, mq=2)
        self.assertEqual((c.order, c.mi, c.mq, c.sigma), (8, 4, 2, 1.0))
        self.assertAlmostEqual(c.d_i, c.d_q)
        self.assertEqual(len(set(np.round(c.points.real, 9))), 4)
        self.assertEqual(len(set(np.round(c.points.imag, 9))), 2)
        wide = generate('rqam', 32)
        self.assertEqual((wide.mi, wide.mq), (8, 4))
        tall = generate('rqam', mi=4, mq=4, sigma=2.0)
        self.assertAlmostEqual(tall.d_q / tall.d_i, 2.0)

    def test_rejects(self):
        with self.assertRaises(ValidationError) as cm:
            generate('hqam', 7)
        self.assertIn('4, 8, 16, 32, 64', str(cm.exception))
        for args, kwargs in ((('sqam', 8), {}), (('xqam', 16), {}), (('rqam', 12), {}),
                             (('rqam',), dict(mi=4, mq=2, sigma=0)),
                             (('rqam', 16), dict(mi=4, mq=2)), (('nope', 4), {})):
            with self.assertRaises(ValidationError):
                generate(*args, **kwargs)

    def test_deterministic(self):
        for scheme, order in ALL:
            self.assertTrue(np.array_equal(generate(scheme, order).points,
                                           generate(scheme, order).points))

    def test_xqam_energy(self):
        x = generate('xqam32')
        r = generate('rqam', mi=8, mq=4)
        self.assertEqual(x.scheme, 'xqam')
        self.assertAlmostEqual(x.base_energy, 5.0)
        self.assertAlmostEqual(r.base_energy, 6.5)
        self.assertLess(stats(x).peak_energy, stats(r).peak_energy)
        self.assertLess(stats(x).papr, stats(r).papr)

class TestGeometry(unittest.TestCase):

    def test_qpsk(self):
        s = stats(generate('sqam', 4))
        self.assertAlmostEqual(s.d_min, math.sqrt(2))
        self.assertEqual(s.avg_neighbors, 2)
        self.assertAlmostEqual(s.papr, 1.0)

    def test_sqam16(self):
        s = stats(generate('sqam', 16))
        self.assertEqual(s.avg_neighbors, 3)
        self.assertAlmostEqual(s.papr, 1.8)

    def test_hqam_lattice(self):
        for order in (16, 32, 64):
            c = generate('hqam', order)
            links = adjacency(c)
            self.assertEqual(int(links.sum(axis=1).max()), 6)
            d = stats(c).d_min
            # every point lies on the triangular lattice spanned by a nearest pair
            i, j = np.argwhere(links)[0]
            u = (c.points[j] - c.points[i]) / d
            w = u * complex(0.5, math.sqrt(3) / 2)
            rel = (c.points - c.points[i]) / d
            coords = np.linalg.solve(np.array([[u.real, w.real], [u.imag, w.imag]]),
                                     np.vstack([rel.real, rel.imag]))
            np.testing.assert_allclose(coords, np.round(coords), atol=1e-9)

    def test_hqam4(self):
        c = generate('hqam', 4)
        self.assertEqual(stats(c).avg_neighbors, 2.5)
        p = sep_params(c)
        self.assertAlmostEqual(p.m, 2.5)
        self.assertAlmostEqual(p.m_c, 1.5)
        self.assertAlmostEqual(p.alpha, 1.0)
        self.assertGreater(p.m, stats(generate('sqam', 4)).avg_neighbors)

    def test_detect(self):
        c = generate('hqam', 16)
        self.assertEqual(detect(c.points[5], c), 5)
        self.assertTrue(np.array_equal(detect(c.points, c), np.arange(16)))
        j = np.flatnonzero(adjacency(c)[0])[0]
        mid = (c.points[0] + c.points[j]) / 2
        self.assertEqual(detect(mid + 1e-6 * (c.points[0] - mid), c), 0)
        grid = np.tile(c.points, (3, 1))
        self.assertEqual(detect(grid, c).shape, (3, 16))

class TestSep(unittest.TestCase):

    def test_params(self):
        p = sep_params(generate('rqam', mi=4, mq=2))
        self.assertAlmostEqual(p.n1, 0.75)
        self.assertAlmostEqual(p.n2, 0.5)
        self.assertAlmostEqual(p.zeta, math.sqrt(6 / 18))
        self.assertAlmostEqual(p.rho, p.zeta)
        x = sep_params(generate('xqam', 32))
        self.assertAlmostEqual(x.e1, 3.25)
        self.assertAlmostEqual(x.e2, 2.875)
        self.assertAlmostEqual(x.c, 0.05)

    def test_at_zero(self):
        h = sep_params(generate('hqam', 16))
        self.assertAlmostEqual(sep_conditional(h, 0.0), h.m / 2 - h.m_c / 3)
        r = sep_params(generate('rqam', mi=4, mq=2))
        self.assertAlmostEqual(sep_conditional(r, 0.0), r.n1 + r.n2 - r.n1 * r.n2)
        with self.assertRaises(ValidationError):
            sep_conditional(r, -1.0)

    def test_qpsk_exact(self):
        p = sep_params(generate('sqam', 4))
        for snr in (0.5, 4.0, 30.0):
            q = float(q_function(math.sqrt(snr)))
            self.assertAlmostEqual(sep_conditional(p, snr), 2 * q - q * q, places=14)

    def test_bounded_and_decreasing(self):
        snr = db(np.linspace(3, 30, 60))
        for scheme, order in ALL:
            sep = sep_conditional(sep_params(generate(scheme, order)), snr)
            self.assertTrue(np.all(sep >= 0) and np.all(sep <= 1))
            self.assertTrue(np.all(np.diff(sep) <= 0))

    def test_derivative(self):
        snr = np.append(db(np.linspace(0, 30, 60)), 2.0)
        for scheme, order in [('hqam', 16), ('hqam', 64), ('sqam', 16), ('rqam', 8), ('xqam', 32)]:
            p = sep_params(generate(scheme, order))
            h = 1e-6 * snr
            diff = (sep_conditional(p, snr + h) - sep_conditional(p, snr - h)) / (2 * h)
            exact = sep_derivative(p, snr)
            np.testing.assert_allclose(exact, diff, rtol=1e-4, err_msg=scheme)
            self.assertTrue(np.all(exact < 0))

    def test_derivative_one_dimensional(self):
        p = sep_params(generate('rqam', mi=4, mq=1))
        self.assertEqual(p.n2, 0)
        self.assertEqual(len(p.q_terms()), 1)
        snr = 3.0
        expected = -p.zeta * p.n1 * math.exp(-p.zeta ** 2 * snr / 2) / math.sqrt(2 * math.pi * snr)
        self.assertAlmostEqual(sep_derivative(p, snr), expected, places=14)
        with self.assertRaises(ValidationError):
            sep_derivative(p, 0.0)

    def test_awgn_oracle(self):
        for scheme, order, snr_db in (('sqam', 16, 12), ('rqam', 8, 10), ('xqam', 32, 14)):
            c = generate(scheme, order)
            est = awgn_symbol_sim(c, db(snr_db), 200000, seed=7)
            exact = sep_conditional(sep_params(c), db(snr_db))
            self.assertLess(abs(est.aser - exact), 4 * est.std_err, scheme)

    def test_hqam_awgn(self):
        # geometry-derived (m, m_c, alpha) hold within 5% where the SEP is 1e-2
        for order in (4, 8, 16, 32, 64):
            c = generate('hqam', order)
            p = sep_params(c)
            snr = optimize.brentq(lambda x: sep_conditional(p, x) - 1e-2, db(0), db(40))
            est = awgn_symbol_sim(c, snr, 400000, seed=11)
            self.assertLess(abs(est.aser - 1e-2), 0.05 * 1e-2 + 3 * est.std_err, order)

if __name__ == '__main__':
    unittest.main()
