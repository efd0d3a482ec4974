#!/usr/bin/env python

import itertools
import math
import unittest

import numpy as np
from scipy import stats

from relay_aser.analytic import AvgSnrTriple, NetworkConfig, avg_snr_from_geometry
from relay_aser.constellation import generate, sep_conditional, sep_params
from relay_aser.errors import ValidationError
from relay_aser.montecarlo import *
from relay_aser.specfun import q_function

CFG = NetworkConfig(ns=2, nr=2, nd=2)

class TestChannels(unittest.TestCase):

    def test_same_seed(self):
        a = draw_channels(CFG, 42)
        b = draw_channels(CFG, 42)
        for name in ('h_sr', 'h_sd', 'h_rd'):
            self.assertTrue(np.array_equal(getattr(a, name), getattr(b, name)))
        self.assertEqual(a.h_sr.shape, (2, 2))
        self.assertEqual(draw_channels(NetworkConfig(3, 2, 4), 0, size=5).h_rd.shape, (5, 4, 2))

    def test_moments(self):
        h = draw_channels(CFG, 1, size=250000).h_sd.ravel()
        power = np.abs(h) ** 2
        se = power.std() / math.sqrt(len(power))
        self.assertLess(abs(power.mean() - 2), 3 * se)

    def test_branch_distribution(self):
        cfg = NetworkConfig(ns=1, nr=3, nd=1)
        h = draw_channels(cfg, 9, size=100000).h_sr[:, :, 0]
        gain = np.sum(np.abs(h) ** 2, axis=-1)
        self.assertGreater(stats.kstest(gain, 'gamma', args=(3, 0, 2)).pvalue, 0.01)

class TestSelection(unittest.TestCase):

    def test_brute_force(self):
        snrs = avg_snr_from_geometry(CFG, 5.0)
        for seed in range(20):
            draw = draw_channels(CFG, seed)
            pairs = list(itertools.product(range(2), range(2)))
            values = [e2e_snr(draw, snrs, i, k) for i, k in pairs]
            best = int(np.argmax(values))
            chosen = select_antennas(draw, snrs)
            self.assertEqual((chosen.i_star, chosen.k_star), pairs[best])
            self.assertAlmostEqual(chosen.snr, values[best], places=12)
            sd = snrs.sd * np.sum(np.abs(draw.h_sd[:, chosen.i_star]) ** 2) / 2
            self.assertGreaterEqual(chosen.snr, sd)

    def test_hand_computed(self):
        draw = draw_channels(CFG, 3)
        snrs = AvgSnrTriple(2.0, 5.0, 3.0)
        sd = 2.0 * np.sum(np.abs(draw.h_sd[:, 1]) ** 2) / 2
        sr = 5.0 * np.sum(np.abs(draw.h_sr[:, 1]) ** 2) / 2
        rd = 3.0 * np.sum(np.abs(draw.h_rd[:, 0]) ** 2) / 2
        self.assertAlmostEqual(e2e_snr(draw, snrs, 1, 0), sd + sr * rd / (sr + rd), places=12)
        with self.assertRaises(ValidationError):
            e2e_snr(draw, snrs, 2, 0)

    def test_single_candidate(self):
        cfg = NetworkConfig(ns=1, nr=1, nd=3)
        chosen = select_antennas(draw_channels(cfg, 0, size=100), AvgSnrTriple(1.0, 2.0, 3.0))
        self.assertTrue(np.all(chosen.i_star == 0) and np.all(chosen.k_star == 0))

    def test_scaling_invariance(self):
        snrs = avg_snr_from_geometry(CFG, 3.0)
        rng = np.random.default_rng(8)
        draw = draw_channels(CFG, rng, size=1000)
        chosen = select_antennas(draw, snrs)
        for scale in rng.uniform(0.01, 100, size=5):
            scaled = ChannelDraw(draw.h_sr * scale, draw.h_sd * scale, draw.h_rd * scale)
            again = select_antennas(scaled, snrs)
            self.assertTrue(np.array_equal(chosen.i_star, again.i_star))
            self.assertTrue(np.array_equal(chosen.k_star, again.k_star))

    def test_harmonic_limits(self):
        draw = draw_channels(CFG, 4)
        sd, sr, rd = branch_snrs(draw, AvgSnrTriple(1.0, 1e9, 2.0))
        relay = e2e_snr(draw, AvgSnrTriple(1.0, 1e9, 2.0), 0, 1) - sd[0]
        self.assertAlmostEqual(relay / rd[1], 1.0, places=6)

        flat = ChannelDraw(np.ones((2, 2), complex), np.ones((2, 2), complex), np.ones((2, 2), complex))
        snrs = AvgSnrTriple(1.0, 4.0, 4.0)
        self.assertAlmostEqual(e2e_snr(flat, snrs, 0, 0) - 1.0, 2.0)

class TestEstimates(unittest.TestCase):

    def setUp(self):
        self.snrs = avg_snr_from_geometry(CFG, 5.0)
        self.p = sep_params(generate('hqam', 16))

    def test_deterministic(self):
        a = aser_semi_analytic(CFG, self.snrs, self.p, 5000, seed=12)
        b = aser_semi_analytic(CFG, self.snrs, self.p, 5000, seed=12)
        self.assertEqual(a, b)
        self.assertNotEqual(a.aser, aser_semi_analytic(CFG, self.snrs, self.p, 5000, seed=13).aser)

    def test_single_trial(self):
        est = aser_semi_analytic(CFG, self.snrs, self.p, 1, seed=21)
        rng = np.random.default_rng(np.random.SeedSequence(21, spawn_key=(0,)))
        snr = select_antennas(draw_channels(CFG, rng, size=1), self.snrs).snr[0]
        self.assertAlmostEqual(est.aser, sep_conditional(self.p, snr), places=15)
        self.assertEqual((est.std_err, est.trials, est.seed), (0.0, 1, 21))

    def test_workers(self):
        trials = 2 * CHUNK + 100
        serial = aser_semi_analytic(CFG, self.snrs, self.p, trials, seed=5)
        parallel = aser_semi_analytic(CFG, self.snrs, self.p, trials, seed=5, workers=3)
        self.assertEqual(serial, parallel)
        self.assertEqual(serial.trials, trials)

    def test_doubling(self):
        c = generate('sqam', 4)
        est = awgn_symbol_sim(c, 1e8, 1000)
        self.assertEqual((est.aser, est.trials), (0.0, 1000))
        low = avg_snr_from_geometry(CFG, 0.0)
        grown = relay_symbol_sim(CFG, low, c, 1000, seed=2, trials_cap=64000)
        self.assertGreater(grown.trials, 1000)
        self.assertLessEqual(grown.trials, 64000)
        self.assertTrue(grown.trials == 64000 or grown.aser == 0
                        or grown.std_err < 0.05 * grown.aser)

    def test_invalid_runs(self):
        for kwargs in (dict(trials=0), dict(trials=10, seed=-1), dict(trials=10, workers=0)):
            with self.assertRaises(ValidationError):
                aser_semi_analytic(CFG, self.snrs, self.p, **kwargs)
        with self.assertRaises(ValidationError):
            awgn_symbol_sim(generate('sqam', 4), 0.0, 10)

    def test_awgn_qpsk(self):
        c = generate('sqam', 4)
        est = awgn_symbol_sim(c, 4.0, 200000, seed=1)
        q = float(q_function(2.0))
        self.assertLess(abs(est.aser - (2 * q - q * q)), 4 * est.std_err)

    def test_noiseless_waveform(self):
        c = generate('hqam', 16)
        est = relay_symbol_sim(CFG, avg_snr_from_geometry(CFG, 80.0), c, 5000, seed=0)
        self.assertEqual(est.aser, 0.0)

    def test_tiers_agree(self):
        for scheme, order in (('sqam', 4), ('sqam', 16)):
            c = generate(scheme, order)
            p = sep_params(c)
            for snr_db in (5.0, 10.0, 15.0):
                snrs = avg_snr_from_geometry(CFG, snr_db)
                semi = aser_semi_analytic(CFG, snrs, p, 100000, seed=31)
                wave = relay_symbol_sim(CFG, snrs, c, 100000, seed=32)
                # an error-free waveform run still has the binomial spread of the expected rate
                binomial = math.sqrt(semi.aser * (1 - semi.aser) / wave.trials)
                se = math.hypot(semi.std_err, max(wave.std_err, binomial))
                self.assertLess(abs(semi.aser - wave.aser), 4 * se, (scheme, order, snr_db))

if __name__ == '__main__':
    unittest.main()
