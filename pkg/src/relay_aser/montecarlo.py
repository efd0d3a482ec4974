#!/usr/bin/env python

"""Channel-level simulation of the TAS relay link.

Channel entries are circularly symmetric complex Gaussians with unit variance
per dimension (E|h|^2 = 2). Branch SNRs are normalized as
avg_snr * ||h||^2 / 2, so each branch is a unit-mean exponential times the
average SNR, the same convention the analytic CDF uses.

Trials run in chunks of `CHUNK`. Chunk k draws from
SeedSequence(seed, spawn_key=(k,)) and chunk moments are merged in chunk
order, so any number of workers returns the same estimate.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .constellation import detect, sep_conditional
from .errors import ValidationError

__all__ = ['CHUNK', 'ChannelDraw', 'SimEstimate', 'SelectionResult',
           'draw_channels', 'branch_snrs', 'e2e_snr', 'select_antennas',
           'aser_semi_analytic', 'relay_symbol_sim', 'awgn_symbol_sim']

CHUNK = 1 << 16
# doubling stops once std_err / aser falls below this
TARGET_REL_ERR = 0.05

@dataclass(frozen=True, eq=False)
class ChannelDraw:
    """h_sr: (..., NR, NS), h_sd: (..., ND, NS), h_rd: (..., ND, NR).

    Column i of h_sr and h_sd belongs to source antenna i, column k of h_rd
    to relay antenna k. Leading axes, if any, index independent draws.
    """
    h_sr: np.ndarray
    h_sd: np.ndarray
    h_rd: np.ndarray

@dataclass(frozen=True)
class SimEstimate:
    """Sample mean of per-trial values and its standard error,
    sqrt(sample variance / trials)."""
    aser: float
    std_err: float
    trials: int
    seed: int

@dataclass(frozen=True)
class SelectionResult:
    i_star: int
    k_star: int
    snr: float

def draw_channels(cfg, rng, size=None):
    """Draw one set of channel matrices, or `size` of them stacked.

    `rng` is a numpy Generator or anything `default_rng` accepts.
    """
    rng = np.random.default_rng(rng)
    lead = () if size is None else (int(size),)

    def gauss(rows, cols):
        shape = lead + (rows, cols)
        return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

    return ChannelDraw(h_sr=gauss(cfg.nr, cfg.ns),
                       h_sd=gauss(cfg.nd, cfg.ns),
                       h_rd=gauss(cfg.nd, cfg.nr))

def branch_snrs(draw, snrs):
    """Instantaneous SNRs per candidate: (sd[..., NS], sr[..., NS], rd[..., NR])."""
    def gain(h):
        return np.sum(np.abs(h) ** 2, axis=-2) / 2
    return snrs.sd * gain(draw.h_sd), snrs.sr * gain(draw.h_sr), snrs.rd * gain(draw.h_rd)

def _e2e_table(sd, sr, rd):
    sr, rd = sr[..., :, None], rd[..., None, :]
    return sd[..., :, None] + sr * rd / (sr + rd)

def e2e_snr(draw, snrs, i, k):
    """Direct plus harmonic-form relayed SNR for source antenna i, relay antenna k."""
    sd, sr, rd = branch_snrs(draw, snrs)
    if not (0 <= i < sd.shape[-1] and 0 <= k < rd.shape[-1]):
        raise ValidationError('antenna pair (%r, %r) out of range' % (i, k))
    value = sd[..., i] + sr[..., i] * rd[..., k] / (sr[..., i] + rd[..., k])
    return float(value) if np.ndim(value) == 0 else value

def select_antennas(draw, snrs):
    """Joint (i, k) maximizing the end-to-end SNR; ties go to the first pair
    in row-major order."""
    table = _e2e_table(*branch_snrs(draw, snrs))
    nr = table.shape[-1]
    flat = table.reshape(table.shape[:-2] + (-1,))
    best = np.argmax(flat, axis=-1)
    snr = np.take_along_axis(flat, best[..., None], axis=-1)[..., 0]
    if np.ndim(best) == 0:
        return SelectionResult(i_star=int(best) // nr, k_star=int(best) % nr, snr=float(snr))
    return SelectionResult(i_star=best // nr, k_star=best % nr, snr=snr)

class _Moments():
    """Count, mean and sum of squared deviations of a sample."""

    def __init__(self, count=0, mean=0.0, m2=0.0):
        self.count, self.mean, self.m2 = count, mean, m2

    @classmethod
    def of(cls, values):
        values = np.asarray(values, dtype=float)
        mean = float(np.mean(values))
        return cls(len(values), mean, float(np.sum((values - mean) ** 2)))

    def merge(self, other):
        count = self.count + other.count
        if not self.count:
            return _Moments(other.count, other.mean, other.m2)
        delta = other.mean - self.mean
        return _Moments(count,
                        self.mean + delta * other.count / count,
                        self.m2 + other.m2 + delta * delta * self.count * other.count / count)

    @property
    def std_err(self):
        if self.count < 2:
            return 0.0
        return math.sqrt(self.m2 / (self.count - 1) / self.count)

def _check_run(trials, seed, workers):
    if isinstance(trials, bool) or int(trials) != trials or trials < 1:
        raise ValidationError('trials must be a positive integer, got %r' % trials)
    if isinstance(seed, bool) or int(seed) != seed or seed < 0:
        raise ValidationError('seed must be a non-negative integer, got %r' % seed)
    if int(workers) != workers or workers < 1:
        raise ValidationError('workers must be a positive integer, got %r' % workers)

def _run_chunks(kernel, first, trials, seed, workers):
    """Moments of chunks first, first+1, ... covering `trials` more trials."""
    sizes = [CHUNK] * (trials // CHUNK)
    if trials % CHUNK:
        sizes.append(trials % CHUNK)

    def job(args):
        index, size = args
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))
        return _Moments.of(kernel(rng, size))

    jobs = list(enumerate(sizes, start=first))
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(job, jobs))
    return [job(j) for j in jobs]

def _estimate(kernel, trials, seed, workers=1, trials_cap=None):
    """Run `kernel(rng, n) -> per-trial values` and average.

    With `trials_cap`, the trial count doubles while the relative standard
    error is at least TARGET_REL_ERR and the estimate is non-zero.
    """
    _check_run(trials, seed, workers)
    chunks = _run_chunks(kernel, 0, int(trials), seed, workers)
    total = _Moments()
    for m in chunks:
        total = total.merge(m)

    while (trials_cap is not None and total.mean > 0
           and total.std_err >= TARGET_REL_ERR * total.mean
           and total.count < trials_cap):
        extra = min(total.count, int(trials_cap) - total.count)
        more = _run_chunks(kernel, len(chunks), extra, seed, workers)
        chunks += more
        for m in more:
            total = total.merge(m)
        logging.debug('doubled to %d trials (rel. error %.3g)'
                      % (total.count, total.std_err / total.mean))

    logging.debug('%d trials in %d chunks, estimate %.6g +- %.3g'
                  % (total.count, len(chunks), total.mean, total.std_err))
    return SimEstimate(aser=total.mean, std_err=total.std_err, trials=total.count, seed=int(seed))

def aser_semi_analytic(cfg, snrs, p, trials, seed=0, workers=1, trials_cap=None):
    """Mean conditional SEP at the selected pair's end-to-end SNR."""
    def kernel(rng, n):
        draw = draw_channels(cfg, rng, size=n)
        return sep_conditional(p, select_antennas(draw, snrs).snr)

    return _estimate(kernel, trials, seed, workers, trials_cap)

def _cn(rng, shape):
    """CN(0, 1) samples."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)

def _mrc(h, y):
    """Project y onto h / ||h|| along the antenna axis."""
    norm = np.sqrt(np.sum(np.abs(h) ** 2, axis=-1))
    return np.sum(np.conj(h) * y, axis=-1) / norm, norm

def relay_symbol_sim(cfg, snrs, c, trials, seed=0, workers=1, trials_cap=None):
    """Symbol error rate of the two-slot AF waveform.

    Slot 1: the selected source antenna i transmits; relay and destination
    receive with CN(0, 1) noise and combine their antennas. Slot 2: the
    relay scales by 1/sqrt(SNR_SR) and transmits on antenna k. The
    destination combines both slots with weights a / var for signal
    amplitude a and noise variance var of each branch, then detects.
    """
    def kernel(rng, n):
        draw = draw_channels(cfg, rng, size=n)
        chosen = select_antennas(draw, snrs)
        rows = np.arange(n)
        h_sd = draw.h_sd[rows, :, chosen.i_star]
        h_sr = draw.h_sr[rows, :, chosen.i_star]
        h_rd = draw.h_rd[rows, :, chosen.k_star]

        sent = rng.integers(0, c.order, size=n)
        x = c.points[sent][:, None]

        y_sd = math.sqrt(snrs.sd / 2) * h_sd * x + _cn(rng, h_sd.shape)
        y_sr = math.sqrt(snrs.sr / 2) * h_sr * x + _cn(rng, h_sr.shape)
        direct, g_sd = _mrc(h_sd, y_sd)
        at_relay, g_sr = _mrc(h_sr, y_sr)

        snr_sd = snrs.sd * g_sd ** 2 / 2
        snr_sr = snrs.sr * g_sr ** 2 / 2
        forwarded = at_relay / np.sqrt(snr_sr)
        y_rd = math.sqrt(snrs.rd / 2) * h_rd * forwarded[:, None] + _cn(rng, h_rd.shape)
        relayed, g_rd = _mrc(h_rd, y_rd)
        snr_rd = snrs.rd * g_rd ** 2 / 2

        amp_sd, amp_rd = np.sqrt(snr_sd), np.sqrt(snr_rd)
        var_rd = snr_rd / snr_sr + 1
        combined = ((amp_sd * direct + amp_rd * relayed / var_rd)
                    / (snr_sd + snr_rd / var_rd))
        return detect(combined, c) != sent

    return _estimate(kernel, trials, seed, workers, trials_cap)

def awgn_symbol_sim(c, snr, trials, seed=0, workers=1):
    """Symbol error rate at a fixed linear SNR with CN(0, 1/snr) noise."""
    if not snr > 0:
        raise ValidationError('SNR must be positive, got %r' % snr)
    scale = 1 / math.sqrt(snr)

    def kernel(rng, n):
        sent = rng.integers(0, c.order, size=n)
        received = c.points[sent] + scale * _cn(rng, n)
        return detect(received, c) != sent

    return _estimate(kernel, trials, seed, workers)
