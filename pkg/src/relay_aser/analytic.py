#!/usr/bin/env python

"""Outage CDF upper bound of the TAS relay link and the ASER it implies.

The end-to-end CDF is the product of

    F_SD(x)  = sum C1 x^w exp(-v x / l0)                      (direct link)
    F_SRD(x) = 1 + sum C23 exp(-T x) x^p K_theta(beta x)      (relayed link)

with l0, l1, l2 the average SD, SR and RD SNRs. The ASER is
-int_0^inf P'(x) F_SD(x) F_SRD(x) dx, where P' is the derivative of the
conditional SEP as produced by `constellation.derivative_atoms`. Every atom
times every CDF term integrates in closed form; `aser_quadrature` computes
the same integral numerically.
"""

import logging
import math
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .constellation import derivative_atoms, evaluate_atoms
from .errors import (ConvergenceError, OverflowReport, PrecisionLossError,
                     RangeError, ValidationError)
from .specfun import (DEFAULT_SERIES, hyp2f1, log_bessel_k, log_gamma,
                      multinomial_omega)

__all__ = ['NetworkConfig', 'AvgSnrTriple', 'CdfModel', 'DirectTerm',
           'RelayTerm', 'db_to_linear', 'avg_snr_from_geometry',
           'build_cdf_model', 'cdf_direct', 'cdf_relayed', 'cdf_e2e',
           'outage', 'aser_closed_form', 'aser_quadrature',
           'integrate_sep_against_cdf']

# relative rounding error assumed per summed term
SUM_EPS = 1e-13
# a closed-form sum must exceed its rounding estimate by this factor;
# SUM_EPS runs about two decades above the observed error, so a 1e-4
# estimate keeps the result within 1e-5 of quadrature
PRECISION_MARGIN = 1e4
# K_nu small-argument expansion threshold
SMALL_BESSEL_ARG = 1e-8
# lattice columns evaluated per z-series step
SERIES_CHUNK = 32
# F_SRD(0) must vanish to this tolerance
ORIGIN_TOL = 1e-8

@dataclass(frozen=True)
class NetworkConfig:
    """Antenna counts and geometry of the source-relay-destination network.

    Distances share any length unit; only their ratios matter. The defaults
    place the relay at a third of the SD distance with pathloss exponent 2.5.
    """
    ns: int = 2
    nr: int = 2
    nd: int = 2
    d_sd: float = 1.0
    d_sr: float = 1 / 3
    d_rd: float = 2 / 3
    phi: float = 2.5

    def __post_init__(self):
        for name in ('ns', 'nr', 'nd'):
            n = getattr(self, name)
            if isinstance(n, bool) or int(n) != n or n < 1:
                raise ValidationError('%s must be a positive integer, got %r' % (name, n))
        for name in ('d_sd', 'd_sr', 'd_rd'):
            d = getattr(self, name)
            if not (d > 0 and math.isfinite(d)):
                raise ValidationError('%s must be a positive distance, got %r' % (name, d))
        if not (self.phi >= 0 and math.isfinite(self.phi)):
            raise ValidationError('phi must be non-negative, got %r' % self.phi)

    @classmethod
    def from_ratios(cls, ns=2, nr=2, nd=2, dsr_ratio=1 / 3, drd_ratio=2 / 3, phi=2.5):
        """Geometry as D_SR/D_SD and D_RD/D_SD."""
        return cls(ns=ns, nr=nr, nd=nd, d_sd=1.0, d_sr=dsr_ratio, d_rd=drd_ratio, phi=phi)

@dataclass(frozen=True)
class AvgSnrTriple:
    """Average linear SNRs: sd (l0), sr (l1) and rd (l2)."""
    sd: float
    sr: float
    rd: float

    def __post_init__(self):
        for name in ('sd', 'sr', 'rd'):
            x = getattr(self, name)
            if not (x > 0 and math.isfinite(x)):
                raise ValidationError('average SNR %s must be positive, got %r' % (name, x))

DirectTerm = namedtuple('DirectTerm', ['v', 'w', 'sign', 'log_coef'])
DirectTerm.coef = property(lambda t: t.sign * math.exp(t.log_coef))

RelayTerm = namedtuple('RelayTerm', ['i', 'j', 'm', 'n', 'r', 'sign', 'log_coef',
                                     'chi', 't', 'theta', 'power'])
RelayTerm.coef = property(lambda t: t.sign * math.exp(t.log_coef))

@dataclass(frozen=True, eq=False)
class CdfModel:
    """Index tuples and coefficients of the end-to-end CDF bound.

    Coefficients are kept as sign and log-magnitude. `arrays` holds the same
    terms as numpy columns, plus the relay terms merged by (i, m, |theta|, p),
    which is all the closed form depends on.
    """
    config: NetworkConfig
    snrs: AvgSnrTriple
    direct_terms: tuple
    relay_terms: tuple
    arrays: dict = field(repr=False)
    origin: float = 0.0

def db_to_linear(db):
    return 10 ** (np.asarray(db, dtype=float) / 10)

def avg_snr_from_geometry(cfg, snr_db):
    """Per-link average SNRs from the direct-link SNR in dB."""
    l0 = float(db_to_linear(snr_db))
    return AvgSnrTriple(sd=l0,
                        sr=l0 * (cfg.d_sd / cfg.d_sr) ** cfg.phi,
                        rd=l0 * (cfg.d_sd / cfg.d_rd) ** cfg.phi)

def _log_comb(n, k):
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)

def _direct_terms(cfg, snrs):
    terms = []
    for v in range(cfg.ns + 1):
        for w in range(v * (cfg.nd - 1) + 1):
            omega = multinomial_omega(w, v, cfg.nd)
            terms.append(DirectTerm(v, w, -1 if v % 2 else 1,
                                    _log_comb(cfg.ns, v) + math.log(omega) - w * math.log(snrs.sd)))
    return terms

def _relay_terms(cfg, snrs):
    ns, nr, nd = cfg.ns, cfg.nr, cfg.nd
    log_l1, log_l2 = math.log(snrs.sr), math.log(snrs.rd)
    base = math.log(2 * nr) - math.lgamma(nd)
    terms = []
    for i in range(1, ns + 1):
        for m in range(nr):
            chi = i * (m + 1) / (snrs.sr * snrs.rd)
            t = i / snrs.sr + (m + 1) / snrs.rd
            sign = -1 if (i + m) % 2 else 1
            head = base + _log_comb(ns, i) + _log_comb(nr - 1, m)
            for j in range(i * (nr - 1) + 1):
                log_oj = math.log(multinomial_omega(j, i, nr))
                for n in range(m * (nd - 1) + 1):
                    log_on = math.log(multinomial_omega(n, m, nd))
                    power = j + n + nd
                    for r in range(power):
                        theta = r - j + 1
                        log_coef = (head + _log_comb(power - 1, r) + log_oj + log_on
                                    - (r + j + 1) / 2 * log_l1
                                    - (2 * nd + 2 * n + j - r - 1) / 2 * log_l2
                                    + theta / 2 * (math.log(i) - math.log(m + 1)))
                        terms.append(RelayTerm(i, j, m, n, r, sign, log_coef, chi, t, theta, power))
    return terms

def _merge_groups(keys, signs, logs):
    """Merge signed log-magnitude coefficients sharing a key row.

    Returns (unique keys, sign, log |sum|).
    """
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = np.ravel(inverse)
    peak = np.full(len(uniq), -np.inf)
    np.maximum.at(peak, inverse, logs)
    total = np.zeros(len(uniq))
    np.add.at(total, inverse, signs * np.exp(logs - peak[inverse]))
    with np.errstate(divide='ignore'):
        return uniq, np.sign(total), np.log(np.abs(total)) + peak

def _signed_sum(signs, logs):
    """Sum of signs*exp(logs) over axis 0.

    Pairwise summation with a math.fsum fallback for heavily cancelling
    columns. Returns (total, sum of magnitudes), both shaped like logs[0].
    """
    logs = np.asarray(logs, dtype=float)
    with np.errstate(over='ignore'):
        values = np.asarray(signs, dtype=float) * np.exp(logs)
    if not np.all(np.isfinite(values)):
        raise OverflowReport('term magnitude overflows double precision')
    shape = logs.shape[1:]
    columns = np.ascontiguousarray(values.reshape(len(values), -1).T)
    total = np.sum(columns, axis=1)
    absolute = np.abs(columns)
    weak = np.abs(total) < 1e-6 * absolute.max(axis=1, initial=0.0)
    for k in np.flatnonzero(weak):
        total[k] = math.fsum(columns[k])
    return total.reshape(shape), absolute.sum(axis=1).reshape(shape)

def build_cdf_model(cfg, snrs):
    """Enumerate every index tuple of the CDF bound for one SNR triple."""
    direct = _direct_terms(cfg, snrs)
    relay = _relay_terms(cfg, snrs)

    arrays = dict(
        direct_v=np.array([t.v for t in direct], dtype=float),
        direct_w=np.array([t.w for t in direct], dtype=float),
        direct_sign=np.array([t.sign for t in direct], dtype=float),
        direct_log=np.array([t.log_coef for t in direct]),
        relay_sign=np.array([t.sign for t in relay], dtype=float),
        relay_log=np.array([t.log_coef for t in relay]),
        relay_t=np.array([t.t for t in relay]),
        relay_beta=np.array([2 * math.sqrt(t.chi) for t in relay]),
        relay_nu=np.array([abs(t.theta) for t in relay], dtype=float),
        relay_power=np.array([t.power for t in relay], dtype=float),
    )

    keys = np.array([(t.i, t.m, abs(t.theta), t.power) for t in relay], dtype=float)
    groups, g_sign, g_log = _merge_groups(keys, arrays['relay_sign'], arrays['relay_log'])
    live = g_sign != 0
    i, m = groups[live, 0], groups[live, 1]
    arrays.update(
        group_i=i, group_m=m, group_nu=groups[live, 2], group_power=groups[live, 3],
        group_sign=g_sign[live], group_log=g_log[live],
        group_t=i / snrs.sr + (m + 1) / snrs.rd,
        group_beta=2 * np.sqrt(i * (m + 1) / (snrs.sr * snrs.rd)),
    )

    # x^p K_nu(beta x) -> 0.5 Gamma(nu) (2/beta)^nu when p == nu, else 0
    nu, power = arrays['relay_nu'], arrays['relay_power']
    hit = (power == nu) & (nu >= 1)
    limit_log = (arrays['relay_log'][hit] + log_gamma(nu[hit]) - math.log(2)
                 + nu[hit] * np.log(2 / arrays['relay_beta'][hit]))
    origin, _ = _signed_sum(np.append(arrays['relay_sign'][hit], 1.0), np.append(limit_log, 0.0))
    origin = float(origin)
    if abs(origin) > ORIGIN_TOL:
        raise PrecisionLossError('relayed CDF at the origin is %.3g, not 0' % origin)

    logging.debug('CDF model %dx%dx%d: %d direct terms, %d relay terms, %d relay groups'
                  % (cfg.ns, cfg.nr, cfg.nd, len(direct), len(relay), int(live.sum())))
    return CdfModel(config=cfg, snrs=snrs, direct_terms=tuple(direct),
                    relay_terms=tuple(relay), arrays=arrays, origin=origin)

def _as_snr(snr):
    x = np.asarray(snr, dtype=float)
    if np.any(np.isnan(x)) or np.any(x < 0):
        raise ValidationError('SNR must be non-negative')
    return x

def _shaped(values, like):
    return float(values[0]) if like.ndim == 0 else values.reshape(like.shape)

def cdf_direct(model, snr):
    """CDF of the best direct-link MRC SNR; F_SD(inf) = 1."""
    x = _as_snr(snr)
    flat = np.atleast_1d(x).ravel()
    out = np.ones(flat.shape)
    finite = np.isfinite(flat)
    if finite.any():
        a = model.arrays
        w = a['direct_w'][:, None]
        with np.errstate(divide='ignore', invalid='ignore'):
            log_x = np.log(flat[finite])[None, :]
            # x^0 = 1 at x = 0
            logs = (a['direct_log'][:, None] + np.where(w == 0, 0.0, w * log_x)
                    - a['direct_v'][:, None] * flat[finite][None, :] / model.snrs.sd)
        total, _ = _signed_sum(np.broadcast_to(a['direct_sign'][:, None], logs.shape), logs)
        out[finite] = total
    return _shaped(out, x)

def cdf_relayed(model, snr):
    """CDF of the best two-hop harmonic SNR; the origin is the analytic limit."""
    x = _as_snr(snr)
    flat = np.atleast_1d(x).ravel()
    out = np.where(np.isinf(flat), 1.0, model.origin)
    positive = (flat > 0) & np.isfinite(flat)
    if positive.any():
        a = model.arrays
        lam = flat[positive][None, :]
        nu = a['relay_nu'][:, None]
        arg = a['relay_beta'][:, None] * lam
        with np.errstate(over='ignore', divide='ignore'):
            log_k = log_bessel_k(nu, arg)
            small = ((arg < SMALL_BESSEL_ARG) & (nu >= 1)) | ~np.isfinite(log_k)
            expansion = log_gamma(np.maximum(nu, 1)) - math.log(2) + nu * np.log(2 / arg)
        log_k = np.where(small, expansion, log_k)
        logs = (a['relay_log'][:, None] + a['relay_power'][:, None] * np.log(lam)
                - a['relay_t'][:, None] * lam + log_k)
        signs = np.broadcast_to(a['relay_sign'][:, None], logs.shape)
        ones = np.zeros((1, logs.shape[1]))
        total, _ = _signed_sum(np.vstack([np.ones_like(ones), signs]), np.vstack([ones, logs]))
        out[positive] = total
    return _shaped(out, x)

def cdf_e2e(model, snr):
    """Upper bound of the end-to-end outage CDF, F_SD * F_SRD."""
    return cdf_direct(model, snr) * cdf_relayed(model, snr)

def outage(model, threshold):
    """Outage probability at a linear SNR threshold."""
    return cdf_e2e(model, threshold)

def _log_bessel_exp_integral(mu, a, beta, nu):
    """ln int_0^inf x^(mu-1) exp(-a x) K_nu(beta x) dx, for mu > nu >= 0, a > beta > 0."""
    ratio = (a - beta) / (a + beta)
    series = hyp2f1(mu + nu, nu + 0.5, mu + 0.5, ratio)
    # lattice cells with mu <= nu belong to other blocks and are never read
    return (0.5 * math.log(math.pi) + nu * np.log(2 * beta) + log_gamma(mu + nu)
            + special.gammaln(mu - nu) - log_gamma(mu + 0.5) - (mu + nu) * np.log(a + beta)
            + np.log(series))

def _z_series(block, mu0, a, beta, nu, kappas, series):
    """ln sum_z kappa^z / (3/2)_z J(mu0 + z) for every kappa.

    J is `_log_bessel_exp_integral` for the block's (a, beta, nu); `block`
    and `mu0` index the requested entries. The J lattice is shared by all mu0
    and kappa values; the sum stops once every series is past its peak and
    its newest term is below `series.rel_tol` of the running sum.
    """
    lo, hi = int(mu0.min()), int(mu0.max())
    width = hi - lo + 1
    log_kappa = np.log(np.asarray(kappas, dtype=float))[:, None, None]
    acc = np.full((len(kappas), len(a), width), -np.inf)
    tail = np.full_like(acc, -np.inf)
    before = np.full_like(acc, -np.inf)
    log_tol = math.log(series.rel_tol)

    start = 0
    while True:
        cols = np.arange(start, start + SERIES_CHUNK)
        log_j = _log_bessel_exp_integral((lo + cols)[None, :], a[:, None], beta[:, None], nu[:, None])
        for q in range(width):
            z = cols - q
            keep = z >= 0
            if not keep.any():
                continue
            z = z[keep]
            log_c = z * log_kappa - (log_gamma(1.5 + z) - log_gamma(1.5))
            terms = log_c + log_j[None, :, keep]
            acc[:, :, q] = np.logaddexp(acc[:, :, q], np.logaddexp.reduce(terms, axis=2))
            before[:, :, q] = terms[:, :, -2] if len(z) > 1 else tail[:, :, q]
            tail[:, :, q] = terms[:, :, -1]
        start += SERIES_CHUNK
        count = start - (width - 1)
        with np.errstate(invalid='ignore'):
            if count > 1 and np.all(tail < before) and np.all(tail - acc < log_tol):
                break
            if count >= series.max_terms:
                raise ConvergenceError('z-series did not converge in %d terms' % series.max_terms,
                                       error_estimate=float(np.nanmax(np.exp(tail - acc))))
    logging.debug('z-series: %d terms, %d blocks, %d start orders' % (count, len(a), width))
    return acc[:, block, (mu0 - lo).astype(int)]

def aser_closed_form(model, p, series=DEFAULT_SERIES):
    """Closed-form ASER under the CDF bound.

    Raises:
        ConvergenceError: a z-series hit `series.max_terms`.
        OverflowReport: a term is not representable.
        PrecisionLossError: the alternating sum cancels below its rounding
            error estimate.
        RangeError: the result is outside [0, 1+1e-9].
    """
    roots, hyps = derivative_atoms(p)
    a = model.arrays
    l0 = model.snrs.sd
    signs, logs = [], []

    def add(sign, log):
        log = np.asarray(log, dtype=float)
        signs.append(np.broadcast_to(sign, log.shape).ravel())
        logs.append(log.ravel())

    g_power, g_nu = a['group_power'][:, None], a['group_nu'][:, None]
    blocks, block_of = np.unique(np.stack([a['group_i'], a['group_m'], a['group_nu']], axis=1),
                                 axis=0, return_inverse=True)
    block_of = np.ravel(block_of)
    b_beta = 2 * np.sqrt(blocks[:, 0] * (blocks[:, 1] + 1) / (model.snrs.sr * model.snrs.rd))
    b_t = blocks[:, 0] / model.snrs.sr + (blocks[:, 1] + 1) / model.snrs.rd

    hyp_rates = {}
    for atom in hyps:
        hyp_rates.setdefault(atom.rate, []).append(atom)

    for v in np.unique(a['direct_v']):
        rows = a['direct_v'] == v
        w = a['direct_w'][rows]
        c1_sign, c1_log = a['direct_sign'][rows], a['direct_log'][rows]
        shift = v / l0

        # direct link
        for coef, rate in roots:
            rate_v = rate + shift
            add(np.sign(coef) * c1_sign,
                math.log(abs(coef)) + c1_log + log_gamma(w + 0.5) - (w + 0.5) * math.log(rate_v))
        for coef, rate, kappa in hyps:
            rate_v = rate + shift
            add(np.sign(coef) * c1_sign,
                math.log(abs(coef)) + c1_log + log_gamma(w + 1) - (w + 1) * math.log(rate_v)
                + np.log(hyp2f1(1.0, w + 1, 1.5, kappa / rate_v)))

        # relayed link
        pair_sign = a['group_sign'][:, None] * c1_sign[None, :]
        pair_log = a['group_log'][:, None] + c1_log[None, :]
        for coef, rate in roots:
            log_j = _log_bessel_exp_integral(g_power + w[None, :] + 0.5,
                                             a['group_t'][:, None] + shift + rate,
                                             a['group_beta'][:, None], g_nu)
            add(np.sign(coef) * pair_sign, math.log(abs(coef)) + pair_log + log_j)
        for rate, atoms in hyp_rates.items():
            mu0 = g_power + w[None, :] + 1
            log_s = _z_series(block_of[:, None], mu0, b_t + shift + rate, b_beta, blocks[:, 2],
                              [atom.kappa for atom in atoms], series)
            for atom, log_sk in zip(atoms, log_s):
                add(np.sign(atom.coef) * pair_sign, math.log(abs(atom.coef)) + pair_log + log_sk)

    total, magnitude = _signed_sum(np.concatenate(signs), np.concatenate(logs))
    aser, magnitude = -float(total), float(magnitude)
    noise = SUM_EPS * magnitude
    logging.debug('closed form %s: %d terms, value %.6g, rounding estimate %.3g'
                  % (p.scheme, len(np.concatenate(signs)), aser, noise))
    if abs(aser) < PRECISION_MARGIN * noise:
        raise PrecisionLossError('closed-form sum %.3g is below %g x its rounding estimate %.3g'
                                 % (aser, PRECISION_MARGIN, noise))
    if not 0 <= aser <= 1 + 1e-9:
        raise RangeError('closed-form ASER %.6g is outside [0, 1]' % aser)
    return aser

def integrate_sep_against_cdf(p, cdf, epsabs=1e-12, epsrel=1e-8, limit=200):
    """-int_0^inf P'(x) cdf(x) dx by adaptive quadrature in t = sqrt(x).

    `cdf` is any callable of a scalar linear SNR. The substitution removes
    the x^(-1/2) endpoint singularity of P'. The range is split where the
    slowest exponential in P' has decayed by e^-60.
    """
    atoms = derivative_atoms(p)
    roots, hyps = atoms
    slowest = min([atom.rate for atom in roots] + [atom.rate - atom.kappa for atom in hyps])
    origin = -2 * sum(atom.coef for atom in roots)

    def integrand(t):
        if t == 0:
            return origin * cdf(0.0)
        x = t * t
        return -float(evaluate_atoms(atoms, x)) * cdf(x) * 2 * t

    split = math.sqrt(60 / slowest)
    value, error = 0.0, 0.0
    for lo, hi in ((0, split), (split, np.inf)):
        out = integrate.quad(integrand, lo, hi, epsabs=epsabs, epsrel=epsrel,
                             limit=limit, full_output=1)
        y, err = out[0], out[1]
        if len(out) > 3 and err > max(epsabs, epsrel * abs(y)):
            raise ConvergenceError('quadrature on [%g, %g]: %s' % (lo, hi, out[3]),
                                   error_estimate=err)
        value += y
        error += err
    logging.debug('quadrature %.10g, error estimate %.3g' % (value, error))
    return value

def aser_quadrature(model, p, epsabs=1e-12, epsrel=1e-8):
    """ASER by numerical integration against `cdf_e2e`."""
    return integrate_sep_against_cdf(p, lambda x: cdf_e2e(model, x),
                                     epsabs=epsabs, epsrel=epsrel)
