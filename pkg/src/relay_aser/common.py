#!/usr/bin/env python

"""Sweep configuration, the SNR sweep driver and the command-line interface."""

EVALUATORS = ('closed', 'quadrature', 'mc-semi', 'mc-symbol')

# scheme -> order used when none is configured
DEFAULT_ORDERS = {
    'hqam'   : 8,
    'rqam'   : 8,
    'sqam'   : 16,
    'xqam'   : 32,
    'xqam32' : 32,
}

import getopt
import logging
import math
import platform
import sys
from dataclasses import dataclass, fields
from fractions import Fraction

import numpy as np

from .analytic import (NetworkConfig, aser_closed_form, aser_quadrature,
                       avg_snr_from_geometry, build_cdf_model)
from .constellation import SCHEMES, generate, sep_params
from .errors import NumericalError, ValidationError
from .montecarlo import aser_semi_analytic, relay_symbol_sim
from .version import __version__, script_name
from .util import log, term
from . import csv_output

def _integer(text):
    try:
        return int(text)
    except ValueError:
        x = float(text)
        if not x.is_integer():
            raise ValueError('%r is not an integer' % text)
        return int(x)

def _ratio(text):
    return float(Fraction(text.strip()))

def _evaluators(text):
    names = tuple(e.strip().lower() for e in text.split(',') if e.strip())
    for name in names:
        if name not in EVALUATORS:
            raise ValueError('unknown evaluator %r (choose from %s)' % (name, ', '.join(EVALUATORS)))
    if len(set(names)) != len(names):
        raise ValueError('duplicate evaluator in %r' % text)
    return names

def _optional_float(text):
    return None if text.strip().lower() in ('', 'none') else float(text)

# config key -> converter from text
CONVERTERS = {
    'scheme'       : lambda s: s.strip().lower(),
    'order'        : _integer,
    'mi'           : _integer,
    'mq'           : _integer,
    'sigma'        : float,
    'ns'           : _integer,
    'nr'           : _integer,
    'nd'           : _integer,
    'phi'          : float,
    'dsr_ratio'    : _ratio,
    'drd_ratio'    : _ratio,
    'snr_start_db' : float,
    'snr_stop_db'  : float,
    'snr_step_db'  : float,
    'evaluators'   : _evaluators,
    'trials'       : _integer,
    'seed'         : _integer,
    'output'       : str.strip,
    'workers'      : _integer,
    'trials_cap'   : _integer,
    'target_aser'  : _optional_float,
}

def _invalid(key, message):
    err = ValidationError('%s: %s' % (key, message))
    err.key = key
    return err

@dataclass(frozen=True)
class SweepSpec:
    """A validated sweep request.

    `order` None means the scheme's usual order. `mi`, `mq` and `sigma`
    only apply to RQAM.
    """
    scheme: str = 'hqam'
    order: int = None
    mi: int = None
    mq: int = None
    sigma: float = 1.0
    ns: int = 2
    nr: int = 2
    nd: int = 2
    phi: float = 2.5
    dsr_ratio: float = 1 / 3
    drd_ratio: float = 2 / 3
    snr_start_db: float = 0.0
    snr_stop_db: float = 30.0
    snr_step_db: float = 2.0
    evaluators: tuple = ('closed',)
    trials: int = 10 ** 6
    seed: int = 0
    output: str = 'aser.csv'
    workers: int = 1
    trials_cap: int = 10 ** 8
    target_aser: float = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise _invalid('scheme', 'unknown scheme %r (supported: %s)'
                           % (self.scheme, ', '.join(sorted(SCHEMES))))
        if self.scheme != 'rqam' and (self.mi is not None or self.mq is not None):
            raise _invalid('mi', 'mi and mq only apply to rqam')
        if self.scheme != 'rqam' and self.sigma != 1:
            raise _invalid('sigma', 'sigma only applies to rqam')
        if not self.snr_start_db <= self.snr_stop_db:
            raise _invalid('snr_stop_db', 'start %g dB is above stop %g dB'
                           % (self.snr_start_db, self.snr_stop_db))
        if not self.snr_step_db > 0:
            raise _invalid('snr_step_db', 'step must be positive, got %r' % self.snr_step_db)
        if not self.evaluators:
            raise _invalid('evaluators', 'at least one evaluator is required')
        if 'mc-semi' in self.evaluators and 'mc-symbol' in self.evaluators:
            raise _invalid('evaluators', 'mc-semi and mc-symbol both fill aser_mc; pick one')
        for key, low in (('trials', 1), ('workers', 1), ('seed', 0)):
            if getattr(self, key) < low:
                raise _invalid(key, 'must be at least %d, got %r' % (low, getattr(self, key)))
        if self.trials_cap < self.trials:
            raise _invalid('trials_cap', 'must be at least trials (%d)' % self.trials)
        if self.target_aser is not None and not 0 < self.target_aser < 1:
            raise _invalid('target_aser', 'must lie in (0, 1), got %r' % self.target_aser)
        if not self.output:
            raise _invalid('output', 'empty path')
        try:
            self.network()
        except ValidationError as err:
            key = str(err).split(' ')[0]
            raise _invalid({'d_sr': 'dsr_ratio', 'd_rd': 'drd_ratio'}.get(key, key), err)
        try:
            self.constellation()
        except ValidationError as err:
            raise _invalid('order', err)

    def network(self):
        return NetworkConfig.from_ratios(ns=self.ns, nr=self.nr, nd=self.nd,
                                         dsr_ratio=self.dsr_ratio,
                                         drd_ratio=self.drd_ratio, phi=self.phi)

    def constellation(self):
        if self.scheme == 'rqam':
            order = self.order
            if order is None and self.mi is None:
                order = DEFAULT_ORDERS['rqam']
            return generate('rqam', order, mi=self.mi, mq=self.mq, sigma=self.sigma)
        order = DEFAULT_ORDERS[self.scheme] if self.order is None else self.order
        return generate(self.scheme, order)

    def grid(self):
        """SNR grid in dB, both ends included."""
        count = int(math.floor((self.snr_stop_db - self.snr_start_db) / self.snr_step_db + 1e-9)) + 1
        return [round(self.snr_start_db + k * self.snr_step_db, 12) for k in range(count)]

    def columns(self):
        """CSV columns for the requested evaluators, in schema order."""
        cols = ['snr_db']
        if 'closed' in self.evaluators:
            cols.append('aser_closed')
        if 'quadrature' in self.evaluators:
            cols.append('aser_quadrature')
        if 'mc-semi' in self.evaluators or 'mc-symbol' in self.evaluators:
            cols += ['aser_mc', 'mc_std_err', 'trials']
        return tuple(cols)

@dataclass
class SweepResult:
    snr_db: float
    aser_closed: float = None
    aser_quadrature: float = None
    aser_mc: float = None
    mc_std_err: float = None
    trials: int = None

def parse_config(source, overrides=None):
    """Parse `key = value` text into a SweepSpec.

    Args:
        source: Config text; `#` starts a comment.
        overrides: Optional {key: text} applied over the file, as given on
            the command line.

    Returns:
        A validated SweepSpec. Errors name the offending line (or option).
    """
    values, lines = {}, {}
    for number, raw in enumerate(source.splitlines(), start=1):
        text = raw.split('#', 1)[0].strip()
        if not text:
            continue
        if '=' not in text:
            raise ValidationError('expected "key = value", got %r' % text, line=number)
        key, value = (part.strip() for part in text.split('=', 1))
        key = key.lower()
        if key not in CONVERTERS:
            raise ValidationError('unknown key %r' % key, line=number)
        if key in values:
            raise ValidationError('duplicate key %r (first on line %d)' % (key, lines[key]), line=number)
        if not value:
            raise ValidationError('empty value for %r' % key, line=number)
        try:
            values[key] = CONVERTERS[key](value)
        except ValueError as err:
            raise ValidationError('bad value for %r: %s' % (key, err), line=number)
        lines[key] = number

    for key, value in (overrides or {}).items():
        try:
            values[key] = CONVERTERS[key](value)
        except ValueError as err:
            raise ValidationError('--%s: %s' % (key.replace('_', '-'), err))
        lines.pop(key, None)

    try:
        return SweepSpec(**values)
    except ValidationError as err:
        line = lines.get(getattr(err, 'key', None))
        if line is None:
            raise
        raise ValidationError(str(err), line=line) from err

class SweepProgressBar:
    """One-line progress of the sweep on standard error."""

    def __init__(self, total, stream=None):
        self.stream = sys.stderr if stream is None else stream
        self.total = total
        self.done_points = 0
        self.displayed = False
        width = term.get_terminal_size()[1]
        count_len = len(str(total))
        self.bar_size = max(width - 30 - 2 * count_len, 10)
        self.bar = '{:>5}%% ├{:─<%s}┤[{:>%s}/{:>%s}] {:>8}' % (self.bar_size, count_len, count_len)

    def update(self, snr_db):
        self.done_points += 1
        self.displayed = True
        percent = round(self.done_points * 100 / self.total, 1)
        dots = self.bar_size * self.done_points // self.total
        line = self.bar.format(percent, '█' * dots, self.done_points, self.total, '%g dB' % snr_db)
        self.stream.write('\r' + line)
        self.stream.flush()

    def done(self):
        if self.displayed:
            self.stream.write('\n')
            self.displayed = False

def _with_context(err, snr_db):
    err.args = ('at %g dB: %s' % (snr_db, err.args[0] if err.args else err),) + err.args[1:]
    return err

def _closed_form(model, p, snr_db):
    try:
        return aser_closed_form(model, p)
    except NumericalError as err:
        log.w('%g dB: closed form unavailable (%s)' % (snr_db, err))
        return math.nan

def run_sweep(spec, progress=None):
    """Evaluate every requested evaluator on the SNR grid.

    A closed-form NumericalError becomes `nan` in that row with a warning;
    other evaluator errors propagate with the grid point attached.
    """
    cfg = spec.network()
    c = spec.constellation()
    p = sep_params(c)
    evaluators = set(spec.evaluators)
    rows = []
    for snr_db in spec.grid():
        snrs = avg_snr_from_geometry(cfg, snr_db)
        row = SweepResult(snr_db=float(snr_db))
        try:
            if evaluators & {'closed', 'quadrature'}:
                try:
                    model = build_cdf_model(cfg, snrs)
                except NumericalError as err:
                    if 'quadrature' in evaluators:
                        raise
                    log.w('%g dB: CDF model unavailable (%s)' % (snr_db, err))
                    model = None
                if 'closed' in evaluators:
                    row.aser_closed = math.nan if model is None else _closed_form(model, p, snr_db)
                if 'quadrature' in evaluators:
                    row.aser_quadrature = aser_quadrature(model, p)
            if evaluators & {'mc-semi', 'mc-symbol'}:
                kwargs = dict(seed=spec.seed, workers=spec.workers, trials_cap=spec.trials_cap)
                if 'mc-semi' in evaluators:
                    est = aser_semi_analytic(cfg, snrs, p, spec.trials, **kwargs)
                else:
                    est = relay_symbol_sim(cfg, snrs, c, spec.trials, **kwargs)
                row.aser_mc, row.mc_std_err, row.trials = est.aser, est.std_err, est.trials
        except NumericalError as err:
            raise _with_context(err, snr_db)
        rows.append(row)
        logging.debug('%g dB: %r' % (snr_db, row))
        if progress is not None:
            progress.update(snr_db)
    if progress is not None:
        progress.done()
    return rows

def snr_at_aser(snr_db, aser, target):
    """SNR (dB) where a decreasing ASER curve crosses `target`.

    Interpolates linearly in log10(ASER) between the bracketing grid points
    and skips points that are not positive finite numbers. Returns None if
    the curve never crosses.
    """
    points = [(s, a) for s, a in zip(snr_db, aser)
              if a is not None and np.isfinite(a) and a > 0]
    for (s0, a0), (s1, a1) in zip(points, points[1:]):
        if a0 == target:
            return float(s0)
        if a0 > target > a1:
            t = (math.log10(target) - math.log10(a0)) / (math.log10(a1) - math.log10(a0))
            return float(s0 + t * (s1 - s0))
    if points and points[-1][1] == target:
        return float(points[-1][0])
    return None

def gain_db(curve_a, curve_b, target):
    """Horizontal gap snr_b - snr_a at `target`; curves are (snr_db, aser) pairs.

    Positive when curve a reaches the target at a lower SNR.
    """
    a = snr_at_aser(*curve_a, target)
    b = snr_at_aser(*curve_b, target)
    return None if a is None or b is None else b - a

def _report_targets(spec, rows):
    snr = [r.snr_db for r in rows]
    for column in spec.columns():
        if not column.startswith('aser_'):
            continue
        crossing = snr_at_aser(snr, [getattr(r, column) for r in rows], spec.target_aser)
        if crossing is None:
            log.i('%s never reaches %g on this grid' % (column, spec.target_aser))
        else:
            log.i('%s reaches %g at %.3f dB' % (column, spec.target_aser, crossing))

def script_main(script_name, **kwargs):
    def version():
        log.println('%s:' % script_name, log.BOLD)
        log.println('    version:  %s' % __version__)
        log.println('    platform: %s' % platform.platform())
        log.println('    python:   %s' % sys.version.split('\n')[0])

    logging.basicConfig(format='[%(levelname)s] %(message)s')

    help = 'Usage: %s [OPTION]...\n\n' % script_name
    help += '''Startup options:
    -V | --version                      Print version and exit.
    -h | --help                         Print help and exit.
    -c | --config <PATH>                Read "key = value" settings from PATH.
    -q | --quiet                        No progress bar or informational messages.
    -d | --debug                        Show traceback and other debug info.
    \n'''
    help += '''Modulation options:
         --scheme <hqam|rqam|sqam|xqam> Constellation family (default: hqam).
         --order <M>                    Constellation order.
         --mi <MI> --mq <MQ>            RQAM in-phase and quadrature sizes.
         --sigma <S>                    RQAM quadrature/in-phase spacing ratio.
    \n'''
    help += '''Network options:
         --ns <N> --nr <N> --nd <N>     Source, relay and destination antennas.
         --phi <PHI>                    Pathloss exponent (default: 2.5).
         --dsr-ratio <R>                D_SR / D_SD (default: 1/3).
         --drd-ratio <R>                D_RD / D_SD (default: 2/3).
    \n'''
    help += '''Sweep options:
         --snr-start-db <DB>            First direct-link SNR (default: 0).
         --snr-stop-db <DB>             Last direct-link SNR (default: 30).
         --snr-step-db <DB>             Grid step (default: 2).
         --evaluators <LIST>            Comma list of closed, quadrature,
                                        mc-semi, mc-symbol (default: closed).
         --trials <N>                   Monte Carlo trials per point.
         --trials-cap <N>               Ceiling for automatic trial doubling.
         --seed <N>                     Monte Carlo seed (default: 0).
    -j | --workers <N>                  Monte Carlo worker threads.
         --target-aser <P>              Report the SNR where each curve crosses P.
    -o | --output <FILE>                CSV output path (default: aser.csv).
    '''

    short_opts = 'Vhqdc:o:j:'
    opts = ['version', 'help', 'quiet', 'debug', 'config=']
    opts += ['%s=' % key.replace('_', '-') for key in CONVERTERS]

    try:
        opts, args = getopt.gnu_getopt(sys.argv[1:], short_opts, opts)
    except getopt.GetoptError as err:
        log.e(err)
        log.e("try '%s --help' for more options" % script_name)
        sys.exit(1)

    config_path = None
    overrides = {}
    traceback = False

    for o, a in opts:
        if o in ('-V', '--version'):
            version()
            sys.exit()
        elif o in ('-h', '--help'):
            print(help)
            sys.exit()
        elif o in ('-q', '--quiet'):
            log.quiet = True
        elif o in ('-d', '--debug'):
            traceback = True
            # Set level of root logger to DEBUG
            logging.getLogger().setLevel(logging.DEBUG)
        elif o in ('-c', '--config'):
            config_path = a
        elif o in ('-o', '--output'):
            overrides['output'] = a
        elif o in ('-j', '--workers'):
            overrides['workers'] = a
        elif o.startswith('--') and o[2:].replace('-', '_') in CONVERTERS:
            overrides[o[2:].replace('-', '_')] = a
        else:
            log.e("try '%s --help' for more options" % script_name)
            sys.exit(1)
    if args:
        log.e('unexpected argument(s): %s' % ' '.join(args))
        sys.exit(1)

    try:
        source = ''
        if config_path is not None:
            with open(config_path, encoding='utf-8') as f:
                source = f.read()
        spec = parse_config(source, overrides)
        logging.debug('sweep: %r' % (spec,))

        progress = None
        if not log.quiet and term.is_terminal():
            progress = SweepProgressBar(len(spec.grid()))
        rows = run_sweep(spec, progress)
        csv_output.output(rows, spec.output, spec.columns())
        log.i('wrote %d rows to %s' % (len(rows), spec.output))
        if spec.target_aser is not None:
            _report_targets(spec, rows)
    except KeyboardInterrupt:
        if traceback:
            raise
        sys.exit(1)
    except ValidationError as err:
        if traceback:
            raise
        log.e('[error] %s' % err, exit_code=1)
    except NumericalError as err:
        if traceback:
            raise
        log.e('[error] %s' % err, exit_code=2)
    except OSError as err:
        if traceback:
            raise
        log.e('[error] %s' % err, exit_code=3)
    except Exception:
        if traceback:
            raise
        log.wtf('[error] unexpected failure; run with --debug for the traceback')

def main(**kwargs):
    script_main(script_name, **kwargs)
