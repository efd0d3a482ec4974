#!/usr/bin/env python

"""CSV serialization of sweep rows.

Floats are written with repr (shortest text that parses back to the same
double), integers with str and missing closed-form values as `nan`. Lines
end with LF regardless of platform.
"""

import csv
import io
import math
import numbers

from .errors import ValidationError

COLUMNS = ('snr_db', 'aser_closed', 'aser_quadrature', 'aser_mc', 'mc_std_err', 'trials')

def format_field(value):
    if isinstance(value, bool):
        raise ValidationError('boolean is not a CSV value')
    if isinstance(value, numbers.Integral):
        return str(value)
    value = float(value)
    return 'nan' if math.isnan(value) else repr(value)

def parse_field(column, text):
    return int(text) if column == 'trials' else float(text)

def dumps(rows, columns=COLUMNS):
    """Rows (objects with one attribute per column) as CSV text."""
    rows = list(rows)
    if not rows:
        raise ValidationError('no rows to write')
    unknown = [c for c in columns if c not in COLUMNS]
    if unknown:
        raise ValidationError('unknown CSV column(s): %s' % ', '.join(unknown))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator='\n')
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_field(getattr(row, c)) for c in columns])
    return buf.getvalue()

def loads(text):
    """Parse CSV text written by `dumps` into (columns, list of dicts)."""
    reader = csv.reader(io.StringIO(text))
    columns = tuple(next(reader))
    return columns, [{c: parse_field(c, f) for c, f in zip(columns, fields)} for fields in reader]

def output(rows, path, columns=COLUMNS):
    """Write rows to `path`; I/O failures propagate as OSError naming the path."""
    text = dumps(rows, columns)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write(text)
