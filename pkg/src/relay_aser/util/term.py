#!/usr/bin/env python

import shutil
import sys

def get_terminal_size():
    """Get (height, width) of the current terminal, (24, 80) if unknown."""
    size = shutil.get_terminal_size(fallback=(80, 24))
    return (size.lines, size.columns)

def is_terminal(stream=None):
    stream = sys.stderr if stream is None else stream
    try:
        return stream.isatty()
    except (AttributeError, ValueError):
        return False
