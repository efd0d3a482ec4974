#!/usr/bin/env python

"""Closed-form and simulated ASER of HQAM, RQAM and XQAM over a dual-hop
amplify-and-forward MIMO relay link with transmit antenna selection."""

from .version import __version__
from .__main__ import main
