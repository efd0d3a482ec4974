#!/usr/bin/env python

script_name = 'relay-aser'
__version__ = '0.1.0'
