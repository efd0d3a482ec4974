#!/usr/bin/env python

from .hqam import *
from .rqam import *
from .sqam import *
from .xqam import *
