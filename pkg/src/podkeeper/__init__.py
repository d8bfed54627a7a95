"""Authenticated hosting of property-graph databases in managed pods."""

import logging

__version__ = "0.1.0"

logging.getLogger(__name__).addHandler(logging.NullHandler())
