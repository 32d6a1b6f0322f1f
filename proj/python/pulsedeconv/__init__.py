"""Sparse deconvolution of pulse streams by l1 minimization."""

import json

from ._core import *  # noqa: F401,F403
from ._core import run_summary as _run_summary

__version__ = "0.1.0"


def run_experiment(config):
    """Runs an experiment from a config dict (or JSON string) and returns the summary rows."""
    if not isinstance(config, str):
        config = json.dumps(config)
    return _run_summary(config)
