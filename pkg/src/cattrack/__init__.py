"""Closed-loop simulation of a monitored mesoscopic oscillator superposition.

The package has three layers:

* the "truth": a stochastic pure-state trajectory of an oscillator + probe
  qubit on a truncated Fock space (:mod:`cattrack.engine`, built on the
  operator algebra in :mod:`cattrack.fock`),
* the observer: a six-parameter Gaussian-mixture filter driven only by the
  measurement records (:mod:`cattrack.estimator`) and an extremum-triggered
  parametric controller (:mod:`cattrack.controller`),
* the wiring: duty-cycled closed-loop runs, ensembles and NDJSON output
  (:mod:`cattrack.orchestrator`, :mod:`cattrack.records`, :mod:`cattrack.cli`).

Everything is dimensionless: hbar = m = 1 and the effective oscillation
frequency is the unit of rate (so one period is 2*pi time units).
"""

from .errors import CattrackError, ConfigError, NumericalError, TruncationError
from .params import PhysicalParams, PRESETS

__all__ = [
    "CattrackError",
    "ConfigError",
    "NumericalError",
    "TruncationError",
    "PhysicalParams",
    "PRESETS",
]

__version__ = "0.1.0"
