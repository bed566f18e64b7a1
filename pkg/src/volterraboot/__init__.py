"""Volterra-series bootstrap for time-series hypothesis tests."""

from .bootstrap import (
    ARModel,
    BootstrapDistribution,
    Method,
    ar_sieve_bootstrap_distribution,
    ar_sieve_bootstrap_sample,
    ar_sieve_fit,
    volterra_bootstrap_distribution,
    volterra_bootstrap_sample,
)
from .hypotest import TestConfig, TestResult, bootstrap_pvalue, run_test, studentized_stat
from .procgen import P1, P2, P3, P4, ProcessKind, ProcessSpec, TimeSeries, simulate, true_rho1
from .volterra import KernelSpec, VolterraModel, fit, make_grid, predict, select_model

__version__ = "0.1.0"
