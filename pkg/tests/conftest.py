"""Shared fixtures.

The numba-backed kernels are compiled once per session so individual
tests measure steady-state behaviour rather than JIT latency.
"""

from __future__ import annotations

import sys

import pytest

from hfo import GeneratorConfig, generate
from hfo.kernels import warmup


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    warmup()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Replay the acceptance verdict lines after capture is torn down."""
    mod = sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "VERDICTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def small_trace():
    """Three months, ~25 jobs/day, default failure mix."""
    return generate(GeneratorConfig(seed=101, months=3, jobs_per_day_mean=25.0))


@pytest.fixture(scope="session")
def messy_trace():
    """Trace with discrepancies, cancellations and node failures."""
    cfg = GeneratorConfig(
        seed=202,
        months=3,
        jobs_per_day_mean=20.0,
        discrepancy_rate=0.02,
        cancelled_rate=0.04,
        node_fail_rate=0.002,
    )
    return generate(cfg)
