import numpy as np
import pytest

from energyreduce.ingest import MINUTE_MS, VARIABLES, AlignedFrame, align
from energyreduce.synth import SynthConfig, generate

T0 = 1_590_969_600_000  # 2020-06-01T00:00:00Z


def contiguous_frame(n, seed=0, start=T0):
    rng = np.random.default_rng(seed)
    minutes = start + MINUTE_MS * np.arange(n)
    cols = {v: rng.normal(size=n) for v in VARIABLES}
    return AlignedFrame(minutes, cols)


@pytest.fixture(scope="session")
def small_synthetic_frame():
    return align(generate(SynthConfig(duration=3000, seed=11)))


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
