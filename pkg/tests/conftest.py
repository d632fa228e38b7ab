import numpy as np
import pytest

from ptrs_lab.allocation import BlockRaisedCosine, BlockSinc, NrDistributed, UniformInterleaved
from ptrs_lab.harness import Scenario
from ptrs_lab.phase_noise import PhaseTrajectory
from ptrs_lab.signal import FrameConfig


def table1_scenarios(**kw):
    """The three sweep schemes plus the NR grouped layout, noiseless and PN-free."""
    n = 2048
    return {
        "nr": Scenario(FrameConfig(n, 96, 32), UniformInterleaved(3, 128), name="nr", **kw),
        "blk": Scenario(FrameConfig(n, 128, 32, g_f=8, ptrs_guard_bins=4), BlockSinc(32), name="blk", **kw),
        "rc": Scenario(FrameConfig(n, 128, 16, g_f=8, ptrs_guard_bins=4), BlockRaisedCosine(16), name="rc", **kw),
        "nr_grouped": Scenario(FrameConfig(1024, 88, 32, cp_len=72, ptrs_amp_scale=2 ** -0.5),
                               NrDistributed(8, 4, 120), name="nr_grouped", **kw),
    }


def tone_trajectory(cfg: FrameConfig, cycles, amps, phases=None) -> PhaseTrajectory:
    """Sum of sinusoids, ``cycles`` per symbol duration T, periodic over the CP-free symbol."""
    phases = np.zeros(len(cycles)) if phases is None else phases
    t = (np.arange(cfg.n_ifft + cfg.cp_len) - cfg.cp_len) / cfg.n_ifft
    th = sum(a * np.sin(2 * np.pi * c * t + p) for c, a, p in zip(cycles, amps, phases))
    return PhaseTrajectory(np.asarray(th, dtype=float), cfg.sample_rate_hz)


@pytest.fixture
def scenarios():
    return table1_scenarios()


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
