import numpy as np
import pytest

from mmhybrid import build_signal_set, build_statistical_csi, make_rng
from mmhybrid.channel import PathAngles, sample_path_angles


@pytest.fixture
def rng():
    return make_rng(20240601)


def random_csi(seed, Nr, Nt, L):
    ang = sample_path_angles(make_rng(seed, 99), L, "uniform", np.pi / 4)
    return build_statistical_csi(ang, Nr, Nt)


def dft_aligned_csi(Nr, Nt, L, seed=0):
    """Receive angles with ``sin(theta) = 2 l / Nr`` so ``A_r^H A_r = I``."""
    aoa = np.arcsin(2.0 * np.arange(L) / Nr)
    aod = make_rng(seed, 98).uniform(0.2, 1.2, L)
    return build_statistical_csi(PathAngles(aoa, aod), Nr, Nt)


@pytest.fixture
def qpsk2():
    return build_signal_set("qpsk", 2)


ACCEPTANCE = {}


def record_acceptance(number, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d}: {detail}"
    ACCEPTANCE[number] = line
    print(line, flush=True)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
