import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "fourlin",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("fourlin")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def loop_dft(values: np.ndarray) -> dict[tuple[int, ...], complex]:
    """Independent O(N^{2d}) DFT keyed by signed mode, written with plain loops."""
    N, d = values.shape[0], values.ndim
    signed = [i if i < (N + 1) // 2 else i - N for i in range(N)]
    out = {}
    pts = list(np.ndindex(values.shape))
    for midx in np.ndindex(values.shape):
        m = tuple(signed[i] for i in midx)
        acc = 0j
        for j in pts:
            phase = sum(mi * ji for mi, ji in zip(m, j)) % N
            acc += values[j] * np.exp(-2j * np.pi * phase / N)
        out[m] = acc / N**d
    return out


_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def acceptance():
    """Record the outcome line for one acceptance criterion."""

    def record(number: int, passed: bool, detail: str):
        _ACCEPTANCE[number] = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[k])
