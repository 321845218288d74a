import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from zlab.models import SeededGenerator, random_projection, random_psd, random_state  # noqa: E402

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def seeded():
    def make(seed: int, dim: int = 8, rank: int = 3, norm_cap: float = 1.0):
        gen = SeededGenerator(seed)
        return (random_psd(dim, gen, norm_cap), random_projection(dim, rank, gen),
                random_state(dim, gen), gen)
    return make


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
